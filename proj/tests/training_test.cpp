/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "sms/training.hpp"
#include "test_util.hpp"

using namespace sms;
using namespace sms::train;

namespace {

struct Setup {
  data::SynthCorpus corpus;
  ModelConfig cfg;
  data::Vocab vocab;

  explicit Setup(std::size_t n_train = 64, std::size_t n_test = 32) {
    corpus = data::synth_generate(3, n_train, n_test, data::SynthSpec::default_spec());
    vocab = data::build_vocab(corpus.train);
    cfg.channels.word_dim = 10;
    cfg.channels.pos_dim = cfg.channels.ner_dim = cfg.channels.position_dim = 3;
    cfg.lstm.hidden = 8;
    cfg.lstm.dropout = 0.0;
  }

  RelationModel<float> model(std::uint64_t seed = 1) const { return RelationModel<float>(cfg, vocab, seed); }
};

TrainConfig quick(std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 8;
  tc.lr = 0.5;
  return tc;
}

std::vector<const Example*> ptrs(const std::vector<Example>& xs) {
  std::vector<const Example*> out;
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

double batch_loss(const RelationModel<float>& m, const std::vector<Example>& xs) {
  double total = 0;
  for (const auto& x : xs) {
    ad::Graph<float> g;
    total += m.loss(g, x).item();
  }
  return total / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("config defaults and validation") {
  TrainConfig tc;
  CHECK(tc.lr == 1.0);
  CHECK(tc.lr_decay == 0.5);
  CHECK(tc.epochs == 30);
  CHECK(tc.batch_size == 50);
  CHECK(tc.patience == 1);
  CHECK(tc.grad_clip == 5.0);
  CHECK_NOTHROW(tc.validate());
  auto bad = tc;
  bad.lr_decay = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tc;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tc;
  bad.lr = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(TrainConfig::from_json(tc.to_json()).to_json() == tc.to_json());
}

TEST_CASE("learning-rate schedule") {
  TrainConfig tc;
  tc.lr = 1.0;
  tc.lr_decay = 0.5;
  for (std::size_t k = 0; k < 6; ++k) CHECK(scheduled_lr(tc, k, 1000) == std::pow(0.5, static_cast<double>(k)));
  tc.warmup_steps = 4;
  tc.lr = 3e-5;
  CHECK(scheduled_lr(tc, 0, 0) == doctest::Approx(3e-5 * 0.25));
  CHECK(scheduled_lr(tc, 0, 1) == doctest::Approx(3e-5 * 0.5));
  CHECK(scheduled_lr(tc, 0, 3) == doctest::Approx(3e-5));
  CHECK(scheduled_lr(tc, 0, 50) == doctest::Approx(3e-5));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  Setup s;
  auto m = s.model();
  const auto train_set = m.prepare(s.corpus.train);
  const auto before = m.store().snapshot();
  sgd_step(m, ptrs(train_set), 0.0, 5.0, 1);
  CHECK(m.store().snapshot() == before);

  auto tc = quick(1);
  tc.lr = 0.0;
  TrainOptions opts;
  opts.restore_best = false;
  train::train(m, train_set, m.prepare(s.corpus.test), tc, opts);
  CHECK(m.store().snapshot() == before);
}

TEST_CASE("one small step decreases the loss on a fixed batch") {
  Setup s;
  auto m = s.model(4);
  auto batch = m.prepare(s.corpus.train);
  batch.resize(8);
  const double before = batch_loss(m, batch);
  sgd_step(m, ptrs(batch), 1e-3, 0.0, 1);
  CHECK(batch_loss(m, batch) < before);
}

TEST_CASE("non-finite loss aborts") {
  Setup s;
  auto m = s.model();
  auto batch = m.prepare(s.corpus.train);
  batch.resize(2);
  auto& w = m.store().get("head.W_o");
  w.value[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(sgd_step(m, ptrs(batch), 0.1, 5.0, 1), NumericError);
}

TEST_CASE("training is reproducible and writes its artifacts") {
  Setup s;
  const auto dir = sms::testing::temp_path("train_run");
  std::filesystem::remove_all(dir);
  auto run = [&](const std::string& out) {
    auto m = s.model(7);
    TrainOptions opts;
    opts.out_dir = out;
    auto res = train::train(m, m.prepare(s.corpus.train), m.prepare(s.corpus.test), quick(3), opts);
    return std::make_pair(metrics_jsonl(res.log), m.store().snapshot());
  };
  const auto a = run(dir.string());
  const auto b = run("");
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(std::filesystem::exists(dir / "best.ckpt"));
  CHECK(std::filesystem::exists(dir / "config.json"));
  std::ifstream in(dir / "metrics.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "train_loss", "dev_P", "dev_R", "dev_F1", "lr"}) CHECK(j.contains(key));
    ++lines;
  }
  CHECK(lines == 3);

  auto restored = RelationModel<float>::load((dir / "best.ckpt").string());
  const auto dev = restored.prepare(s.corpus.test);
  CHECK(predict_labels(restored, dev) == predict_labels(restored, dev));
}

TEST_CASE("decay fires on dev stagnation") {
  Setup s;
  auto m = s.model(2);
  auto tc = quick(4);
  tc.lr = 0.0;  // dev F1 never improves after the first epoch
  const auto res = train::train(m, m.prepare(s.corpus.train), m.prepare(s.corpus.test), tc);
  REQUIRE(res.log.size() == 4);
  CHECK(res.decays == 3);
  CHECK(res.best_epoch == 1);
}

TEST_CASE("evaluate_dev: determinism, oracle agreement, empty set") {
  Setup s;
  auto m = s.model();
  const auto dev = m.prepare(s.corpus.test);
  const auto r1 = evaluate_dev(m, dev, eval::Protocol::kTacredMicro);
  const auto r2 = evaluate_dev(m, dev, eval::Protocol::kTacredMicro);
  CHECK(r1.f1 == r2.f1);
  const auto direct = eval::micro_f1(gold_labels(m, dev), predict_labels(m, dev));
  CHECK(r1.f1 == direct.f1);
  CHECK_THROWS_AS(evaluate_dev(m, {}, eval::Protocol::kTacredMicro), UsageError);
}

TEST_CASE("overfits a 32-instance synthetic set") {
  Setup s(32, 8);
  auto m = s.model(5);
  const auto train_set = m.prepare(s.corpus.train);
  auto tc = quick(300);
  tc.lr_decay = 1.0;
  double acc = 0;
  for (std::size_t chunk = 0; chunk < 30 && acc < 1.0; ++chunk) {
    tc.epochs = 10;
    tc.seed = chunk + 1;
    TrainOptions opts;
    opts.restore_best = false;
    train::train(m, train_set, train_set, tc, opts);
    const auto pred = predict_labels(m, train_set);
    const auto gold = gold_labels(m, train_set);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) ok += pred[i] == gold[i];
    acc = static_cast<double>(ok) / static_cast<double>(gold.size());
  }
  CHECK(acc == 1.0);
}

TEST_CASE("model checkpoint round-trip") {
  Setup s;
  auto m = s.model(9);
  const auto path = sms::testing::temp_path("model.ckpt").string();
  m.save(path, {{"note", "x"}});
  auto back = RelationModel<float>::load(path);
  CHECK(back.store().snapshot() == m.store().snapshot());
  CHECK(back.vocab().words.keys() == m.vocab().words.keys());
  const auto ex = m.prepare(s.corpus.test[0]);
  CHECK(back.predict(ex).probs == m.predict(ex).probs);

  auto inst = s.corpus.test[0];
  inst.relation = "not-a-label";
  CHECK_THROWS_AS(m.prepare(inst), DataError);
}
