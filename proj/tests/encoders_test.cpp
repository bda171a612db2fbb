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

#include <cmath>

#include "doctest.h"
#include "sms/encoders.hpp"
#include "test_util.hpp"

using namespace sms;
using namespace sms::enc;
using sms::testing::random_values;

namespace {

data::RelationInstance sample_instance() {
  data::RelationInstance inst;
  inst.id = "e1";
  inst.tokens = {"Steve", "Jobs", "led", "Apple", "in", "Cupertino"};
  inst.pos_tags = {"NNP", "NNP", "VBD", "NNP", "IN", "NNP"};
  inst.ner_tags = {"PERSON", "PERSON", "O", "ORGANIZATION", "O", "CITY"};
  inst.subj = {0, 2};
  inst.obj = {3, 4};
  inst.subj_type = "PERSON";
  inst.obj_type = "ORGANIZATION";
  inst.relation = "org:top_members/employees";
  return inst;
}

struct Fixture {
  data::Vocab vocab;
  ChannelConfig ch;
  LstmConfig lstm;
  ad::ParameterStore<double> store;
  Rng rng{3};
  std::unique_ptr<Embedder<double>> embedder;
  std::unique_ptr<BiLstmEncoder<double>> encoder;

  Fixture() {
    vocab = data::build_vocab({sample_instance()});
    ch.word_dim = 5;
    ch.pos_dim = ch.ner_dim = ch.position_dim = 3;
    lstm.hidden = 4;
    embedder = std::make_unique<Embedder<double>>(store, vocab, ch, rng);
    encoder = std::make_unique<BiLstmEncoder<double>>(store, ch.input_width(), lstm, rng);
  }

  std::vector<double> encode(const data::RelationInstance& inst, bool training = false, std::uint64_t seed = 0) {
    ad::Graph<double> g(seed, training);
    return encoder->encode(g, embedder->embed(g, index_tokens(inst, vocab, ch))).to_vector();
  }
};

}  // namespace

TEST_CASE("channel widths") {
  ChannelConfig c;
  CHECK(c.input_width() == 420);
  c.use_ner = false;
  CHECK(c.input_width() == 390);
  c.use_position = false;
  CHECK(c.input_width() == 330);
  CHECK(ChannelConfig::from_json(c.to_json()).input_width() == 330);
}

TEST_CASE("relative position ids") {
  const data::Span s{3, 5};
  const std::size_t m = 50;
  CHECK(relative_position_id(3, s, m) == m);
  CHECK(relative_position_id(4, s, m) == m);
  CHECK(relative_position_id(2, s, m) == m - 1);
  CHECK(relative_position_id(5, s, m) == m + 1);
  CHECK(relative_position_id(0, {100, 101}, m) == 0);
  CHECK(relative_position_id(200, {0, 1}, m) == 2 * m);
}

TEST_CASE("token indexing uses UNK for unseen words") {
  Fixture f;
  auto inst = sample_instance();
  inst.tokens[2] = "zzz-unseen";
  const auto ids = index_tokens(inst, f.vocab, f.ch);
  CHECK(ids.word[2] == data::Vocab::kUnk);
  CHECK(ids.subj_pos[0] == f.ch.max_distance);
  CHECK(ids.obj_pos[3] == f.ch.max_distance);
  inst.obj = {5, 9};
  CHECK_THROWS_AS(index_tokens(inst, f.vocab, f.ch), SpanError);
}

TEST_CASE("embedding concatenates the channels") {
  Fixture f;
  ad::Graph<double> g;
  const auto ids = index_tokens(sample_instance(), f.vocab, f.ch);
  const auto e = f.embedder->embed(g, ids);
  REQUIRE(e.rows() == 6);
  REQUIRE(e.cols() == f.ch.input_width());
  const auto& word = f.store.get("embed.word");
  for (std::size_t c = 0; c < f.ch.word_dim; ++c) {
    CHECK(e.at(2, c) == word.value[ids.word[2] * f.ch.word_dim + c]);
  }
  const auto& pos = f.store.get("embed.pos");
  CHECK(e.at(1, f.ch.word_dim) == pos.value[ids.pos[1] * f.ch.pos_dim]);
}

TEST_CASE("pretrained rows copied and coverage counted") {
  Fixture f;
  data::WordVectors wv;
  wv.dim = 5;
  wv.vectors["led"] = {1, 2, 3, 4, 5};
  wv.vectors["Apple"] = {0, 0, 0, 0, 1};
  wv.vectors["absent"] = {9, 9, 9, 9, 9};
  CHECK(f.embedder->load_pretrained(f.vocab, wv) == 2);
  const auto& word = f.store.get("embed.word");
  const auto id = f.vocab.word_id("led");
  CHECK(word.value[id * 5 + 3] == 4.0);
  wv.dim = 4;
  CHECK_THROWS_AS(f.embedder->load_pretrained(f.vocab, wv), ConfigError);
}

TEST_CASE("fused LSTM scan matches the cell-by-cell reference") {
  Rng rng(17);
  for (bool reverse : {false, true}) {
    for (std::size_t n : {1, 5}) {
      const std::size_t h = 3;
      ad::Graph<double> g;
      auto xw = g.constant({n, 4 * h}, random_values(rng, n * 4 * h));
      auto u = g.constant({h, 4 * h}, random_values(rng, h * 4 * h));
      const auto fused = ad::lstm_scan(xw, u, reverse).to_vector();
      const auto ref = lstm_reference(xw, u, reverse).to_vector();
      CHECK(sms::testing::max_abs_diff(fused, ref) < 1e-12);
    }
  }
}

TEST_CASE("fused LSTM gradient check on a 5-token input") {
  Rng rng(23);
  ad::ParameterStore<double> store;
  sms::testing::random_param(store, "xw", {5, 12}, rng);
  sms::testing::random_param(store, "u", {3, 12}, rng);
  const auto w = random_values(rng, 9);
  for (bool reverse : {false, true}) {
    auto rep = ad::grad_check(store, [&](ad::Graph<double>& g) {
      auto hs = ad::lstm_scan(g.param(store.get("xw")), g.param(store.get("u")), reverse);
      return ad::matvec(g.constant({1, 9}, w), ad::concat<double>({ad::row(hs, 0), ad::row(hs, 2), ad::row(hs, 4)}));
    });
    CHECK(rep.passed());
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("zero parameters give zero output") {
  Fixture f;
  for (auto& p : f.store.all()) {
    if (p.name.rfind("lstm.", 0) == 0) std::fill(p.value.begin(), p.value.end(), 0.0);
  }
  for (double v : f.encode(sample_instance())) CHECK(v == 0.0);
}

TEST_CASE("single token sequence") {
  Fixture f;
  auto inst = sample_instance();
  inst.tokens = {"Apple"};
  inst.pos_tags = {"NNP"};
  inst.ner_tags = {"ORGANIZATION"};
  inst.subj = inst.obj = {0, 1};
  const auto out = f.encode(inst);
  CHECK(out.size() == 8);
}

TEST_CASE("every position sees every token") {
  Fixture f;
  const auto base_inst = sample_instance();
  const auto base = f.encode(base_inst);
  for (std::size_t k = 0; k < base_inst.size(); ++k) {
    auto changed = base_inst;
    changed.tokens[k] = changed.tokens[k] == "led" ? "in" : "led";
    const auto out = f.encode(changed);
    for (std::size_t i = 0; i < base_inst.size(); ++i) {
      double diff = 0;
      for (std::size_t c = 0; c < 8; ++c) diff = std::max(diff, std::abs(out[i * 8 + c] - base[i * 8 + c]));
      CHECK(diff > 0);
    }
  }
}

TEST_CASE("eval encoding is deterministic, training applies dropout") {
  Fixture f;
  const auto inst = sample_instance();
  CHECK(f.encode(inst) == f.encode(inst));
  CHECK(f.encode(inst, false, 1) == f.encode(inst, false, 2));
  CHECK(f.encode(inst, true, 1) == f.encode(inst, true, 1));
  CHECK(f.encode(inst, true, 1) != f.encode(inst, false, 1));
}

TEST_CASE("pooling matches loop oracle") {
  Rng rng(5);
  const std::size_t n = 7, d = 4;
  ad::Graph<double> g;
  const auto vals = random_values(rng, n * d);
  auto H = g.constant({n, d}, vals);
  const data::Span s1{1, 3}, s2{4, 7};
  const auto enc = pool(H, s1, s2);
  auto oracle = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> m(d, -1e300);
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t c = 0; c < d; ++c) m[c] = std::max(m[c], vals[i * d + c]);
    return m;
  };
  CHECK(enc.h_e1.to_vector() == oracle(1, 3));
  CHECK(enc.h_e2.to_vector() == oracle(4, 7));
  CHECK(enc.h_g.to_vector() == oracle(0, n));
  CHECK(enc.n == n);
  CHECK(enc.d == d);
  CHECK_FALSE(enc.spans_overlap);
  for (std::size_t c = 0; c < d; ++c) {
    CHECK(enc.h_g.at(c) >= enc.h_e1.at(c));
    CHECK(enc.h_g.at(c) >= enc.h_e2.at(c));
  }
  CHECK(pool(H, {2, 4}, {3, 5}).spans_overlap);
  CHECK_THROWS_AS(pool(H, {2, 2}, {3, 5}), SpanError);

  auto one = g.constant({1, d}, {1, 2, 3, 4});
  const auto e1 = pool(one, {0, 1}, {0, 1});
  CHECK(e1.h_e1.to_vector() == one.to_vector());
  CHECK(e1.h_g.to_vector() == one.to_vector());
}

TEST_CASE("representation file round-trip") {
  Rng rng(8);
  Representation a{4, 3, {}}, b{9, 3, {}};
  for (std::size_t i = 0; i < 12; ++i) a.values.push_back(static_cast<float>(rng.uniform(-1, 1)));
  for (std::size_t i = 0; i < 27; ++i) b.values.push_back(static_cast<float>(rng.uniform(-1, 1)));
  const auto p = sms::testing::temp_path("reps.bin").string();
  RepresentationFile::write(p, {{"short", a}, {"long", b}});
  const auto f = RepresentationFile::load(p);
  CHECK(f.size() == 2);
  CHECK(f.get("short").values == a.values);
  CHECK(f.get("long").n == 9);
  CHECK(f.get("long").values == b.values);

  ad::Graph<float> g;
  const auto t = load_precomputed(g, f, "long", 3);
  CHECK(t.rows() == 9);
  CHECK(t.to_vector() == b.values);
  CHECK_THROWS_AS(load_precomputed(g, f, "long", 4), ConfigError);
  try {
    f.get("missing-id");
    FAIL("expected lookup error");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("missing-id") != std::string::npos);
  }
}

TEST_CASE("precomputed spans skip the leading marker row") {
  auto inst = sample_instance();
  const auto [s1, s2] = precomputed_spans(inst, inst.size() + 2);
  CHECK(s1 == data::Span{1, 3});
  CHECK(s2 == data::Span{4, 5});
  const auto [t1, t2] = precomputed_spans(inst, inst.size());
  CHECK(t1 == inst.subj);
  CHECK(t2 == inst.obj);
  CHECK_THROWS_AS(precomputed_spans(inst, 3), ConfigError);
}
