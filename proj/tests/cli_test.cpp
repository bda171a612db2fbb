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
#include <sstream>

#include "doctest.h"
#include "sms/cli.hpp"
#include "test_util.hpp"

using namespace sms;
using namespace sms::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run sms_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kSmall = {"--set", "word_dim=8",  "--set", "pos_dim=2",   "--set", "ner_dim=2",
                                         "--set", "position_dim=2", "--set", "hidden=6", "--batch-size", "16"};

}  // namespace

TEST_CASE("config parser") {
  std::istringstream in(
      "# comment\n"
      "[model]\n"
      "hidden = 16   # trailing\n"
      "features = \"sentence+mention\"\n"
      "kernel_sizes = [1, 2]\n"
      "[train]\n"
      "lr = 0.25\n"
      "shuffle = false\n"
      "[data]\n"
      "train = \"a # b.json\"\n");
  const auto kv = parse_config(in, "t");
  RunConfig cfg;
  for (const auto& [k, v] : kv) cfg.set(k, v);
  CHECK(cfg.model.lstm.hidden == 16);
  CHECK(cfg.model.head.toggles.use_segment == false);
  CHECK(cfg.model.head.toggles.kernel_sizes == std::vector<std::size_t>{1, 2});
  CHECK(cfg.train.lr == 0.25);
  CHECK(cfg.train.shuffle == false);
  CHECK(cfg.train_path == "a # b.json");

  std::istringstream bad_section("[nope]\nx = 1\n");
  CHECK_THROWS_AS(parse_config(bad_section, "t"), ConfigError);
  std::istringstream no_eq("[model]\nhidden 4\n");
  CHECK_THROWS_AS(parse_config(no_eq, "t"), ConfigError);
  CHECK_THROWS_AS(cfg.set("not_a_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("hidden", "many"), ConfigError);
  CHECK_THROWS_AS(cfg.set("protocol", "f-score"), ConfigError);
}

TEST_CASE("resolved config text round-trips exactly") {
  auto cfg = resolve_config("tacred-lstm", "", {{"lr", "0.1"}, {"features", "mention+segment"}, {"seeds", "4,5"}});
  std::istringstream in(cfg.to_text());
  RunConfig back;
  for (const auto& [k, v] : parse_config(in, "round-trip")) back.set(k, v);
  CHECK(back.to_text() == cfg.to_text());
  for (const auto& [section, keys] : RunConfig::sections()) {
    for (const auto& k : keys) CHECK(back.get(k) == cfg.get(k));
  }
}

TEST_CASE("precedence: defaults, preset, file, overrides") {
  const auto file = sms::testing::temp_path("prec.toml");
  std::ofstream(file) << "[train]\nlr = 0.3\nepochs = 7\n";
  const auto cfg = resolve_config("semeval-lstm", file.string(), {{"epochs", "2"}});
  CHECK(cfg.train.lr == 0.3);
  CHECK(cfg.train.epochs == 2);
  CHECK(cfg.train.batch_size == 50);
  CHECK(cfg.train.protocol == eval::Protocol::kSemevalMacro);
  CHECK(cfg.model.mask_entities == false);
  CHECK(RunConfig{}.train.epochs == 30);
}

TEST_CASE("presets") {
  const auto lstm = resolve_config("tacred-lstm", "", {});
  CHECK(lstm.train.lr == 1.0);
  CHECK(lstm.train.lr_decay == 0.5);
  CHECK(lstm.train.epochs == 30);
  CHECK(lstm.train.batch_size == 50);
  CHECK(lstm.model.lstm.dropout == 0.5);
  CHECK(lstm.model.lstm.hidden == 200);
  CHECK(lstm.model.channels.input_width() == 420);

  const auto tf = resolve_config("tacred-frozen", "", {});
  CHECK(tf.model.encoder == EncoderKind::kPrecomputed);
  CHECK(tf.train.lr == 3e-5);
  CHECK(tf.train.warmup_steps == 300);
  CHECK(tf.train.batch_size == 64);
  CHECK(tf.train.epochs == 4);

  const auto sf = resolve_config("semeval-frozen", "", {});
  CHECK(sf.train.lr == 2e-5);
  CHECK(sf.train.batch_size == 32);
  CHECK(sf.train.epochs == 10);
  CHECK(sf.train.protocol == eval::Protocol::kSemevalMacro);

  CHECK_THROWS_AS(preset_path("missing"), ConfigError);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(sms_cli({}).code == kUsage);
  const auto r = sms_cli({"frobnicate"});
  CHECK(r.code == kUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(sms_cli({"train", "--data", "x.json"}).code == kUsage);
  CHECK(sms_cli({"train", "--set", "bogus=1", "--data", "a", "--dev", "b", "--out", "c"}).code == kUsage);
  CHECK(sms_cli({"--help"}).code == kOk);
}

TEST_CASE("gradcheck subcommand") {
  const auto r = sms_cli({"gradcheck", "--d", "8", "--n", "7", "--classes", "4", "--seed", "1"});
  CHECK(r.code == kOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["passed"].get<bool>());
  CHECK(j["max_rel_error"].get<double>() < 1e-4);
  CHECK(sms_cli({"gradcheck", "--d", "3"}).code == kUsage);
  CHECK(sms_cli({"gradcheck", "--tol", "0", "--eps", "1e-1"}).code == kNumeric);
}

TEST_CASE("synth, train, eval, predict, viz") {
  const auto dir = sms::testing::temp_path("cli_pipeline");
  fs::remove_all(dir);
  const auto data = (dir / "data").string();
  REQUIRE(sms_cli({"synth", "--out", data, "--train", "120", "--dev", "30", "--test", "40", "--seed", "2"}).code ==
          kOk);
  for (const char* f : {"train.json", "dev.json", "test.json", "triggers.json", "spec.json"}) {
    CHECK(fs::exists(fs::path(data) / f));
  }

  auto train_args = std::vector<std::string>{"train", "--data", data + "/train.json", "--dev", data + "/dev.json",
                                             "--test", data + "/test.json", "--epochs", "2", "--out",
                                             (dir / "run1").string()};
  train_args.insert(train_args.end(), kSmall.begin(), kSmall.end());
  const auto t1 = sms_cli(train_args);
  REQUIRE(t1.code == kOk);
  for (const char* f : {"best.ckpt", "metrics.jsonl", "config.toml", "test_report.json", "test_predictions.txt"}) {
    CHECK(fs::exists(dir / "run1" / f));
  }

  // the written config reproduces the run
  const auto rerun = sms_cli({"train", "--config", (dir / "run1" / "config.toml").string(), "--out",
                              (dir / "run2").string()});
  REQUIRE(rerun.code == kOk);
  CHECK(slurp(dir / "run1" / "metrics.jsonl") == slurp(dir / "run2" / "metrics.jsonl"));
  CHECK(slurp(dir / "run1" / "test_predictions.txt") == slurp(dir / "run2" / "test_predictions.txt"));

  const auto ckpt = (dir / "run1" / "best.ckpt").string();
  const auto ev = sms_cli({"eval", "--checkpoint", ckpt, "--data", data + "/test.json", "--protocol", "tacred-micro"});
  REQUIRE(ev.code == kOk);
  const auto report = nlohmann::json::parse(ev.out);
  CHECK(report["protocol"] == "tacred-micro");
  CHECK(report["total"] == 40);

  const auto pr = sms_cli({"predict", "--checkpoint", ckpt, "--data", data + "/test.json"});
  REQUIRE(pr.code == kOk);
  CHECK(std::count(pr.out.begin(), pr.out.end(), '\n') == 40);
  CHECK(pr.out + "" == slurp(dir / "run1" / "test_predictions.txt"));

  const auto vz = sms_cli({"viz", "--checkpoint", ckpt, "--data", data + "/test.json", "--render", "html", "--out",
                           (dir / "viz").string(), "--limit", "2"});
  CHECK(vz.code == kOk);
  std::size_t html = 0;
  for (const auto& e : fs::directory_iterator(dir / "viz")) html += e.path().extension() == ".html";
  CHECK(html == 2);
  CHECK(sms_cli({"viz", "--checkpoint", ckpt, "--data", data + "/test.json", "--no-color", "--top-k", "3"}).code ==
        kOk);

  CHECK(sms_cli({"eval", "--checkpoint", (dir / "none.ckpt").string(), "--data", data + "/test.json"}).code == kData);
  CHECK(sms_cli({"eval", "--checkpoint", ckpt, "--data", (dir / "none.json").string()}).code == kData);
}
