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

#include <regex>

#include "doctest.h"
#include "sms/attnviz.hpp"
#include "test_util.hpp"

using namespace sms;
using namespace sms::viz;

namespace {

AttentionTrace uniform_trace(std::size_t n) {
  AttentionTrace tr;
  tr.id = "u";
  for (std::size_t i = 0; i < n; ++i) tr.tokens.push_back("w" + std::to_string(i));
  const std::vector<double> u(n, 1.0 / static_cast<double>(n));
  tr.layers = {{"mention_1", 1, u}, {"mention_2", 1, u}, {"global", 1, u},
               {"segment_1", 1, u}, {"segment_2", 2, u}, {"segment_3", 3, u}};
  tr.predicted = tr.gold = "per:x";
  return tr;
}

std::vector<double> one_hot(std::size_t n, std::size_t k) {
  std::vector<double> v(n, 0.0);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("trace validation") {
  auto tr = uniform_trace(4);
  CHECK_NOTHROW(tr.validate());
  tr.layers[0].weights.push_back(0.0);
  CHECK_THROWS_AS(tr.validate(), DataError);
  tr = uniform_trace(4);
  tr.layers[2].weights[0] += 0.01;
  CHECK_THROWS_AS(tr.validate(), DataError);
  CHECK_THROWS_AS(emit_heatmap(tr), DataError);
  CHECK(uniform_trace(3).layer("segment_2").t == 2);
  CHECK(AttentionTrace::from_json(uniform_trace(3).to_json()).layers.size() == 6);
}

TEST_CASE("threshold rule: uniform weights colour nothing") {
  const auto tr = uniform_trace(8);
  CHECK(default_threshold(8) == doctest::Approx(1.5 / 8));
  for (const auto& l : tr.layers) {
    for (double x : token_intensity(l, 8, default_threshold(8))) CHECK(x == 0.0);
  }
  const auto text = emit_heatmap(tr, {Format::kTerminal, -1, false});
  CHECK(text.find('[', text.find('\n', text.find("legend")) + 1) == std::string::npos);
  const auto colored = emit_heatmap(tr);
  const auto body = colored.find('\n', colored.find("legend")) + 1;
  CHECK(colored.find("\x1b[", body) == std::string::npos);
}

TEST_CASE("one-hot layer colours exactly one token at full intensity") {
  auto tr = uniform_trace(6);
  tr.layers[2].weights = one_hot(6, 4);
  const auto inten = token_intensity(tr.layers[2], 6, default_threshold(6));
  CHECK(std::count_if(inten.begin(), inten.end(), [](double x) { return x > 0; }) == 1);
  CHECK(inten[4] == 1.0);
  const auto text = emit_heatmap(tr, {Format::kTerminal, -1, false});
  CHECK(text.find("[w4 1.00]") != std::string::npos);

  tr.layers[5].weights = one_hot(6, 1);
  const auto seg = token_intensity(tr.layers[5], 6, default_threshold(6));
  CHECK(seg == std::vector<double>{0, 1, 1, 1, 0, 0});
}

TEST_CASE("HTML is self-contained and preserves the weights") {
  auto tr = uniform_trace(5);
  tr.layers[0].weights = {0.1234564, 0.2, 0.3, 0.3765436, 0.0};
  const auto html = emit_heatmap(tr, {Format::kHtml, -1, true});
  CHECK(html.rfind("<!DOCTYPE html>", 0) == 0);
  CHECK(html.find("<link") == std::string::npos);
  CHECK(html.find("<script") == std::string::npos);
  CHECK(html.find("src=") == std::string::npos);

  const std::regex row_re(R"rx(<tr data-layer="([^"]+)"[^>]*>(.*?)</tr>)rx");
  const std::regex span_re(R"rx(data-pos="(\d+)" data-weight="([0-9.]+)")rx");
  std::size_t rows = 0;
  for (std::sregex_iterator it(html.begin(), html.end(), row_re), end; it != end; ++it) {
    const auto& layer = tr.layer((*it)[1].str());
    const std::string body = (*it)[2].str();
    std::size_t spans = 0;
    for (std::sregex_iterator s(body.begin(), body.end(), span_re); s != end; ++s) {
      const auto pos = std::stoul((*s)[1].str());
      CHECK(std::abs(std::stod((*s)[2].str()) - layer.weights[pos]) <= 5e-7);
      ++spans;
    }
    CHECK(spans == 5);
    ++rows;
  }
  CHECK(rows == 6);
  CHECK(emit_heatmap(tr, {Format::kHtml, -1, true}) == html);
}

TEST_CASE("argmax, top positions and windows") {
  CHECK(argmax_position({0.2, 0.4, 0.4}) == 1);
  CHECK(argmax_position({0.25, 0.25, 0.25, 0.25}) == 0);
  CHECK(top_positions({0.1, 0.5, 0.1, 0.3}, 2) == std::vector<std::size_t>{1, 3});
  CHECK(top_positions({0.2, 0.2, 0.2}, 2) == std::vector<std::size_t>{0, 1});
  const std::vector<std::string> toks = {"the", "CEO", "of", "Acme"};
  CHECK(window_text(toks, 0, 3) == "the CEO of");
  CHECK(window_text(toks, 3, 3) == "Acme");
}

TEST_CASE("top-k report") {
  auto tr = uniform_trace(4);
  tr.tokens = {"a", "b", "c", "d"};
  tr.layers[2].weights = one_hot(4, 2);
  tr.layers[5].weights = one_hot(4, 1);
  const auto single = top_k_report({tr}, 2);
  REQUIRE(single.size() == 6);
  for (const auto& row : single) {
    if (row.layer == "global") {
      CHECK(row.top1.at(0).text == "c");
      CHECK(row.tied_traces == 0);
    }
    if (row.layer == "segment_3") CHECK(row.top1.at(0).text == "b c d");
    if (row.layer == "mention_1") {
      CHECK(row.top1.at(0).text == "a");
      CHECK(row.tied_traces == 1);
    }
  }
  const auto all_uniform = top_k_report({uniform_trace(4), uniform_trace(4)}, 1);
  for (const auto& row : all_uniform) {
    CHECK(row.tied_traces == 2);
    CHECK(row.top1.at(0).text.rfind("w0", 0) == 0);
    CHECK(row.top1.at(0).frequency == 1.0);
  }
  CHECK(top_k_to_json(single).size() == 6);
  CHECK(top_k_to_text(single).find("segment_3") != std::string::npos);
}

TEST_CASE("traces from a model are valid") {
  const auto corpus = data::synth_generate(1, 20, 4, data::SynthSpec::default_spec());
  ModelConfig cfg;
  cfg.channels.word_dim = 6;
  cfg.channels.pos_dim = cfg.channels.ner_dim = cfg.channels.position_dim = 2;
  cfg.lstm.hidden = 4;
  RelationModel<float> model(cfg, data::build_vocab(corpus.train), 1);
  const auto ex = model.prepare(corpus.test[0]);
  const auto tr = trace_prediction(model, ex);
  CHECK_NOTHROW(tr.validate());
  CHECK(tr.layers.size() == 6);
  CHECK(tr.tokens == ex.tokens);
  CHECK(tr.gold == corpus.test[0].relation);
  CHECK(emit_heatmap(tr) == emit_heatmap(tr));
}
