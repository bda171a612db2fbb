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

#pragma once

// Attention heatmaps (terminal and static HTML) and most-attended token
// summaries.

#include <string>
#include <vector>

#include "json.hpp"
#include "sms/model.hpp"

namespace sms::viz {

struct AttentionLayer {
  std::string name;   // mention_1, mention_2, global, segment_<t>
  std::size_t t = 1;  // window width; 1 for token-level layers
  std::vector<double> weights;
};

struct AttentionTrace {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<AttentionLayer> layers;
  std::string predicted;
  std::string gold;

  // Throws DataError when a layer length differs from the token count or a
  // layer does not sum to 1 within 1e-6.
  void validate() const;
  const AttentionLayer& layer(const std::string& name) const;

  nlohmann::json to_json() const;
  static AttentionTrace from_json(const nlohmann::json& j);
};

template <typename T>
AttentionTrace make_trace(const Example& ex, const head::SmsOutput<T>& out, const std::string& predicted,
                          const std::string& gold);

// Traces a model prediction (eval mode).
AttentionTrace trace_prediction(const RelationModel<float>& model, const Example& ex);

enum class Format { kTerminal, kHtml };

struct HeatmapOptions {
  Format format = Format::kTerminal;
  double threshold = -1;  // < 0 selects 1.5 / n
  bool color = true;      // terminal only; false prints bracketed weights
};

double default_threshold(std::size_t n);

// Per-token colour intensity in [0, 1] for a layer: weight / layer max, zero
// below the threshold. Segment windows colour tokens i..i+t-1; a token takes
// the strongest covering window.
std::vector<double> token_intensity(const AttentionLayer& layer, std::size_t n, double threshold);

std::string emit_heatmap(const AttentionTrace& trace, const HeatmapOptions& opts = {});

struct TopKEntry {
  std::string text;       // token or n-gram
  std::size_t count = 0;  // traces where it ranked in the top k (top-1 for `top1`)
  double frequency = 0;   // count / traces
};

struct LayerTopK {
  std::string layer;
  std::vector<TopKEntry> top1;
  std::vector<TopKEntry> topk;
  std::size_t tied_traces = 0;  // traces whose maximum weight was shared
};

// Argmax ties go to the lowest position.
std::size_t argmax_position(const std::vector<double>& weights);
std::vector<std::size_t> top_positions(const std::vector<double>& weights, std::size_t k);
std::string window_text(const std::vector<std::string>& tokens, std::size_t start, std::size_t t);

std::vector<LayerTopK> top_k_report(const std::vector<AttentionTrace>& traces, std::size_t k);
nlohmann::json top_k_to_json(const std::vector<LayerTopK>& report);
std::string top_k_to_text(const std::vector<LayerTopK>& report, std::size_t limit = 5);

}  // namespace sms::viz
