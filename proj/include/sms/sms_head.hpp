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

// Multi-granularity attention head: mention attention, mention-aware
// segment attention over n-gram convolution banks, global semantic
// attention, aggregation and relation classification.

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sms/autodiff.hpp"
#include "sms/encoders.hpp"

namespace sms::head {

struct FeatureToggles {
  bool use_sentence = true;
  bool use_mention = true;
  bool use_segment = true;
  std::vector<std::size_t> kernel_sizes{1, 2, 3};

  // Throws ConfigError when nothing is enabled or kernel sizes are invalid.
  void validate() const;
  // Number of d-wide blocks fed to W_a.
  std::size_t feature_blocks() const;
  std::string name() const;

  static FeatureToggles all();
  static FeatureToggles sentence_only();
  static FeatureToggles mention_only();
  static FeatureToggles segment_only();
  // Parses "all", "sentence", "mention", "segment" or a '+'-joined mix.
  static FeatureToggles parse(const std::string& spec);

  nlohmann::json to_json() const;
  static FeatureToggles from_json(const nlohmann::json& j);
  bool operator==(const FeatureToggles&) const = default;
};

struct HeadConfig {
  std::size_t d = 400;
  std::size_t num_relations = 2;
  FeatureToggles toggles;
  bool per_kernel_query = false;  // separate W_m per kernel size
  bool conv_activation = false;   // tanh on segment banks
  double dropout = 0.0;           // on the aggregation input

  nlohmann::json to_json() const;
  static HeadConfig from_json(const nlohmann::json& j);
};

template <typename T>
struct Attention {
  ad::Tensor<T> context;  // [d]
  ad::Tensor<T> weights;  // [n]
};

// Scaled scores keys.query / sqrt(d).
template <typename T>
ad::Tensor<T> attention_scores(const ad::Tensor<T>& query, const ad::Tensor<T>& keys);

// weights = softmax(keys.query / sqrt(d)); context = weights^T keys.
template <typename T>
Attention<T> attend(const ad::Tensor<T>& query, const ad::Tensor<T>& keys);

template <typename T>
struct MentionFeatures {
  Attention<T> e1;
  Attention<T> e2;
};

template <typename T>
MentionFeatures<T> mention_features(const enc::EncodedSentence<T>& enc);

template <typename T>
struct SegmentBank {
  std::size_t t = 0;
  ad::Tensor<T> H_t;  // [n x d]
};

template <typename T>
std::vector<SegmentBank<T>> segment_banks(const ad::Tensor<T>& H,
                                          const std::vector<std::pair<std::size_t, ad::Tensor<T>>>& kernels,
                                          bool activation = false);

// One query matrix per bank; pass the same tensor repeatedly to share W_m.
template <typename T>
std::vector<Attention<T>> mention_aware_segments(const std::vector<SegmentBank<T>>& banks,
                                                 const ad::Tensor<T>& h1, const ad::Tensor<T>& h2,
                                                 const std::vector<ad::Tensor<T>>& w_m);

template <typename T>
Attention<T> global_semantic(const enc::EncodedSentence<T>& enc, const ad::Tensor<T>& w_s);

// Enabled blocks in the order h_s, h'_e1, h'_e2, h_m^t... Invalid tensors
// stand for disabled blocks.
template <typename T>
struct AggregateInputs {
  ad::Tensor<T> h_s;
  ad::Tensor<T> h_e1;
  ad::Tensor<T> h_e2;
  std::vector<ad::Tensor<T>> h_m;
};

template <typename T>
ad::Tensor<T> aggregate(const AggregateInputs<T>& in, const ad::Tensor<T>& w_a,
                        const ad::Tensor<T>& b_a, const FeatureToggles& toggles, double dropout = 0.0);

template <typename T>
struct Classification {
  ad::Tensor<T> logits;
  ad::Tensor<T> probs;
};

template <typename T>
Classification<T> classify(const ad::Tensor<T>& h_o, const ad::Tensor<T>& w_o, const ad::Tensor<T>& b_o);

template <typename T>
struct SmsOutput {
  ad::Tensor<T> logits;
  ad::Tensor<T> probs;
  ad::Tensor<T> h_o;
  ad::Tensor<T> attn_mention_1;
  ad::Tensor<T> attn_mention_2;
  ad::Tensor<T> attn_global;
  std::vector<std::pair<std::size_t, ad::Tensor<T>>> attn_segment;  // (t, weights)
};

// Owns the head parameters. All parameters are registered regardless of the
// toggles; only W_a's width depends on them.
template <typename T>
class SmsHead {
 public:
  SmsHead(ad::ParameterStore<T>& store, const HeadConfig& cfg, Rng& rng,
          const std::string& prefix = "head.");

  SmsOutput<T> forward(ad::Graph<T>& g, const enc::EncodedSentence<T>& enc) const;

  const HeadConfig& config() const { return cfg_; }
  std::size_t aggregate_width() const { return cfg_.toggles.feature_blocks() * cfg_.d; }

  ad::Parameter<T>& w_s() const { return *w_s_; }
  ad::Parameter<T>& w_a() const { return *w_a_; }
  ad::Parameter<T>& w_o() const { return *w_o_; }
  ad::Parameter<T>& kernel(std::size_t t) const;
  ad::Parameter<T>& w_m(std::size_t t) const;

 private:
  HeadConfig cfg_;
  ad::Parameter<T>* w_s_;
  std::map<std::size_t, ad::Parameter<T>*> w_m_;  // key 0 when shared
  std::map<std::size_t, ad::Parameter<T>*> kernels_;
  ad::Parameter<T>* w_a_;
  ad::Parameter<T>* b_a_;
  ad::Parameter<T>* w_o_;
  ad::Parameter<T>* b_o_;
};

}  // namespace sms::head
