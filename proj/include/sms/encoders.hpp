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

// Token representations H and the pooled entity/sentence vectors built on
// top of them. Two sources of H are supported: a trainable multi-channel
// BiLSTM and precomputed contextual vectors read from an SMSR file.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sms/autodiff.hpp"
#include "sms/data.hpp"

namespace sms::enc {

struct ChannelConfig {
  std::size_t word_dim = 300;
  std::size_t pos_dim = 30;
  std::size_t ner_dim = 30;
  std::size_t position_dim = 30;  // per positional channel (subject and object)
  bool use_pos = true;
  bool use_ner = true;
  bool use_position = true;
  std::size_t max_distance = 50;
  // Uniform init half-width for POS/NER/position tables.
  double small_init = 0.5 / 30.0;
  // Uniform init half-width for word rows not covered by pretrained vectors.
  double word_init = 1.0;

  std::size_t input_width() const;
  std::size_t position_vocab() const { return 2 * max_distance + 1; }

  nlohmann::json to_json() const;
  static ChannelConfig from_json(const nlohmann::json& j);
};

// Signed distance from token i to span s (0 inside), clipped to
// +/- max_distance and shifted to a non-negative id.
std::uint32_t relative_position_id(std::size_t i, const data::Span& s, std::size_t max_distance);

// Integer inputs for one instance.
struct TokenIds {
  std::vector<std::uint32_t> word, pos, ner, subj_pos, obj_pos;
};

TokenIds index_tokens(const data::RelationInstance& inst, const data::Vocab& vocab,
                      const ChannelConfig& cfg);

template <typename T>
class Embedder {
 public:
  // Registers word/pos/ner/position tables under "<prefix>..." and
  // initializes them uniformly.
  Embedder(ad::ParameterStore<T>& store, const data::Vocab& vocab, const ChannelConfig& cfg,
           Rng& rng, const std::string& prefix = "embed.");

  // Copies pretrained rows into the word table. Returns how many vocabulary
  // words were covered.
  std::size_t load_pretrained(const data::Vocab& vocab, const data::WordVectors& vectors);

  // [n x input_width]: word | pos | ner | subject distance | object distance.
  ad::Tensor<T> embed(ad::Graph<T>& g, const TokenIds& ids) const;

  const ChannelConfig& config() const { return cfg_; }

 private:
  ChannelConfig cfg_;
  ad::Parameter<T>* word_;
  ad::Parameter<T>* pos_ = nullptr;
  ad::Parameter<T>* ner_ = nullptr;
  ad::Parameter<T>* subj_pos_ = nullptr;
  ad::Parameter<T>* obj_pos_ = nullptr;
};

struct LstmConfig {
  std::size_t hidden = 200;  // per direction; output width is 2 * hidden
  double dropout = 0.5;      // on the embedded input and on the output

  nlohmann::json to_json() const { return {{"hidden", hidden}, {"dropout", dropout}}; }
  static LstmConfig from_json(const nlohmann::json& j);
};

template <typename T>
class BiLstmEncoder {
 public:
  BiLstmEncoder(ad::ParameterStore<T>& store, std::size_t input_width, const LstmConfig& cfg,
                Rng& rng, const std::string& prefix = "lstm.");

  // E is [n x input_width]; returns H [n x 2*hidden]. Dropout is active only
  // when the graph is in training mode.
  ad::Tensor<T> encode(ad::Graph<T>& g, const ad::Tensor<T>& e) const;

  std::size_t output_width() const { return 2 * cfg_.hidden; }

 private:
  struct Direction {
    ad::Parameter<T>* w;  // [input_width x 4h]
    ad::Parameter<T>* b;  // [4h]
    ad::Parameter<T>* u;  // [h x 4h]
  };
  LstmConfig cfg_;
  Direction fwd_, bwd_;
};

// One recurrence written with primitive ops (sigmoid, tanh, mul, add). Used
// to cross-check the fused lstm_scan kernel.
template <typename T>
ad::Tensor<T> lstm_reference(const ad::Tensor<T>& xw, const ad::Tensor<T>& u, bool reverse);

template <typename T>
struct EncodedSentence {
  ad::Tensor<T> H;
  ad::Tensor<T> h_e1;
  ad::Tensor<T> h_e2;
  ad::Tensor<T> h_g;
  std::size_t n = 0;
  std::size_t d = 0;
  bool spans_overlap = false;
};

// Max-pools entity spans and the whole sequence. Spans index rows of H.
template <typename T>
EncodedSentence<T> pool(const ad::Tensor<T>& H, const data::Span& s1, const data::Span& s2);

// ---------------------------------------------------------------------------
// Precomputed representation file ("SMSR").

struct Representation {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> values;  // row-major n x d
};

class RepresentationFile {
 public:
  static RepresentationFile load(const std::string& path);
  static void write(const std::string& path,
                    const std::vector<std::pair<std::string, Representation>>& records);

  bool contains(const std::string& id) const { return records_.count(id) != 0; }
  const Representation& get(const std::string& id) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::unordered_map<std::string, Representation> records_;
  std::string path_;
};

// Returns the stored matrix as a constant (requires_grad false). Throws
// LookupError for unknown ids and ConfigError when the width differs from
// `expected_width` (pass 0 to skip the check).
template <typename T>
ad::Tensor<T> load_precomputed(ad::Graph<T>& g, const RepresentationFile& file,
                               const std::string& id, std::size_t expected_width);

// Entity spans for a precomputed matrix. When the matrix carries start/end
// marker rows (rows == tokens + 2) spans shift by one; the markers still
// take part in the global pool.
std::pair<data::Span, data::Span> precomputed_spans(const data::RelationInstance& inst,
                                                    std::size_t rows);

}  // namespace sms::enc
