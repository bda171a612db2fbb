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

// Encoder + head bundled with its vocabulary, ready for training, inference
// and checkpointing.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sms/autodiff.hpp"
#include "sms/data.hpp"
#include "sms/encoders.hpp"
#include "sms/sms_head.hpp"

namespace sms {

enum class EncoderKind { kLstm, kPrecomputed };

std::string to_string(EncoderKind k);
EncoderKind parse_encoder_kind(const std::string& s);

struct ModelConfig {
  EncoderKind encoder = EncoderKind::kLstm;
  enc::ChannelConfig channels;
  enc::LstmConfig lstm;
  head::HeadConfig head;  // head.d and head.num_relations are filled in by the model
  bool mask_entities = true;
  std::size_t representation_width = 0;  // precomputed path only

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// An instance converted to integer ids (and masked when configured).
struct Example {
  std::string id;
  std::vector<std::string> tokens;  // after masking
  enc::TokenIds ids;
  data::Span subj, obj;
  std::uint32_t label = 0;
  bool has_label = false;
};

struct Prediction {
  std::uint32_t label = 0;
  std::vector<double> probs;
};

template <typename T>
class RelationModel {
 public:
  RelationModel(const ModelConfig& cfg, data::Vocab vocab, std::uint64_t seed);

  // Restores a checkpoint written by save(). The metadata must describe the
  // model (config + vocab).
  static RelationModel load(const std::string& path);

  void save(const std::string& path, const nlohmann::json& extra = nlohmann::json::object()) const;
  nlohmann::json metadata() const;

  // Unknown gold labels throw DataError naming the instance.
  Example prepare(const data::RelationInstance& inst) const;
  std::vector<Example> prepare(const std::vector<data::RelationInstance>& instances) const;

  void set_representations(std::shared_ptr<const enc::RepresentationFile> reps);
  std::size_t load_pretrained(const data::WordVectors& vectors);

  enc::EncodedSentence<T> encode(ad::Graph<T>& g, const Example& ex) const;
  head::SmsOutput<T> forward(ad::Graph<T>& g, const Example& ex) const;
  ad::Tensor<T> loss(ad::Graph<T>& g, const Example& ex, head::SmsOutput<T>* out = nullptr) const;

  // Eval-mode prediction (no dropout); ties go to the lowest label id.
  Prediction predict(const Example& ex) const;

  ad::ParameterStore<T>& store() { return *store_; }
  const ad::ParameterStore<T>& store() const { return *store_; }
  const data::Vocab& vocab() const { return vocab_; }
  const ModelConfig& config() const { return cfg_; }
  const head::SmsHead<T>& sms_head() const { return *head_; }
  std::size_t width() const { return cfg_.head.d; }

 private:
  ModelConfig cfg_;
  data::Vocab vocab_;
  std::unique_ptr<ad::ParameterStore<T>> store_;
  std::unique_ptr<enc::Embedder<T>> embedder_;
  std::unique_ptr<enc::BiLstmEncoder<T>> lstm_;
  std::unique_ptr<head::SmsHead<T>> head_;
  std::shared_ptr<const enc::RepresentationFile> reps_;
};

}  // namespace sms
