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

#include "sms/model.hpp"

#include <algorithm>

namespace sms {

using nlohmann::json;

std::string to_string(EncoderKind k) { return k == EncoderKind::kLstm ? "lstm" : "precomputed"; }

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "lstm") return EncoderKind::kLstm;
  if (s == "precomputed") return EncoderKind::kPrecomputed;
  throw ConfigError("unknown encoder '" + s + "' (expected lstm or precomputed)");
}

json ModelConfig::to_json() const {
  return {{"encoder", to_string(encoder)},
          {"channels", channels.to_json()},
          {"lstm", lstm.to_json()},
          {"head", head.to_json()},
          {"mask_entities", mask_entities},
          {"representation_width", representation_width}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    c.encoder = parse_encoder_kind(j.value("encoder", std::string("lstm")));
    if (j.contains("channels")) c.channels = enc::ChannelConfig::from_json(j.at("channels"));
    if (j.contains("lstm")) c.lstm = enc::LstmConfig::from_json(j.at("lstm"));
    if (j.contains("head")) c.head = head::HeadConfig::from_json(j.at("head"));
    c.mask_entities = j.value("mask_entities", c.mask_entities);
    c.representation_width = j.value("representation_width", c.representation_width);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

template <typename T>
RelationModel<T>::RelationModel(const ModelConfig& cfg, data::Vocab vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)), store_(std::make_unique<ad::ParameterStore<T>>()) {
  Rng rng(seed);
  cfg_.head.num_relations = vocab_.relations.size();
  if (cfg_.encoder == EncoderKind::kLstm) {
    embedder_ = std::make_unique<enc::Embedder<T>>(*store_, vocab_, cfg_.channels, rng);
    lstm_ = std::make_unique<enc::BiLstmEncoder<T>>(*store_, cfg_.channels.input_width(), cfg_.lstm, rng);
    cfg_.head.d = lstm_->output_width();
  } else {
    if (cfg_.representation_width == 0) {
      throw ConfigError("precomputed encoder needs representation_width");
    }
    cfg_.head.d = cfg_.representation_width;
  }
  head_ = std::make_unique<head::SmsHead<T>>(*store_, cfg_.head, rng);
}

template <typename T>
json RelationModel<T>::metadata() const {
  return {{"format", "sms-model"}, {"model", cfg_.to_json()}, {"vocab", vocab_.to_json()}};
}

template <typename T>
void RelationModel<T>::save(const std::string& path, const json& extra) const {
  json meta = metadata();
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  ad::save_checkpoint(path, *store_, meta.dump());
}

template <typename T>
RelationModel<T> RelationModel<T>::load(const std::string& path) {
  json meta;
  try {
    meta = json::parse(ad::read_checkpoint_metadata(path));
  } catch (const json::exception& e) {
    throw ParseError(path + ": checkpoint metadata is not valid JSON: " + e.what());
  }
  if (!meta.is_object() || !meta.contains("model") || !meta.contains("vocab")) {
    throw ParseError(path + ": checkpoint does not describe a relation model");
  }
  RelationModel model(ModelConfig::from_json(meta.at("model")), data::Vocab::from_json(meta.at("vocab")), 0);
  ad::load_checkpoint(path, *model.store_);
  return model;
}

template <typename T>
Example RelationModel<T>::prepare(const data::RelationInstance& raw) const {
  raw.validate();
  const bool mask = cfg_.mask_entities && cfg_.encoder == EncoderKind::kLstm;
  const data::RelationInstance inst = mask ? data::mask_entities(raw) : raw;
  Example ex;
  ex.id = inst.id;
  ex.tokens = inst.tokens;
  ex.subj = inst.subj;
  ex.obj = inst.obj;
  if (cfg_.encoder == EncoderKind::kLstm) ex.ids = enc::index_tokens(inst, vocab_, cfg_.channels);
  if (!inst.relation.empty()) {
    if (!vocab_.relations.contains(inst.relation)) {
      throw DataError("instance " + inst.id + ": relation '" + inst.relation + "' is not in the label set");
    }
    ex.label = vocab_.relations.at(inst.relation);
    ex.has_label = true;
  }
  return ex;
}

template <typename T>
std::vector<Example> RelationModel<T>::prepare(const std::vector<data::RelationInstance>& instances) const {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(prepare(inst));
  return out;
}

template <typename T>
void RelationModel<T>::set_representations(std::shared_ptr<const enc::RepresentationFile> reps) {
  reps_ = std::move(reps);
}

template <typename T>
std::size_t RelationModel<T>::load_pretrained(const data::WordVectors& vectors) {
  if (!embedder_) throw ConfigError("pretrained word vectors need the lstm encoder");
  return embedder_->load_pretrained(vocab_, vectors);
}

template <typename T>
enc::EncodedSentence<T> RelationModel<T>::encode(ad::Graph<T>& g, const Example& ex) const {
  if (cfg_.encoder == EncoderKind::kLstm) {
    auto H = lstm_->encode(g, embedder_->embed(g, ex.ids));
    return enc::pool(H, ex.subj, ex.obj);
  }
  if (!reps_) throw ConfigError("precomputed encoder has no representation file attached");
  auto H = enc::load_precomputed(g, *reps_, ex.id, cfg_.head.d);
  data::RelationInstance shape_only;
  shape_only.id = ex.id;
  shape_only.tokens = ex.tokens;
  shape_only.subj = ex.subj;
  shape_only.obj = ex.obj;
  auto [s1, s2] = enc::precomputed_spans(shape_only, H.rows());
  return enc::pool(H, s1, s2);
}

template <typename T>
head::SmsOutput<T> RelationModel<T>::forward(ad::Graph<T>& g, const Example& ex) const {
  return head_->forward(g, encode(g, ex));
}

template <typename T>
ad::Tensor<T> RelationModel<T>::loss(ad::Graph<T>& g, const Example& ex, head::SmsOutput<T>* out) const {
  if (!ex.has_label) throw DataError("instance " + ex.id + " has no gold relation");
  auto o = forward(g, ex);
  auto l = ad::softmax_cross_entropy(o.logits, ex.label);
  if (out) *out = o;
  return l;
}

template <typename T>
Prediction RelationModel<T>::predict(const Example& ex) const {
  ad::Graph<T> g(0, false);
  auto o = forward(g, ex);
  auto p = o.probs.value();
  Prediction pred;
  pred.probs.assign(p.begin(), p.end());
  pred.label = static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin());
  return pred;
}

template class RelationModel<float>;
template class RelationModel<double>;

}  // namespace sms
