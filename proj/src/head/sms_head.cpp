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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sms/sms_head.hpp"

namespace sms::head {

using nlohmann::json;

void FeatureToggles::validate() const {
  if (!use_sentence && !use_mention && !use_segment) {
    throw ConfigError("at least one feature group (sentence, mention, segment) must be enabled");
  }
  if (kernel_sizes.empty()) throw ConfigError("kernel size set is empty");
  std::set<std::size_t> seen;
  for (auto t : kernel_sizes) {
    if (t == 0) throw ConfigError("kernel size must be at least 1");
    if (!seen.insert(t).second) throw ConfigError("duplicate kernel size " + std::to_string(t));
  }
}

std::size_t FeatureToggles::feature_blocks() const {
  return (use_sentence ? 1 : 0) + (use_mention ? 2 : 0) + (use_segment ? kernel_sizes.size() : 0);
}

std::string FeatureToggles::name() const {
  if (use_sentence && use_mention && use_segment) return "all";
  std::vector<std::string> parts;
  if (use_sentence) parts.push_back("sentence");
  if (use_mention) parts.push_back("mention");
  if (use_segment) parts.push_back("segment");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
  return out.empty() ? "none" : out;
}

FeatureToggles FeatureToggles::all() { return {}; }

FeatureToggles FeatureToggles::sentence_only() {
  FeatureToggles t;
  t.use_mention = t.use_segment = false;
  return t;
}

FeatureToggles FeatureToggles::mention_only() {
  FeatureToggles t;
  t.use_sentence = t.use_segment = false;
  return t;
}

FeatureToggles FeatureToggles::segment_only() {
  FeatureToggles t;
  t.use_sentence = t.use_mention = false;
  return t;
}

FeatureToggles FeatureToggles::parse(const std::string& spec) {
  if (spec == "all") return all();
  FeatureToggles t;
  t.use_sentence = t.use_mention = t.use_segment = false;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "sentence") t.use_sentence = true;
    else if (part == "mention") t.use_mention = true;
    else if (part == "segment") t.use_segment = true;
    else if (part == "all") t = all();
    else throw ConfigError("unknown feature group '" + part + "'");
  }
  t.validate();
  return t;
}

json FeatureToggles::to_json() const {
  return {{"use_sentence", use_sentence}, {"use_mention", use_mention},
          {"use_segment", use_segment}, {"kernel_sizes", kernel_sizes}};
}

FeatureToggles FeatureToggles::from_json(const json& j) {
  FeatureToggles t;
  t.use_sentence = j.value("use_sentence", t.use_sentence);
  t.use_mention = j.value("use_mention", t.use_mention);
  t.use_segment = j.value("use_segment", t.use_segment);
  if (j.contains("kernel_sizes")) t.kernel_sizes = j.at("kernel_sizes").get<std::vector<std::size_t>>();
  t.validate();
  return t;
}

json HeadConfig::to_json() const {
  return {{"d", d},
          {"num_relations", num_relations},
          {"toggles", toggles.to_json()},
          {"per_kernel_query", per_kernel_query},
          {"conv_activation", conv_activation},
          {"dropout", dropout}};
}

HeadConfig HeadConfig::from_json(const json& j) {
  HeadConfig c;
  c.d = j.value("d", c.d);
  c.num_relations = j.value("num_relations", c.num_relations);
  if (j.contains("toggles")) c.toggles = FeatureToggles::from_json(j.at("toggles"));
  c.per_kernel_query = j.value("per_kernel_query", c.per_kernel_query);
  c.conv_activation = j.value("conv_activation", c.conv_activation);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

// ---------------------------------------------------------------------------

template <typename T>
ad::Tensor<T> attention_scores(const ad::Tensor<T>& query, const ad::Tensor<T>& keys) {
  if (keys.rank() != 2 || query.rank() != 1) {
    throw ShapeError("attend: expected keys [n x d] and query [d], got " + ad::to_string(keys.shape()) +
                     " and " + ad::to_string(query.shape()));
  }
  const std::size_t d = keys.cols();
  if (d == 0) throw ConfigError("attend: width d must be positive");
  return ad::scale(ad::matvec(keys, query), static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))));
}

template <typename T>
Attention<T> attend(const ad::Tensor<T>& query, const ad::Tensor<T>& keys) {
  auto w = ad::softmax(attention_scores(query, keys));
  return {ad::vecmat(w, keys), w};
}

template <typename T>
MentionFeatures<T> mention_features(const enc::EncodedSentence<T>& enc) {
  return {attend(enc.h_e1, enc.H), attend(enc.h_e2, enc.H)};
}

template <typename T>
std::vector<SegmentBank<T>> segment_banks(const ad::Tensor<T>& H,
                                          const std::vector<std::pair<std::size_t, ad::Tensor<T>>>& kernels,
                                          bool activation) {
  if (kernels.empty()) throw ConfigError("segment_banks: kernel set is empty");
  std::vector<SegmentBank<T>> out;
  out.reserve(kernels.size());
  for (const auto& [t, k] : kernels) {
    auto h = ad::conv1d_same(H, k, t);
    if (activation) h = ad::tanh(h);
    out.push_back({t, h});
  }
  return out;
}

template <typename T>
std::vector<Attention<T>> mention_aware_segments(const std::vector<SegmentBank<T>>& banks,
                                                 const ad::Tensor<T>& h1, const ad::Tensor<T>& h2,
                                                 const std::vector<ad::Tensor<T>>& w_m) {
  if (w_m.size() != banks.size()) throw ConfigError("mention_aware_segments: one W_m per bank required");
  auto hh = ad::concat<T>({h1, h2});
  std::vector<Attention<T>> out;
  out.reserve(banks.size());
  ad::Tensor<T> shared_q;
  for (std::size_t i = 0; i < banks.size(); ++i) {
    ad::Tensor<T> q;
    if (i > 0 && w_m[i].id() == w_m[0].id() && &w_m[i].graph() == &w_m[0].graph()) {
      q = shared_q;
    } else {
      q = ad::matvec(w_m[i], hh);
      if (i == 0) shared_q = q;
    }
    out.push_back(attend(q, banks[i].H_t));
  }
  return out;
}

template <typename T>
Attention<T> global_semantic(const enc::EncodedSentence<T>& enc, const ad::Tensor<T>& w_s) {
  const std::size_t d = enc.H.cols();
  if (w_s.rank() != 2 || w_s.rows() != d || w_s.cols() != 3 * d) {
    throw ShapeError("global_semantic: W_s must be [" + std::to_string(d) + "x" + std::to_string(3 * d) +
                     "], got " + ad::to_string(w_s.shape()));
  }
  auto q = ad::matvec(w_s, ad::concat<T>({enc.h_e1, enc.h_e2, enc.h_g}));
  return attend(q, enc.H);
}

template <typename T>
ad::Tensor<T> aggregate(const AggregateInputs<T>& in, const ad::Tensor<T>& w_a, const ad::Tensor<T>& b_a,
                        const FeatureToggles& toggles, double dropout) {
  toggles.validate();
  std::vector<ad::Tensor<T>> parts;
  auto need = [&](const ad::Tensor<T>& t, const char* what) {
    if (!t.valid()) throw ConfigError(std::string("aggregate: enabled feature ") + what + " is missing");
    parts.push_back(t);
  };
  if (toggles.use_sentence) need(in.h_s, "h_s");
  if (toggles.use_mention) {
    need(in.h_e1, "h'_e1");
    need(in.h_e2, "h'_e2");
  }
  if (toggles.use_segment) {
    if (in.h_m.size() != toggles.kernel_sizes.size()) {
      throw ConfigError("aggregate: expected " + std::to_string(toggles.kernel_sizes.size()) +
                        " segment features, got " + std::to_string(in.h_m.size()));
    }
    for (const auto& h : in.h_m) need(h, "h_m");
  }
  std::size_t width = 0;
  for (const auto& p : parts) width += p.size();
  if (w_a.rank() != 2 || w_a.cols() != width) {
    throw ConfigError("aggregate: W_a " + ad::to_string(w_a.shape()) + " does not match feature width " +
                      std::to_string(width) + " for toggles '" + toggles.name() + "'");
  }
  auto x = parts.size() == 1 ? parts[0] : ad::concat(parts);
  x = ad::dropout(x, dropout);
  return ad::relu(ad::add(ad::matvec(w_a, x), b_a));
}

template <typename T>
Classification<T> classify(const ad::Tensor<T>& h_o, const ad::Tensor<T>& w_o, const ad::Tensor<T>& b_o) {
  auto logits = ad::add(ad::matvec(w_o, h_o), b_o);
  return {logits, ad::softmax(logits)};
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void fill_uniform(ad::Parameter<T>& p, Rng& rng, double half_width) {
  for (auto& v : p.value) v = static_cast<T>(rng.uniform(-half_width, half_width));
}

}  // namespace

template <typename T>
SmsHead<T>::SmsHead(ad::ParameterStore<T>& store, const HeadConfig& cfg, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.toggles.validate();
  const std::size_t d = cfg.d;
  if (d == 0) throw ConfigError("head width d must be positive");
  if (cfg.num_relations < 2) throw ConfigError("at least two relation classes are required");
  auto fan = [](std::size_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); };

  w_s_ = &store.add(prefix + "W_s", {d, 3 * d});
  fill_uniform(*w_s_, rng, fan(3 * d));
  if (cfg.per_kernel_query) {
    for (auto t : cfg.toggles.kernel_sizes) {
      auto* p = &store.add(prefix + "W_m.t" + std::to_string(t), {d, 2 * d});
      fill_uniform(*p, rng, fan(2 * d));
      w_m_[t] = p;
    }
  } else {
    w_m_[0] = &store.add(prefix + "W_m", {d, 2 * d});
    fill_uniform(*w_m_[0], rng, fan(2 * d));
  }
  for (auto t : cfg.toggles.kernel_sizes) {
    auto* k = &store.add(prefix + "conv.t" + std::to_string(t), {t * d, d});
    fill_uniform(*k, rng, fan(t * d));
    kernels_[t] = k;
  }
  const std::size_t width = aggregate_width();
  w_a_ = &store.add(prefix + "W_a", {d, width});
  fill_uniform(*w_a_, rng, fan(width));
  b_a_ = &store.add(prefix + "b_a", {d});
  w_o_ = &store.add(prefix + "W_o", {cfg.num_relations, d});
  fill_uniform(*w_o_, rng, fan(d));
  b_o_ = &store.add(prefix + "b_o", {cfg.num_relations});
}

template <typename T>
ad::Parameter<T>& SmsHead<T>::kernel(std::size_t t) const {
  auto it = kernels_.find(t);
  if (it == kernels_.end()) throw LookupError("no convolution kernel of size " + std::to_string(t));
  return *it->second;
}

template <typename T>
ad::Parameter<T>& SmsHead<T>::w_m(std::size_t t) const {
  auto it = w_m_.find(cfg_.per_kernel_query ? t : 0);
  if (it == w_m_.end()) throw LookupError("no W_m for kernel size " + std::to_string(t));
  return *it->second;
}

template <typename T>
SmsOutput<T> SmsHead<T>::forward(ad::Graph<T>& g, const enc::EncodedSentence<T>& enc) const {
  if (enc.H.cols() != cfg_.d) {
    throw ConfigError("head expects width " + std::to_string(cfg_.d) + " but the encoder produced " +
                      std::to_string(enc.H.cols()));
  }
  const auto& tg = cfg_.toggles;
  SmsOutput<T> out;
  AggregateInputs<T> in;

  {
    auto m = mention_features(enc);
    out.attn_mention_1 = m.e1.weights;
    out.attn_mention_2 = m.e2.weights;
    if (tg.use_mention) {
      in.h_e1 = m.e1.context;
      in.h_e2 = m.e2.context;
    }
    if (tg.use_segment) {
      std::vector<std::pair<std::size_t, ad::Tensor<T>>> kernels;
      std::vector<ad::Tensor<T>> queries;
      auto shared = cfg_.per_kernel_query ? ad::Tensor<T>() : g.param(*w_m_.at(0));
      for (auto t : tg.kernel_sizes) {
        kernels.emplace_back(t, g.param(*kernels_.at(t)));
        queries.push_back(cfg_.per_kernel_query ? g.param(*w_m_.at(t)) : shared);
      }
      auto banks = segment_banks(enc.H, kernels, cfg_.conv_activation);
      auto seg = mention_aware_segments(banks, m.e1.context, m.e2.context, queries);
      for (std::size_t i = 0; i < seg.size(); ++i) {
        in.h_m.push_back(seg[i].context);
        out.attn_segment.emplace_back(tg.kernel_sizes[i], seg[i].weights);
      }
    }
  }
  if (tg.use_sentence) {
    auto s = global_semantic(enc, g.param(*w_s_));
    in.h_s = s.context;
    out.attn_global = s.weights;
  }
  out.h_o = aggregate(in, g.param(*w_a_), g.param(*b_a_), tg, cfg_.dropout);
  auto c = classify(out.h_o, g.param(*w_o_), g.param(*b_o_));
  out.logits = c.logits;
  out.probs = c.probs;
  return out;
}

#define SMS_INSTANTIATE_HEAD(T)                                                                          \
  template ad::Tensor<T> attention_scores(const ad::Tensor<T>&, const ad::Tensor<T>&);                  \
  template Attention<T> attend(const ad::Tensor<T>&, const ad::Tensor<T>&);                             \
  template MentionFeatures<T> mention_features(const enc::EncodedSentence<T>&);                         \
  template std::vector<SegmentBank<T>> segment_banks(                                                    \
      const ad::Tensor<T>&, const std::vector<std::pair<std::size_t, ad::Tensor<T>>>&, bool);           \
  template std::vector<Attention<T>> mention_aware_segments(                                             \
      const std::vector<SegmentBank<T>>&, const ad::Tensor<T>&, const ad::Tensor<T>&,                   \
      const std::vector<ad::Tensor<T>>&);                                                                \
  template Attention<T> global_semantic(const enc::EncodedSentence<T>&, const ad::Tensor<T>&);          \
  template ad::Tensor<T> aggregate(const AggregateInputs<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&, \
                                   const FeatureToggles&, double);                                       \
  template Classification<T> classify(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&); \
  template class SmsHead<T>;

SMS_INSTANTIATE_HEAD(float)
SMS_INSTANTIATE_HEAD(double)

#undef SMS_INSTANTIATE_HEAD

}  // namespace sms::head
