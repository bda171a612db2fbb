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
#include <cstring>

#include "sms/binary_io.hpp"
#include "sms/encoders.hpp"

namespace sms::enc {

using nlohmann::json;

std::size_t ChannelConfig::input_width() const {
  std::size_t w = word_dim;
  if (use_pos) w += pos_dim;
  if (use_ner) w += ner_dim;
  if (use_position) w += 2 * position_dim;
  return w;
}

json ChannelConfig::to_json() const {
  return {{"word_dim", word_dim},         {"pos_dim", pos_dim},
          {"ner_dim", ner_dim},           {"position_dim", position_dim},
          {"use_pos", use_pos},           {"use_ner", use_ner},
          {"use_position", use_position}, {"max_distance", max_distance},
          {"small_init", small_init},     {"word_init", word_init}};
}

ChannelConfig ChannelConfig::from_json(const json& j) {
  ChannelConfig c;
  c.word_dim = j.value("word_dim", c.word_dim);
  c.pos_dim = j.value("pos_dim", c.pos_dim);
  c.ner_dim = j.value("ner_dim", c.ner_dim);
  c.position_dim = j.value("position_dim", c.position_dim);
  c.use_pos = j.value("use_pos", c.use_pos);
  c.use_ner = j.value("use_ner", c.use_ner);
  c.use_position = j.value("use_position", c.use_position);
  c.max_distance = j.value("max_distance", c.max_distance);
  c.small_init = j.value("small_init", c.small_init);
  c.word_init = j.value("word_init", c.word_init);
  return c;
}

LstmConfig LstmConfig::from_json(const json& j) {
  LstmConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

std::uint32_t relative_position_id(std::size_t i, const data::Span& s, std::size_t max_distance) {
  long dist = 0;
  if (i < s.start) {
    dist = static_cast<long>(i) - static_cast<long>(s.start);
  } else if (i >= s.end) {
    dist = static_cast<long>(i) - static_cast<long>(s.end) + 1;
  }
  const long m = static_cast<long>(max_distance);
  dist = std::clamp(dist, -m, m);
  return static_cast<std::uint32_t>(dist + m);
}

TokenIds index_tokens(const data::RelationInstance& inst, const data::Vocab& vocab,
                      const ChannelConfig& cfg) {
  inst.validate();
  const std::size_t n = inst.size();
  TokenIds ids;
  ids.word.resize(n);
  for (std::size_t i = 0; i < n; ++i) ids.word[i] = vocab.word_id(inst.tokens[i]);
  if (cfg.use_pos) {
    ids.pos.resize(n, data::Vocab::kUnk);
    for (std::size_t i = 0; i < inst.pos_tags.size(); ++i) ids.pos[i] = vocab.pos_id(inst.pos_tags[i]);
  }
  if (cfg.use_ner) {
    ids.ner.resize(n, data::Vocab::kUnk);
    for (std::size_t i = 0; i < inst.ner_tags.size(); ++i) ids.ner[i] = vocab.ner_id(inst.ner_tags[i]);
  }
  if (cfg.use_position) {
    ids.subj_pos.resize(n);
    ids.obj_pos.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids.subj_pos[i] = relative_position_id(i, inst.subj, cfg.max_distance);
      ids.obj_pos[i] = relative_position_id(i, inst.obj, cfg.max_distance);
    }
  }
  return ids;
}

namespace {

template <typename T>
void fill_uniform(ad::Parameter<T>& p, Rng& rng, double half_width) {
  for (auto& v : p.value) v = static_cast<T>(rng.uniform(-half_width, half_width));
}

}  // namespace

template <typename T>
Embedder<T>::Embedder(ad::ParameterStore<T>& store, const data::Vocab& vocab,
                      const ChannelConfig& cfg, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  word_ = &store.add(prefix + "word", {vocab.words.size(), cfg.word_dim});
  word_->sparse_rows = true;
  fill_uniform(*word_, rng, cfg.word_init);
  if (cfg.use_pos) {
    pos_ = &store.add(prefix + "pos", {vocab.pos.size(), cfg.pos_dim});
    pos_->sparse_rows = true;
    fill_uniform(*pos_, rng, cfg.small_init);
  }
  if (cfg.use_ner) {
    ner_ = &store.add(prefix + "ner", {vocab.ner.size(), cfg.ner_dim});
    ner_->sparse_rows = true;
    fill_uniform(*ner_, rng, cfg.small_init);
  }
  if (cfg.use_position) {
    subj_pos_ = &store.add(prefix + "subj_position", {cfg.position_vocab(), cfg.position_dim});
    obj_pos_ = &store.add(prefix + "obj_position", {cfg.position_vocab(), cfg.position_dim});
    fill_uniform(*subj_pos_, rng, cfg.small_init);
    fill_uniform(*obj_pos_, rng, cfg.small_init);
  }
}

template <typename T>
std::size_t Embedder<T>::load_pretrained(const data::Vocab& vocab, const data::WordVectors& vectors) {
  if (vectors.dim != cfg_.word_dim) {
    throw ConfigError("word vectors have width " + std::to_string(vectors.dim) +
                      " but word_dim is " + std::to_string(cfg_.word_dim));
  }
  std::size_t covered = 0;
  for (std::uint32_t id = 0; id < vocab.words.size(); ++id) {
    auto it = vectors.vectors.find(vocab.words.key(id));
    if (it == vectors.vectors.end()) continue;
    std::transform(it->second.begin(), it->second.end(),
                   word_->value.begin() + static_cast<std::ptrdiff_t>(id * cfg_.word_dim),
                   [](float x) { return static_cast<T>(x); });
    ++covered;
  }
  return covered;
}

template <typename T>
ad::Tensor<T> Embedder<T>::embed(ad::Graph<T>& g, const TokenIds& ids) const {
  std::vector<ad::Tensor<T>> parts;
  parts.push_back(ad::embedding(g.param(*word_), std::span<const std::uint32_t>(ids.word)));
  if (pos_) parts.push_back(ad::embedding(g.param(*pos_), std::span<const std::uint32_t>(ids.pos)));
  if (ner_) parts.push_back(ad::embedding(g.param(*ner_), std::span<const std::uint32_t>(ids.ner)));
  if (subj_pos_) {
    parts.push_back(ad::embedding(g.param(*subj_pos_), std::span<const std::uint32_t>(ids.subj_pos)));
    parts.push_back(ad::embedding(g.param(*obj_pos_), std::span<const std::uint32_t>(ids.obj_pos)));
  }
  if (parts.size() == 1) return parts[0];
  return ad::concat_cols(parts);
}

template <typename T>
BiLstmEncoder<T>::BiLstmEncoder(ad::ParameterStore<T>& store, std::size_t input_width,
                                const LstmConfig& cfg, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  if (cfg.hidden == 0) throw ConfigError("LSTM hidden size must be positive");
  const std::size_t h = cfg.hidden;
  auto make = [&](const std::string& dir) {
    Direction d;
    d.w = &store.add(prefix + dir + ".W", {input_width, 4 * h});
    d.b = &store.add(prefix + dir + ".b", {4 * h});
    d.u = &store.add(prefix + dir + ".U", {h, 4 * h});
    fill_uniform(*d.w, rng, 0.08);
    fill_uniform(*d.u, rng, 0.08);
    // Forget gate bias starts at 1.
    for (std::size_t k = h; k < 2 * h; ++k) d.b->value[k] = T(1);
    return d;
  };
  fwd_ = make("fwd");
  bwd_ = make("bwd");
}

template <typename T>
ad::Tensor<T> BiLstmEncoder<T>::encode(ad::Graph<T>& g, const ad::Tensor<T>& e) const {
  auto x = ad::dropout(e, cfg_.dropout);
  auto run = [&](const Direction& d, bool reverse) {
    auto xw = ad::add_row_bias(ad::matmul(x, g.param(*d.w)), g.param(*d.b));
    return ad::lstm_scan(xw, g.param(*d.u), reverse);
  };
  auto h = ad::concat_cols<T>({run(fwd_, false), run(bwd_, true)});
  return ad::dropout(h, cfg_.dropout);
}

template <typename T>
ad::Tensor<T> lstm_reference(const ad::Tensor<T>& xw, const ad::Tensor<T>& u, bool reverse) {
  auto& g = xw.graph();
  const std::size_t n = xw.rows(), h = u.rows();
  std::vector<ad::Tensor<T>> out(n);
  ad::Tensor<T> h_prev, c_prev;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    auto z = ad::row(xw, t);
    if (step > 0) z = ad::add(z, ad::vecmat(h_prev, u));
    auto i = ad::sigmoid(ad::slice(z, 0, h));
    auto f = ad::sigmoid(ad::slice(z, h, h));
    auto gg = ad::tanh(ad::slice(z, 2 * h, h));
    auto o = ad::sigmoid(ad::slice(z, 3 * h, h));
    auto c = ad::mul(i, gg);
    if (step > 0) c = ad::add(ad::mul(f, c_prev), c);
    auto hv = ad::mul(o, ad::tanh(c));
    out[t] = hv;
    h_prev = hv;
    c_prev = c;
  }
  (void)g;
  return ad::stack_rows(out);
}

template <typename T>
EncodedSentence<T> pool(const ad::Tensor<T>& H, const data::Span& s1, const data::Span& s2) {
  if (H.rank() != 2) throw ShapeError("pool: H must be a matrix, got " + ad::to_string(H.shape()));
  EncodedSentence<T> enc;
  enc.H = H;
  enc.n = H.rows();
  enc.d = H.cols();
  enc.h_e1 = ad::max_pool_rows(H, s1.start, s1.end);
  enc.h_e2 = ad::max_pool_rows(H, s2.start, s2.end);
  enc.h_g = ad::max_pool_rows(H, 0, enc.n);
  enc.spans_overlap = s1.overlaps(s2);
  return enc;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kRepMagic[4] = {'S', 'M', 'S', 'R'};
}

RepresentationFile RepresentationFile::load(const std::string& path) {
  io::Reader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kRepMagic, 4) != 0) {
    throw ParseError(path + ": not an SMSR representation file");
  }
  RepresentationFile file;
  file.path_ = path;
  const auto count = in.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string id = in.str();
    Representation r;
    r.n = in.u32();
    r.d = in.u32();
    r.values.resize(r.n * r.d);
    for (auto& v : r.values) v = in.f32();
    file.records_[std::move(id)] = std::move(r);
  }
  return file;
}

void RepresentationFile::write(const std::string& path,
                               const std::vector<std::pair<std::string, Representation>>& records) {
  io::Writer out(path);
  out.bytes(kRepMagic, 4);
  out.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& [id, r] : records) {
    if (r.values.size() != r.n * r.d) throw ShapeError("representation " + id + ": size mismatch");
    out.str(id);
    out.u32(static_cast<std::uint32_t>(r.n));
    out.u32(static_cast<std::uint32_t>(r.d));
    for (float v : r.values) out.f32(v);
  }
  out.close();
}

const Representation& RepresentationFile::get(const std::string& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw LookupError("no representation for sentence id '" + id + "'");
  return it->second;
}

template <typename T>
ad::Tensor<T> load_precomputed(ad::Graph<T>& g, const RepresentationFile& file,
                               const std::string& id, std::size_t expected_width) {
  const auto& r = file.get(id);
  if (expected_width != 0 && r.d != expected_width) {
    throw ConfigError("representation '" + id + "' has width " + std::to_string(r.d) +
                      " but the model expects " + std::to_string(expected_width));
  }
  std::vector<T> values(r.values.begin(), r.values.end());
  return g.constant({r.n, r.d}, std::move(values));
}

std::pair<data::Span, data::Span> precomputed_spans(const data::RelationInstance& inst,
                                                    std::size_t rows) {
  if (rows == inst.size()) return {inst.subj, inst.obj};
  if (rows == inst.size() + 2) {
    return {{inst.subj.start + 1, inst.subj.end + 1}, {inst.obj.start + 1, inst.obj.end + 1}};
  }
  throw ConfigError("representation for '" + inst.id + "' has " + std::to_string(rows) +
                    " rows for " + std::to_string(inst.size()) + " tokens");
}

template class Embedder<float>;
template class Embedder<double>;
template class BiLstmEncoder<float>;
template class BiLstmEncoder<double>;
template ad::Tensor<float> lstm_reference(const ad::Tensor<float>&, const ad::Tensor<float>&, bool);
template ad::Tensor<double> lstm_reference(const ad::Tensor<double>&, const ad::Tensor<double>&, bool);
template EncodedSentence<float> pool(const ad::Tensor<float>&, const data::Span&, const data::Span&);
template EncodedSentence<double> pool(const ad::Tensor<double>&, const data::Span&, const data::Span&);
template ad::Tensor<float> load_precomputed(ad::Graph<float>&, const RepresentationFile&,
                                            const std::string&, std::size_t);
template ad::Tensor<double> load_precomputed(ad::Graph<double>&, const RepresentationFile&,
                                             const std::string&, std::size_t);

}  // namespace sms::enc
