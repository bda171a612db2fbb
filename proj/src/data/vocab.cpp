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
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sms/data.hpp"

namespace sms::data {

using nlohmann::json;

IdMap::IdMap(std::vector<std::string> entries) {
  for (const auto& e : entries) add(e);
}

std::uint32_t IdMap::add(const std::string& key) {
  auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(keys_.size());
  keys_.push_back(key);
  ids_.emplace(key, id);
  return id;
}

std::uint32_t IdMap::get(const std::string& key, std::uint32_t fallback) const {
  auto it = ids_.find(key);
  return it == ids_.end() ? fallback : it->second;
}

std::uint32_t IdMap::at(const std::string& key) const {
  auto it = ids_.find(key);
  if (it == ids_.end()) throw LookupError("unknown label '" + key + "'");
  return it->second;
}

const std::string& IdMap::key(std::uint32_t id) const {
  if (id >= keys_.size()) throw LookupError("id " + std::to_string(id) + " out of range");
  return keys_[id];
}

json Vocab::to_json() const {
  return {{"words", words.keys()}, {"pos", pos.keys()}, {"ner", ner.keys()},
          {"relations", relations.keys()}};
}

Vocab Vocab::from_json(const json& j) {
  Vocab v;
  try {
    v.words = IdMap(j.at("words").get<std::vector<std::string>>());
    v.pos = IdMap(j.at("pos").get<std::vector<std::string>>());
    v.ner = IdMap(j.at("ner").get<std::vector<std::string>>());
    v.relations = IdMap(j.at("relations").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
  return v;
}

const std::vector<std::string>& default_entity_types() {
  static const std::vector<std::string> types = {
      "PERSON", "ORGANIZATION", "LOCATION", "CITY", "COUNTRY", "STATE_OR_PROVINCE",
      "NATIONALITY", "RELIGION", "TITLE", "DATE", "NUMBER", "DURATION", "MISC",
      "CAUSE_OF_DEATH", "CRIMINAL_CHARGE", "IDEOLOGY", "URL", "EMAIL", "E1", "E2"};
  return types;
}

Vocab build_vocab(const std::vector<RelationInstance>& train, const VocabOptions& options) {
  if (train.empty()) throw UsageError("cannot build a vocabulary from an empty corpus");
  if (options.min_freq == 0) throw UsageError("min_freq must be at least 1");

  Vocab v;
  for (auto* m : {&v.words, &v.pos, &v.ner}) {
    m->add(kPadToken);
    m->add(kUnkToken);
  }

  std::set<std::string> subj_types, obj_types;
  for (const auto& t : default_entity_types()) subj_types.insert(t), obj_types.insert(t);
  for (const auto& t : options.extra_entity_types) subj_types.insert(t), obj_types.insert(t);
  for (const auto& inst : train) {
    if (!inst.subj_type.empty()) subj_types.insert(inst.subj_type);
    if (!inst.obj_type.empty()) obj_types.insert(inst.obj_type);
  }
  for (const auto& t : subj_types) v.words.add(subj_mask(t));
  for (const auto& t : obj_types) v.words.add(obj_mask(t));

  std::map<std::string, std::size_t> counts;
  std::set<std::string> pos, ner, labels;
  for (const auto& inst : train) {
    for (const auto& w : inst.tokens) counts[w]++;
    pos.insert(inst.pos_tags.begin(), inst.pos_tags.end());
    ner.insert(inst.ner_tags.begin(), inst.ner_tags.end());
    labels.insert(inst.relation);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [w, c] : ranked) {
    if (c >= options.min_freq) v.words.add(w);
  }
  for (const auto& p : pos) v.pos.add(p);
  for (const auto& n : ner) v.ner.add(n);
  for (const auto& r : options.relation_labels) v.relations.add(r);
  for (const auto& r : labels) v.relations.add(r);
  return v;
}

WordVectors read_word_vectors(const std::string& path, std::size_t expected_dim,
                              const IdMap* restrict_to) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  WordVectors wv;
  wv.dim = expected_dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError(path + ":" + std::to_string(line_no) + ": no values");
    std::string token = line.substr(0, sp);
    if (restrict_to != nullptr && !restrict_to->contains(token)) continue;
    std::vector<float> values;
    values.reserve(expected_dim);
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p >= end) break;
      float x = 0;
      auto [next, ec] = std::from_chars(p, end, x);
      if (ec != std::errc()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": malformed number");
      }
      values.push_back(x);
      p = next;
    }
    // word2vec-style "<count> <dim>" header.
    if (line_no == 1 && values.size() == 1) continue;
    if (values.size() != expected_dim) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(expected_dim) + " values, got " +
                       std::to_string(values.size()));
    }
    wv.vectors.emplace(std::move(token), std::move(values));
  }
  return wv;
}

}  // namespace sms::data
