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

#include <fstream>

#include "sms/data.hpp"
#include "sms/rng.hpp"

namespace sms::data {

using nlohmann::json;

void RelationInstance::validate() const {
  const std::size_t n = tokens.size();
  auto check_span = [&](const Span& s, const char* which) {
    if (!(s.start < s.end && s.end <= n)) {
      throw SpanError("instance " + id + ": " + which + " span [" + std::to_string(s.start) +
                      ", " + std::to_string(s.end) + ") invalid for " + std::to_string(n) +
                      " tokens");
    }
  };
  check_span(subj, "subject");
  check_span(obj, "object");
  if (!pos_tags.empty() && pos_tags.size() != n) {
    throw ParseError("instance " + id + ": " + std::to_string(pos_tags.size()) +
                     " POS tags for " + std::to_string(n) + " tokens");
  }
  if (!ner_tags.empty() && ner_tags.size() != n) {
    throw ParseError("instance " + id + ": " + std::to_string(ner_tags.size()) +
                     " NER tags for " + std::to_string(n) + " tokens");
  }
}

RelationInstance from_tacred_json(const json& r) {
  const std::string id = r.contains("id") && r["id"].is_string() ? r["id"].get<std::string>()
                                                                  : std::string("<no id>");
  auto field = [&](const char* name) -> const json& {
    if (!r.contains(name)) throw ParseError("record " + id + ": missing field '" + name + "'");
    return r[name];
  };
  RelationInstance inst;
  try {
    inst.id = field("id").get<std::string>();
    inst.tokens = field("token").get<std::vector<std::string>>();
    const auto ss = field("subj_start").get<long long>();
    const auto se = field("subj_end").get<long long>();
    const auto os = field("obj_start").get<long long>();
    const auto oe = field("obj_end").get<long long>();
    if (ss < 0 || se < ss || os < 0 || oe < os) {
      throw SpanError("record " + id + ": negative or reversed entity indices");
    }
    inst.subj = {static_cast<std::size_t>(ss), static_cast<std::size_t>(se) + 1};
    inst.obj = {static_cast<std::size_t>(os), static_cast<std::size_t>(oe) + 1};
    inst.subj_type = field("subj_type").get<std::string>();
    inst.obj_type = field("obj_type").get<std::string>();
    inst.relation = field("relation").get<std::string>();
    if (r.contains("stanford_pos")) inst.pos_tags = r["stanford_pos"].get<std::vector<std::string>>();
    if (r.contains("stanford_ner")) inst.ner_tags = r["stanford_ner"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError("record " + id + ": " + e.what());
  }
  try {
    inst.validate();
  } catch (const SpanError& e) {
    throw SpanError(std::string("parse error: ") + e.what());
  }
  return inst;
}

json to_tacred_json(const RelationInstance& inst) {
  json r;
  r["id"] = inst.id;
  r["relation"] = inst.relation;
  r["token"] = inst.tokens;
  r["subj_start"] = inst.subj.start;
  r["subj_end"] = inst.subj.end - 1;
  r["obj_start"] = inst.obj.start;
  r["obj_end"] = inst.obj.end - 1;
  r["subj_type"] = inst.subj_type;
  r["obj_type"] = inst.obj_type;
  if (!inst.pos_tags.empty()) r["stanford_pos"] = inst.pos_tags;
  if (!inst.ner_tags.empty()) r["stanford_ner"] = inst.ner_tags;
  return r;
}

std::vector<RelationInstance> read_tacred_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError(path + ": expected a JSON array of records");
  std::vector<RelationInstance> out;
  out.reserve(doc.size());
  for (const auto& r : doc) out.push_back(from_tacred_json(r));
  return out;
}

void write_tacred_json(const std::string& path, const std::vector<RelationInstance>& instances) {
  json doc = json::array();
  for (const auto& inst : instances) doc.push_back(to_tacred_json(inst));
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << doc.dump(1) << '\n';
}

std::string subj_mask(const std::string& type) { return "SUBJ-" + type; }
std::string obj_mask(const std::string& type) { return "OBJ-" + type; }

RelationInstance mask_entities(const RelationInstance& inst) {
  if (inst.subj_type.empty() || inst.obj_type.empty()) {
    throw DataError("instance " + inst.id + ": entity types required for masking");
  }
  if (inst.subj.overlaps(inst.obj)) {
    throw DataError("instance " + inst.id + ": cannot mask overlapping subject and object");
  }
  RelationInstance out = inst;
  for (std::size_t i = inst.subj.start; i < inst.subj.end; ++i) out.tokens[i] = subj_mask(inst.subj_type);
  for (std::size_t i = inst.obj.start; i < inst.obj.end; ++i) out.tokens[i] = obj_mask(inst.obj_type);
  return out;
}

std::vector<std::vector<std::size_t>> batchify(std::size_t count, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch,
                                               bool shuffle) {
  if (batch_size == 0) throw UsageError("batch size must be at least 1");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  if (shuffle) {
    Rng rng(Rng::mix(seed, epoch));
    rng.shuffle(order);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch_size)));
  }
  return batches;
}

}  // namespace sms::data
