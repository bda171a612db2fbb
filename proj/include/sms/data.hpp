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

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sms/error.hpp"

namespace sms::data {

// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  bool operator==(const Span&) const = default;
};

struct RelationInstance {
  std::string id;
  std::vector<std::string> tokens;
  Span subj;
  Span obj;
  std::string subj_type;
  std::string obj_type;
  std::vector<std::string> pos_tags;  // empty or one per token
  std::vector<std::string> ner_tags;  // empty or one per token
  std::string relation;

  std::size_t size() const { return tokens.size(); }

  // Throws SpanError / ParseError when span or tag invariants do not hold.
  void validate() const;

  bool operator==(const RelationInstance&) const = default;
};

// ---------------------------------------------------------------------------
// Tacred JSON. End indices are inclusive on disk and half-open in memory.

RelationInstance from_tacred_json(const nlohmann::json& record);
nlohmann::json to_tacred_json(const RelationInstance& inst);
std::vector<RelationInstance> read_tacred_json(const std::string& path);
void write_tacred_json(const std::string& path, const std::vector<RelationInstance>& instances);

// ---------------------------------------------------------------------------
// SemEval 2010 Task 8 official text format.

std::vector<RelationInstance> parse_semeval(std::istream& in, const std::string& source = "<stream>");
std::vector<RelationInstance> read_semeval(const std::string& path);

// Splits raw text into tokens, separating punctuation.
std::vector<std::string> simple_tokenize(const std::string& text);

// ---------------------------------------------------------------------------
// Entity masking.

std::string subj_mask(const std::string& type);
std::string obj_mask(const std::string& type);

// Replaces subject tokens by SUBJ-<type> and object tokens by OBJ-<type>.
RelationInstance mask_entities(const RelationInstance& inst);

// ---------------------------------------------------------------------------
// Vocabulary.

class IdMap {
 public:
  IdMap() = default;
  explicit IdMap(std::vector<std::string> entries);

  std::uint32_t add(const std::string& key);
  bool contains(const std::string& key) const { return ids_.count(key) != 0; }
  // Falls back to `fallback` when absent.
  std::uint32_t get(const std::string& key, std::uint32_t fallback) const;
  // Throws LookupError when absent.
  std::uint32_t at(const std::string& key) const;
  const std::string& key(std::uint32_t id) const;
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

inline constexpr const char* kPadToken = "<PAD>";
inline constexpr const char* kUnkToken = "<UNK>";

struct Vocab {
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;

  IdMap words;
  IdMap pos;
  IdMap ner;
  IdMap relations;

  std::uint32_t word_id(const std::string& w) const { return words.get(w, kUnk); }
  std::uint32_t pos_id(const std::string& p) const { return pos.get(p, kUnk); }
  std::uint32_t ner_id(const std::string& n) const { return ner.get(n, kUnk); }
  std::uint32_t relation_id(const std::string& r) const { return relations.at(r); }
  const std::string& relation_label(std::uint32_t id) const { return relations.key(id); }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);
};

// Entity types whose mask tokens are always present, Tacred's NER set plus
// the pseudo types used for SemEval.
const std::vector<std::string>& default_entity_types();

struct VocabOptions {
  std::size_t min_freq = 1;
  std::vector<std::string> extra_entity_types;
  // Fixed relation label order (e.g. all Tacred labels); labels seen in the
  // data but missing here are appended.
  std::vector<std::string> relation_labels;
};

Vocab build_vocab(const std::vector<RelationInstance>& train, const VocabOptions& options = {});

// Public word-vector text format: token followed by `dim` decimals per line.
struct WordVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> vectors;
};

// Loads only tokens present in `restrict_to` when it is non-null.
WordVectors read_word_vectors(const std::string& path, std::size_t expected_dim,
                              const IdMap* restrict_to = nullptr);

// ---------------------------------------------------------------------------
// Synthetic planted-trigger corpora.

struct SynthRelation {
  std::string label;
  std::vector<std::string> trigger;  // 1 to 3 tokens, unique across relations
  std::string subj_type;
  std::string obj_type;
};

struct SynthSpec {
  std::vector<SynthRelation> relations;
  std::map<std::string, std::vector<std::string>> names;     // entity type -> name pool
  std::map<std::string, std::vector<std::string>> pronouns;  // entity type -> pronouns
  std::vector<std::string> filler;
  std::size_t min_filler = 1;
  std::size_t max_filler = 4;
  double mention_rate = 0.5;     // trigger attaches to a pronoun mention
  double distractor_rate = 0.8;  // add a clause with another relation's trigger
  double test_pair_fraction = 0.3;

  static SynthSpec default_spec();
  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

struct TriggerAnnotation {
  std::string id;
  std::string relation;
  Span trigger;
  Span mention;  // the token the trigger attaches to (entity or pronoun)
  bool via_pronoun = false;
};

struct SynthCorpus {
  std::vector<RelationInstance> train;
  std::vector<RelationInstance> test;
  std::vector<TriggerAnnotation> train_triggers;
  std::vector<TriggerAnnotation> test_triggers;
};

SynthCorpus synth_generate(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                           const SynthSpec& spec);

nlohmann::json triggers_to_json(const std::vector<TriggerAnnotation>& triggers);
std::vector<TriggerAnnotation> triggers_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Batching. Order depends only on (seed, epoch).

std::vector<std::vector<std::size_t>> batchify(std::size_t count, std::size_t batch_size,
                                               std::uint64_t seed, std::uint64_t epoch,
                                               bool shuffle);

}  // namespace sms::data
