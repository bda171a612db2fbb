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
#include <optional>
#include <set>
#include <sstream>

#include "sms/data.hpp"
#include "sms/rng.hpp"

namespace sms::data {

using nlohmann::json;

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& w : v) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Token sequence under construction, with tags and span bookkeeping.
struct Builder {
  std::vector<std::string> tokens, pos, ner;

  Span push(const std::vector<std::string>& words, const std::string& pos_tag,
            const std::string& ner_tag) {
    Span s{tokens.size(), tokens.size() + words.size()};
    for (const auto& w : words) {
      tokens.push_back(w);
      pos.push_back(pos_tag);
      ner.push_back(ner_tag);
    }
    return s;
  }
};

struct NameSplit {
  // Per relation label: name indices usable in train / test, per side.
  std::vector<std::string> subj_train, subj_test, obj_train, obj_test;
};

void split_pool(const std::vector<std::string>& pool, double test_fraction, Rng& rng,
                std::vector<std::string>& train, std::vector<std::string>& test) {
  std::vector<std::string> shuffled = pool;
  rng.shuffle(shuffled);
  std::size_t n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(pool.size()) + 0.5);
  n_test = std::clamp<std::size_t>(n_test, 1, pool.size() - 1);
  test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
  train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
}

}  // namespace

SynthSpec SynthSpec::default_spec() {
  SynthSpec s;
  s.relations = {
      {"org:ceo_of", {"the", "CEO", "of"}, "PERSON", "ORGANIZATION"},
      {"org:founded", {"founded"}, "PERSON", "ORGANIZATION"},
      {"per:born_in", {"was", "born", "in"}, "PERSON", "LOCATION"},
      {"per:lives_near", {"lives", "near"}, "PERSON", "LOCATION"},
  };
  s.names["PERSON"] = {"Alice Moreau", "Bruno Diaz", "Chen Wei", "Dana Kim", "Elias Berg",
                       "Fatima Noor", "Goran Ilic", "Hana Sato", "Ivan Petrov", "Julia Costa",
                       "Kofi Mensah", "Lena Vogel", "Marco Rossi", "Nadia Haddad", "Oscar Lind",
                       "Priya Nair", "Quentin Blake", "Rosa Ortiz", "Samir Aziz", "Tara Quinn",
                       "Umar Farouk", "Vera Novak", "Walter Graf", "Yuki Mori"};
  s.names["ORGANIZATION"] = {"Acme", "Globex", "Initech", "Umbrella Corp", "Stark Industries",
                             "Wayne Enterprises", "Hooli", "Vandelay", "Soylent", "Cyberdyne",
                             "Tyrell Corp", "Aperture", "Massive Dynamic", "Oscorp", "Wonka",
                             "Gringotts", "Pied Piper", "Monarch", "Nakatomi", "Zorg"};
  s.names["LOCATION"] = {"Paris", "Lagos", "Osaka", "Lima", "Oslo", "New Haven", "Cape Town",
                         "Porto", "Quito", "Kraków", "San Jose", "Hanoi", "Tbilisi", "Dakar",
                         "Perth", "Leeds", "Bergen", "Accra", "Izmir", "Cusco"};
  s.pronouns["PERSON"] = {"he", "she"};
  s.pronouns["ORGANIZATION"] = {"it"};
  s.filler = {"reportedly", "yesterday", "and", "the", "a", "local", "press", "said", "that",
              "after", "years", "meanwhile", "according", "to", "sources", "while", "many",
              "people", "often", "noted", "recently", "in", "an", "interview", "also", "quite",
              "famous", "for", "work", "at", "times", "during", "summer", "some", "critics",
              "claim", "later", "during", "official", "statement"};
  return s;
}

void SynthSpec::validate() const {
  if (relations.size() < 2) throw ConfigError("synthetic spec needs at least two relations");
  std::set<std::string> triggers, labels;
  for (const auto& r : relations) {
    if (r.trigger.empty() || r.trigger.size() > 3) {
      throw ConfigError("relation " + r.label + ": trigger must have 1 to 3 tokens");
    }
    if (!triggers.insert(join(r.trigger)).second) {
      throw ConfigError("duplicate trigger '" + join(r.trigger) + "'");
    }
    if (!labels.insert(r.label).second) throw ConfigError("duplicate relation label " + r.label);
    for (const auto& t : {r.subj_type, r.obj_type}) {
      auto it = names.find(t);
      if (it == names.end() || it->second.size() < 3) {
        throw ConfigError("relation " + r.label + ": need at least 3 names of type " + t);
      }
    }
  }
  if (filler.empty()) throw ConfigError("synthetic spec needs filler vocabulary");
  if (min_filler > max_filler) throw ConfigError("min_filler exceeds max_filler");
  if (test_pair_fraction <= 0.0 || test_pair_fraction >= 1.0) {
    throw ConfigError("test_pair_fraction must be in (0, 1)");
  }
}

json SynthSpec::to_json() const {
  json rels = json::array();
  for (const auto& r : relations) {
    rels.push_back({{"label", r.label}, {"trigger", join(r.trigger)}, {"subj_type", r.subj_type},
                    {"obj_type", r.obj_type}});
  }
  return {{"relations", rels},
          {"names", names},
          {"pronouns", pronouns},
          {"filler", filler},
          {"min_filler", min_filler},
          {"max_filler", max_filler},
          {"mention_rate", mention_rate},
          {"distractor_rate", distractor_rate},
          {"test_pair_fraction", test_pair_fraction}};
}

SynthSpec SynthSpec::from_json(const json& j) {
  SynthSpec s;
  try {
    for (const auto& r : j.at("relations")) {
      s.relations.push_back({r.at("label").get<std::string>(),
                             split_words(r.at("trigger").get<std::string>()),
                             r.at("subj_type").get<std::string>(),
                             r.at("obj_type").get<std::string>()});
    }
    s.names = j.at("names").get<std::map<std::string, std::vector<std::string>>>();
    s.pronouns = j.value("pronouns", std::map<std::string, std::vector<std::string>>{});
    s.filler = j.at("filler").get<std::vector<std::string>>();
    s.min_filler = j.value("min_filler", s.min_filler);
    s.max_filler = j.value("max_filler", s.max_filler);
    s.mention_rate = j.value("mention_rate", s.mention_rate);
    s.distractor_rate = j.value("distractor_rate", s.distractor_rate);
    s.test_pair_fraction = j.value("test_pair_fraction", s.test_pair_fraction);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

SynthCorpus synth_generate(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                           const SynthSpec& spec) {
  spec.validate();
  Rng rng(seed);

  std::vector<NameSplit> splits(spec.relations.size());
  for (std::size_t r = 0; r < spec.relations.size(); ++r) {
    const auto& rel = spec.relations[r];
    split_pool(spec.names.at(rel.subj_type), spec.test_pair_fraction, rng, splits[r].subj_train,
               splits[r].subj_test);
    split_pool(spec.names.at(rel.obj_type), spec.test_pair_fraction, rng, splits[r].obj_train,
               splits[r].obj_test);
  }

  auto filler = [&](Builder& b, std::size_t lo, std::size_t hi) {
    const std::size_t k = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    for (std::size_t i = 0; i < k; ++i) b.push({rng.pick(spec.filler)}, "RB", "O");
  };

  auto make = [&](std::size_t r, bool test_split, const std::string& id,
                  TriggerAnnotation& ann) {
    const auto& rel = spec.relations[r];
    const auto& split = splits[r];
    const std::string subj_name = rng.pick(test_split ? split.subj_test : split.subj_train);
    const std::string obj_name = rng.pick(test_split ? split.obj_test : split.obj_train);
    const auto subj_words = split_words(subj_name);
    const auto obj_words = split_words(obj_name);

    // Which side, if any, the trigger reaches through a pronoun.
    int via = 0;  // 0 direct, 1 subject pronoun, 2 object pronoun
    if (rng.bernoulli(spec.mention_rate)) {
      std::vector<int> sides;
      if (spec.pronouns.count(rel.subj_type)) sides.push_back(1);
      if (spec.pronouns.count(rel.obj_type)) sides.push_back(2);
      if (!sides.empty()) via = rng.pick(sides);
    }

    // Optional distractor clause: another relation's trigger between two
    // entities that are not the marked pair.
    std::optional<std::size_t> distractor;
    if (rng.bernoulli(spec.distractor_rate)) {
      std::size_t d = static_cast<std::size_t>(rng.below(spec.relations.size() - 1));
      if (d >= r) ++d;
      distractor = d;
    }
    const bool distractor_first = rng.bernoulli(0.5);

    Builder b;
    Span subj, obj, trig, mention;
    auto emit_distractor = [&]() {
      const auto& drel = spec.relations[*distractor];
      std::string d1, d2;
      do d1 = rng.pick(spec.names.at(drel.subj_type)); while (d1 == subj_name || d1 == obj_name);
      do d2 = rng.pick(spec.names.at(drel.obj_type)); while (d2 == subj_name || d2 == obj_name);
      b.push(split_words(d1), "NNP", drel.subj_type);
      b.push(drel.trigger, "VB", "O");
      b.push(split_words(d2), "NNP", drel.obj_type);
      filler(b, spec.min_filler, spec.max_filler);
    };

    filler(b, 0, spec.max_filler);
    if (distractor && distractor_first) emit_distractor();
    if (via == 1) {
      subj = b.push(subj_words, "NNP", rel.subj_type);
      filler(b, spec.min_filler, spec.max_filler);
      b.push({"."}, ".", "O");
      if (distractor && !distractor_first && rng.bernoulli(0.5)) {
        emit_distractor();
        distractor.reset();
      }
      mention = b.push({rng.pick(spec.pronouns.at(rel.subj_type))}, "PRP", "O");
      trig = b.push(rel.trigger, "VB", "O");
      obj = b.push(obj_words, "NNP", rel.obj_type);
    } else if (via == 2) {
      obj = b.push(obj_words, "NNP", rel.obj_type);
      filler(b, spec.min_filler, spec.max_filler);
      b.push({"."}, ".", "O");
      if (distractor && !distractor_first && rng.bernoulli(0.5)) {
        emit_distractor();
        distractor.reset();
      }
      subj = b.push(subj_words, "NNP", rel.subj_type);
      trig = b.push(rel.trigger, "VB", "O");
      mention = b.push({rng.pick(spec.pronouns.at(rel.obj_type))}, "PRP", "O");
    } else {
      subj = b.push(subj_words, "NNP", rel.subj_type);
      trig = b.push(rel.trigger, "VB", "O");
      obj = b.push(obj_words, "NNP", rel.obj_type);
      mention = subj;
    }
    filler(b, spec.min_filler, spec.max_filler);
    if (distractor && !distractor_first) emit_distractor();
    b.push({"."}, ".", "O");

    RelationInstance inst;
    inst.id = id;
    inst.tokens = std::move(b.tokens);
    inst.pos_tags = std::move(b.pos);
    inst.ner_tags = std::move(b.ner);
    inst.subj = subj;
    inst.obj = obj;
    inst.subj_type = rel.subj_type;
    inst.obj_type = rel.obj_type;
    inst.relation = rel.label;
    inst.validate();

    ann = TriggerAnnotation{id, rel.label, trig, mention, via != 0};
    return inst;
  };

  auto generate_split = [&](std::size_t n, bool test_split, std::vector<RelationInstance>& out,
                            std::vector<TriggerAnnotation>& anns) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % spec.relations.size();
    rng.shuffle(labels);
    for (std::size_t i = 0; i < n; ++i) {
      std::ostringstream id;
      id << "synth-" << (test_split ? "test" : "train") << '-' << i;
      TriggerAnnotation ann;
      out.push_back(make(labels[i], test_split, id.str(), ann));
      anns.push_back(std::move(ann));
    }
  };

  SynthCorpus corpus;
  generate_split(n_train, false, corpus.train, corpus.train_triggers);
  generate_split(n_test, true, corpus.test, corpus.test_triggers);
  return corpus;
}

json triggers_to_json(const std::vector<TriggerAnnotation>& triggers) {
  json out = json::array();
  for (const auto& t : triggers) {
    out.push_back({{"id", t.id},
                   {"relation", t.relation},
                   {"trigger_start", t.trigger.start},
                   {"trigger_end", t.trigger.end},
                   {"mention_start", t.mention.start},
                   {"mention_end", t.mention.end},
                   {"via_pronoun", t.via_pronoun}});
  }
  return out;
}

std::vector<TriggerAnnotation> triggers_from_json(const json& j) {
  std::vector<TriggerAnnotation> out;
  try {
    for (const auto& t : j) {
      out.push_back({t.at("id").get<std::string>(), t.at("relation").get<std::string>(),
                     {t.at("trigger_start").get<std::size_t>(), t.at("trigger_end").get<std::size_t>()},
                     {t.at("mention_start").get<std::size_t>(), t.at("mention_end").get<std::size_t>()},
                     t.at("via_pronoun").get<bool>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("trigger annotations: ") + e.what());
  }
  return out;
}

}  // namespace sms::data
