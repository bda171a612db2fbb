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
#include <set>
#include <sstream>

#include "doctest.h"
#include "sms/data.hpp"
#include "sms/rng.hpp"
#include "test_util.hpp"

using namespace sms;
using namespace sms::data;
using nlohmann::json;

namespace {

RelationInstance random_instance(Rng& rng, std::size_t k) {
  RelationInstance inst;
  inst.id = "fx-" + std::to_string(k);
  const std::size_t n = 4 + rng.below(12);
  const std::vector<std::string> words = {"the", "a", "company", "said", "in", "of", "was", "Paris", "Smith"};
  for (std::size_t i = 0; i < n; ++i) {
    inst.tokens.push_back(rng.pick(words));
    inst.pos_tags.push_back(rng.pick(std::vector<std::string>{"DT", "NN", "VBD"}));
    inst.ner_tags.push_back("O");
  }
  const std::size_t split = 1 + rng.below(n - 1);
  const std::size_t s0 = rng.below(split);
  const std::size_t o0 = split + rng.below(n - split);
  inst.subj = {s0, s0 + 1 + rng.below(split - s0)};
  inst.obj = {o0, o0 + 1 + rng.below(n - o0)};
  if (rng.below(2) == 1) std::swap(inst.subj, inst.obj);
  inst.subj_type = "PERSON";
  inst.obj_type = rng.pick(std::vector<std::string>{"ORGANIZATION", "CITY", "DATE"});
  inst.relation = rng.pick(std::vector<std::string>{"no_relation", "per:title", "org:founded_by"});
  return inst;
}

json tacred_record() {
  return json{{"id", "r1"},
              {"token", {"Steve", "Jobs", "led", "Apple", "."}},
              {"subj_start", 0},
              {"subj_end", 1},
              {"obj_start", 3},
              {"obj_end", 3},
              {"subj_type", "PERSON"},
              {"obj_type", "ORGANIZATION"},
              {"stanford_pos", {"NNP", "NNP", "VBD", "NNP", "."}},
              {"stanford_ner", {"PERSON", "PERSON", "O", "ORGANIZATION", "O"}},
              {"relation", "org:top_members/employees"}};
}

}  // namespace

TEST_CASE("tacred end indices become half-open") {
  auto rec = tacred_record();
  rec["subj_start"] = 2;
  rec["subj_end"] = 3;
  rec["obj_start"] = 0;
  rec["obj_end"] = 0;
  const auto inst = from_tacred_json(rec);
  CHECK(inst.subj == Span{2, 4});
  CHECK(inst.obj == Span{0, 1});
  CHECK(to_tacred_json(inst)["subj_end"] == 3);
}

TEST_CASE("tacred empty array and bad records") {
  const auto p = sms::testing::temp_path("empty.json");
  std::ofstream(p) << "[]";
  CHECK(read_tacred_json(p.string()).empty());

  auto rec = tacred_record();
  rec.erase("obj_type");
  CHECK_THROWS_AS(from_tacred_json(rec), ParseError);
  try {
    from_tacred_json(rec);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("r1") != std::string::npos);
  }
  rec = tacred_record();
  rec["subj_end"] = 9;
  CHECK_THROWS_AS(from_tacred_json(rec), DataError);
  rec = tacred_record();
  rec["stanford_pos"] = {"NNP"};
  CHECK_THROWS_AS(from_tacred_json(rec), DataError);
}

TEST_CASE("tacred 50-record fixture round-trips") {
  Rng rng(7);
  std::vector<RelationInstance> fx;
  for (std::size_t k = 0; k < 50; ++k) fx.push_back(random_instance(rng, k));
  const auto p = sms::testing::temp_path("fixture50.json");
  write_tacred_json(p.string(), fx);
  const auto back = read_tacred_json(p.string());
  REQUIRE(back.size() == 50);
  for (std::size_t k = 0; k < 50; ++k) CHECK(back[k] == fx[k]);
}

TEST_CASE("semeval official format") {
  std::istringstream in(
      "1\t\"The <e1>author</e1> wrote a <e2>book</e2>.\"\n"
      "Product-Producer(e2,e1)\n"
      "Comment:\n"
      "\n"
      "2\t\"A <e1>big dog</e1> sat on the <e2>mat</e2>\"\n"
      "Other\n"
      "Comment: two-token subject\n"
      "\n");
  const auto xs = parse_semeval(in);
  REQUIRE(xs.size() == 2);
  CHECK(xs[0].tokens == std::vector<std::string>{"The", "author", "wrote", "a", "book", "."});
  CHECK(xs[0].subj == Span{1, 2});
  CHECK(xs[0].obj == Span{4, 5});
  CHECK(xs[0].relation == "Product-Producer(e2,e1)");
  CHECK(xs[1].relation == "Other");
  CHECK(xs[1].subj == Span{1, 3});
  CHECK(xs[1].subj_type == "E1");
  CHECK(xs[1].obj_type == "E2");
}

TEST_CASE("semeval unbalanced markers report the line") {
  std::istringstream in(
      "1\t\"fine <e1>a</e1> and <e2>b</e2>\"\nOther\nComment:\n\n"
      "2\t\"broken <e1>a and <e2>b</e2>\"\nOther\nComment:\n\n");
  try {
    parse_semeval(in, "x.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":5") != std::string::npos);
  }
}

TEST_CASE("entity masking") {
  RelationInstance inst;
  inst.id = "m";
  inst.tokens = {"Steve", "Jobs", "led", "Apple"};
  inst.subj = {0, 2};
  inst.obj = {3, 4};
  inst.subj_type = "PERSON";
  inst.obj_type = "ORGANIZATION";
  const auto m = mask_entities(inst);
  CHECK(m.tokens == std::vector<std::string>{"SUBJ-PERSON", "SUBJ-PERSON", "led", "OBJ-ORGANIZATION"});
  CHECK(mask_entities(m) == m);

  inst.obj = {1, 3};
  CHECK_THROWS_AS(mask_entities(inst), DataError);

  Rng rng(11);
  for (std::size_t k = 0; k < 100; ++k) {
    const auto x = random_instance(rng, k);
    const auto y = mask_entities(x);
    CHECK(y.size() == x.size());
    CHECK(y.subj == x.subj);
    CHECK(y.obj == x.obj);
  }
}

TEST_CASE("vocab counting, specials and relation round-trip") {
  RelationInstance inst;
  inst.id = "v";
  inst.tokens = {"a", "b", "a"};
  inst.subj = {0, 1};
  inst.obj = {2, 3};
  inst.subj_type = "PERSON";
  inst.obj_type = "CITY";
  inst.relation = "per:city";
  VocabOptions opt;
  opt.min_freq = 2;
  opt.relation_labels = {"no_relation"};
  const auto v = build_vocab({inst}, opt);
  CHECK(v.words.key(Vocab::kPad) == kPadToken);
  CHECK(v.words.key(Vocab::kUnk) == kUnkToken);
  CHECK(v.words.contains("a"));
  CHECK_FALSE(v.words.contains("b"));
  CHECK(v.word_id("b") == Vocab::kUnk);
  CHECK(v.words.contains("SUBJ-PERSON"));
  CHECK(v.words.contains("OBJ-ORGANIZATION"));
  CHECK(v.relation_id("no_relation") == 0);
  for (std::uint32_t r = 0; r < v.relations.size(); ++r) CHECK(v.relation_id(v.relation_label(r)) == r);
  for (std::uint32_t w = 0; w < v.words.size(); ++w) CHECK(v.words.at(v.words.key(w)) == w);

  const auto back = Vocab::from_json(v.to_json());
  CHECK(back.words.keys() == v.words.keys());
  CHECK(back.relations.keys() == v.relations.keys());
  CHECK_THROWS_AS(build_vocab({}, opt), UsageError);
}

TEST_CASE("word vectors restricted to vocabulary") {
  const auto p = sms::testing::temp_path("vec.txt");
  std::ofstream(p) << "a 0.5 1\nzz 2 3\nb -1 0.25\n";
  IdMap keep({"a", "b", "c"});
  const auto wv = read_word_vectors(p.string(), 2, &keep);
  CHECK(wv.vectors.size() == 2);
  CHECK(wv.vectors.at("b")[1] == doctest::Approx(0.25));
  CHECK_THROWS_AS(read_word_vectors(p.string(), 3), DataError);
}

TEST_CASE("synthetic corpus contract") {
  const auto spec = SynthSpec::default_spec();
  const auto c = synth_generate(5, 400, 200, spec);
  REQUIRE(c.train.size() == 400);
  REQUIRE(c.test.size() == 200);
  REQUIRE(c.train_triggers.size() == 400);

  std::map<std::string, std::vector<std::string>> trigger_of;
  for (const auto& r : spec.relations) trigger_of[r.label] = r.trigger;

  auto check_split = [&](const std::vector<RelationInstance>& xs, const std::vector<TriggerAnnotation>& ts) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto& x = xs[k];
      const auto& t = ts[k];
      CHECK_NOTHROW(x.validate());
      CHECK(t.id == x.id);
      // rule-based oracle: the annotated trigger tokens determine the label
      std::vector<std::string> seg(x.tokens.begin() + t.trigger.start, x.tokens.begin() + t.trigger.end);
      std::string label;
      for (const auto& [l, trig] : trigger_of) {
        if (trig == seg) label = l;
      }
      CHECK(label == x.relation);
      // trigger lies between the attached mention and the other entity
      const auto& other = t.mention.overlaps(x.subj) || t.via_pronoun ? x.obj : x.subj;
      const bool between = (t.mention.end <= t.trigger.start && t.trigger.end <= other.start) ||
                           (other.end <= t.trigger.start && t.trigger.end <= t.mention.start);
      CHECK(between);
    }
  };
  check_split(c.train, c.train_triggers);
  check_split(c.test, c.test_triggers);

  std::set<std::pair<std::string, std::string>> seen;
  auto name_of = [](const RelationInstance& x, const Span& s) {
    std::string out;
    for (std::size_t i = s.start; i < s.end; ++i) out += x.tokens[i] + " ";
    return out;
  };
  for (const auto& x : c.train) seen.insert({name_of(x, x.subj), x.relation});
  for (const auto& x : c.test) CHECK(seen.count({name_of(x, x.subj), x.relation}) == 0);

  std::map<std::string, std::size_t> counts;
  for (const auto& x : c.train) ++counts[x.relation];
  for (const auto& [l, n] : counts) CHECK(n >= 400 / spec.relations.size() / 2);

  const auto again = synth_generate(5, 400, 200, spec);
  CHECK(again.train == c.train);
  CHECK(again.test == c.test);
  CHECK(triggers_from_json(triggers_to_json(c.test_triggers)).size() == c.test_triggers.size());
}

TEST_CASE("synthetic spec rejects duplicate triggers") {
  auto spec = SynthSpec::default_spec();
  spec.relations[1].trigger = spec.relations[0].trigger;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(synth_generate(1, 10, 10, spec), ConfigError);
  CHECK(SynthSpec::from_json(SynthSpec::default_spec().to_json()).relations.size() ==
        SynthSpec::default_spec().relations.size());
}

TEST_CASE("batchify") {
  CHECK(batchify(50, 50, 1, 0, true).size() == 1);
  const auto b = batchify(103, 50, 1, 0, true);
  REQUIRE(b.size() == 3);
  CHECK(b[0].size() == 50);
  CHECK(b[1].size() == 50);
  CHECK(b[2].size() == 3);
  std::set<std::size_t> all;
  for (const auto& batch : b) all.insert(batch.begin(), batch.end());
  CHECK(all.size() == 103);
  CHECK(batchify(103, 50, 1, 0, true) == b);
  CHECK(batchify(103, 50, 1, 1, true) != b);
  CHECK(batchify(4, 3, 9, 0, false) == std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3}});
  CHECK_THROWS(batchify(4, 0, 1, 0, true));
}
