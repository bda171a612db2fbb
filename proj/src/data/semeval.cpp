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

#include <cctype>
#include <fstream>
#include <sstream>

#include "sms/data.hpp"

namespace sms::data {
namespace {

bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '(': case ')':
    case '"': case '[': case ']': case '{': case '}':
      return true;
    default:
      return false;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_marker(const std::string& t) {
  return t == "<e1>" || t == "</e1>" || t == "<e2>" || t == "</e2>";
}

}  // namespace

std::vector<std::string> simple_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream words(text);
  std::string w;
  while (words >> w) {
    if (is_marker(w)) {
      out.push_back(w);
      continue;
    }
    std::size_t b = 0, e = w.size();
    std::vector<std::string> tail;
    while (b < e && is_split_punct(w[b])) out.emplace_back(1, w[b++]);
    while (e > b && is_split_punct(w[e - 1])) tail.emplace_back(1, w[--e]);
    if (e > b) {
      std::string core = w.substr(b, e - b);
      // Possessive clitic as its own token.
      if (core.size() > 2 && (core.ends_with("'s") || core.ends_with("'S"))) {
        out.push_back(core.substr(0, core.size() - 2));
        out.push_back(core.substr(core.size() - 2));
      } else {
        out.push_back(std::move(core));
      }
    }
    out.insert(out.end(), tail.rbegin(), tail.rend());
  }
  return out;
}

std::vector<RelationInstance> parse_semeval(std::istream& in, const std::string& source) {
  std::vector<RelationInstance> out;
  std::string line;
  std::size_t line_no = 0;
  bool pending = false;
  std::size_t pending_line = 0;
  RelationInstance current;

  auto fail = [&](std::size_t ln, const std::string& msg) -> ParseError {
    return ParseError(source + ":" + std::to_string(ln) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("Comment", 0) == 0) continue;

    if (!pending) {
      // "<id>\t\"sentence\""
      const auto tab = t.find_first_of("\t ");
      if (tab == std::string::npos) throw fail(line_no, "expected '<id><TAB>\"sentence\"'");
      std::string id = t.substr(0, tab);
      std::string sentence = trim(t.substr(tab + 1));
      if (sentence.size() >= 2 && sentence.front() == '"' && sentence.back() == '"') {
        sentence = sentence.substr(1, sentence.size() - 2);
      }
      for (const char* m : {"<e1>", "</e1>", "<e2>", "</e2>"}) {
        std::string marker(m);
        std::string spaced = " " + marker + " ";
        for (std::size_t pos = sentence.find(marker); pos != std::string::npos;
             pos = sentence.find(marker, pos + spaced.size())) {
          sentence.replace(pos, marker.size(), spaced);
        }
      }
      const auto raw = simple_tokenize(sentence);
      current = RelationInstance{};
      current.id = id;
      long s1 = -1, e1 = -1, s2 = -1, e2 = -1;
      for (const auto& tok : raw) {
        const long here = static_cast<long>(current.tokens.size());
        if (tok == "<e1>") {
          if (s1 >= 0) throw fail(line_no, "repeated <e1>");
          s1 = here;
        } else if (tok == "</e1>") {
          if (s1 < 0 || e1 >= 0) throw fail(line_no, "unbalanced </e1>");
          e1 = here;
        } else if (tok == "<e2>") {
          if (s2 >= 0) throw fail(line_no, "repeated <e2>");
          s2 = here;
        } else if (tok == "</e2>") {
          if (s2 < 0 || e2 >= 0) throw fail(line_no, "unbalanced </e2>");
          e2 = here;
        } else {
          current.tokens.push_back(tok);
        }
      }
      if (s1 < 0 || e1 < 0 || s2 < 0 || e2 < 0) throw fail(line_no, "unbalanced entity markers");
      if (e1 <= s1 || e2 <= s2) throw fail(line_no, "empty entity");
      current.subj = {static_cast<std::size_t>(s1), static_cast<std::size_t>(e1)};
      current.obj = {static_cast<std::size_t>(s2), static_cast<std::size_t>(e2)};
      current.subj_type = "E1";
      current.obj_type = "E2";
      pending = true;
      pending_line = line_no;
    } else {
      const bool other = t == "Other";
      const bool directed = t.size() > 9 && (t.ends_with("(e1,e2)") || t.ends_with("(e2,e1)"));
      if (!other && !directed) throw fail(line_no, "expected relation line, got '" + t + "'");
      current.relation = t;
      try {
        current.validate();
      } catch (const DataError& e) {
        throw fail(pending_line, e.what());
      }
      out.push_back(std::move(current));
      pending = false;
    }
  }
  if (pending) throw fail(pending_line, "sentence without relation line");
  return out;
}

std::vector<RelationInstance> read_semeval(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_semeval(in, path);
}

}  // namespace sms::data
