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
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sms/error.hpp"
#include "sms/evaluation.hpp"

namespace sms::eval {

using nlohmann::json;

double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

void finalize(ClassStats& s) {
  s.precision = s.tp + s.fp == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  s.recall = s.tp + s.fn == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  s.f1 = harmonic(s.precision, s.recall);
}

json ScoreReport::to_json() const {
  json classes = json::object();
  for (const auto& [label, s] : per_class) {
    classes[label] = {{"tp", s.tp},       {"fp", s.fp},           {"fn", s.fn},
                      {"support", s.support}, {"precision", s.precision}, {"recall", s.recall},
                      {"f1", s.f1}};
  }
  json j = {{"protocol", protocol}, {"precision", precision}, {"recall", recall},
            {"f1", f1},             {"accuracy", accuracy()}, {"total", total},
            {"correct", correct},   {"per_class", classes}};
  if (macro_f1) j["macro_f1"] = *macro_f1;
  return j;
}

std::string ScoreReport::to_text() const {
  std::size_t w = 5;
  for (const auto& [label, s] : per_class) w = std::max(w, label.size());
  std::ostringstream out;
  char buf[256];
  out << "protocol: " << protocol << "\n";
  std::snprintf(buf, sizeof buf, "%-*s %6s %6s %6s %8s %8s %8s %8s\n", static_cast<int>(w), "label", "tp",
                "fp", "fn", "support", "P", "R", "F1");
  out << buf;
  for (const auto& [label, s] : per_class) {
    std::snprintf(buf, sizeof buf, "%-*s %6zu %6zu %6zu %8zu %8.4f %8.4f %8.4f\n", static_cast<int>(w),
                  label.c_str(), s.tp, s.fp, s.fn, s.support, s.precision, s.recall, s.f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s %6s %6s %6s %8zu %8.4f %8.4f %8.4f\n", static_cast<int>(w), "overall",
                "", "", "", total, precision, recall, f1);
  out << buf;
  std::snprintf(buf, sizeof buf, "accuracy: %.4f (%zu/%zu)\n", accuracy(), correct, total);
  out << buf;
  if (macro_f1) {
    std::snprintf(buf, sizeof buf, "macro-F1 (per-class mean): %.4f\n", *macro_f1);
    out << buf;
  }
  return out.str();
}

namespace {

void check_lengths(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) {
    throw UsageError("gold and predicted label counts differ: " + std::to_string(gold.size()) + " vs " +
                     std::to_string(pred.size()));
  }
}

}  // namespace

ScoreReport micro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                     const std::string& negative_label) {
  check_lengths(gold, pred);
  ScoreReport r;
  r.protocol = "tacred-micro";
  r.total = gold.size();
  std::size_t tp = 0, guessed = 0, actual = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = pred[i];
    if (g == p) r.correct++;
    if (g != negative_label) {
      actual++;
      auto& s = r.per_class[g];
      s.support++;
      if (p == g) s.tp++, tp++;
      else s.fn++;
    }
    if (p != negative_label) {
      guessed++;
      if (p != g) r.per_class[p].fp++;
    }
  }
  double f1_sum = 0;
  for (auto& [label, s] : r.per_class) {
    finalize(s);
    f1_sum += s.f1;
  }
  r.macro_f1 = r.per_class.empty() ? 0.0 : f1_sum / static_cast<double>(r.per_class.size());
  r.precision = guessed == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(guessed);
  r.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

const std::vector<std::string>& semeval_relation_names() {
  static const std::vector<std::string> names = {
      "Cause-Effect",      "Component-Whole", "Content-Container", "Entity-Destination", "Entity-Origin",
      "Instrument-Agency", "Member-Collection", "Message-Topic",    "Product-Producer"};
  return names;
}

std::pair<std::string, std::string> split_semeval_label(const std::string& label) {
  if (label == "Other") return {"Other", ""};
  static const std::set<std::string> names(semeval_relation_names().begin(), semeval_relation_names().end());
  for (const char* dir : {"(e1,e2)", "(e2,e1)"}) {
    if (label.ends_with(dir)) {
      std::string name = label.substr(0, label.size() - 7);
      if (names.count(name)) return {name, dir};
    }
  }
  throw UsageError("unknown SemEval label '" + label + "'");
}

ScoreReport semeval_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  check_lengths(gold, pred);
  ScoreReport r;
  r.protocol = "semeval-macro";
  r.total = gold.size();
  for (const auto& name : semeval_relation_names()) r.per_class[name];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = split_semeval_label(gold[i]);
    const auto p = split_semeval_label(pred[i]);
    if (gold[i] == pred[i]) r.correct++;
    if (g.first != "Other") r.per_class[g.first].support++;
    if (gold[i] == pred[i]) {
      if (g.first != "Other") r.per_class[g.first].tp++;
      continue;
    }
    if (p.first != "Other") r.per_class[p.first].fp++;
    if (g.first != "Other") r.per_class[g.first].fn++;
  }
  double sp = 0, sr = 0, sf = 0;
  for (auto& [name, s] : r.per_class) {
    finalize(s);
    sp += s.precision;
    sr += s.recall;
    sf += s.f1;
  }
  const double k = static_cast<double>(r.per_class.size());
  r.precision = sp / k;
  r.recall = sr / k;
  r.f1 = sf / k;
  return r;
}

Protocol parse_protocol(const std::string& name) {
  if (name == "tacred-micro" || name == "tacred") return Protocol::kTacredMicro;
  if (name == "semeval-macro" || name == "semeval") return Protocol::kSemevalMacro;
  throw UsageError("unknown protocol '" + name + "' (expected tacred-micro or semeval-macro)");
}

std::string to_string(Protocol p) { return p == Protocol::kTacredMicro ? "tacred-micro" : "semeval-macro"; }

ScoreReport score(Protocol p, const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  return p == Protocol::kTacredMicro ? micro_f1(gold, pred) : semeval_macro_f1(gold, pred);
}

std::vector<std::string> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(line);
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& l : labels) out << l << '\n';
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace sms::eval
