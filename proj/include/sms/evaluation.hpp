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

// Scoring protocols and the analysis procedures built on training runs.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sms::eval {

struct ClassStats {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // gold count
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct ScoreReport {
  std::string protocol;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t total = 0;
  std::size_t correct = 0;  // exact label matches, negatives included
  // Secondary metric: mean per-class F1 over non-negative classes (tacred-micro only).
  std::optional<double> macro_f1;
  std::map<std::string, ClassStats> per_class;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// P = tp / (tp + fp) or 0; R likewise; F1 = 0 when P + R = 0.
void finalize(ClassStats& s);
double harmonic(double p, double r);

inline constexpr const char* kTacredNegative = "no_relation";

ScoreReport micro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                     const std::string& negative_label = kTacredNegative);

// The nine directed relation names (without direction suffix).
const std::vector<std::string>& semeval_relation_names();
// Splits "Cause-Effect(e1,e2)" into ("Cause-Effect", "(e1,e2)"); "Other" has
// an empty direction. Unknown labels throw UsageError.
std::pair<std::string, std::string> split_semeval_label(const std::string& label);

ScoreReport semeval_macro_f1(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

enum class Protocol { kTacredMicro, kSemevalMacro };
Protocol parse_protocol(const std::string& name);
std::string to_string(Protocol p);

ScoreReport score(Protocol p, const std::vector<std::string>& gold, const std::vector<std::string>& pred);

// One label per line.
std::vector<std::string> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<std::string>& labels);

}  // namespace sms::eval
