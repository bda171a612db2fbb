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

// Command-line front end: configuration resolution and subcommand dispatch.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sms/model.hpp"
#include "sms/training.hpp"

namespace sms::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Flat key = value view of everything a run needs.
struct RunConfig {
  ModelConfig model;
  train::TrainConfig train;
  std::string format = "auto";  // auto | tacred | semeval
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string word_vectors;
  std::string representations;
  std::string out_dir;
  std::size_t min_freq = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3};  // ablate / sweep

  // Keys grouped by section, in output order.
  static const std::vector<std::pair<std::string, std::vector<std::string>>>& sections();
  static bool known_key(const std::string& key);

  void set(const std::string& key, const std::string& value);  // ConfigError on unknown key or bad value
  std::string get(const std::string& key) const;

  // Every key, one per line, with section headers. Feeding the result back
  // through parse_config reproduces this config.
  std::string to_text() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Parses a key = value file: '#' comments, optional [model] / [train] /
// [data] headers, quoted strings, booleans, numbers and flat arrays.
KeyValues parse_config(std::istream& in, const std::string& source);
KeyValues read_config_file(const std::string& path);

// Path of a named preset file; throws ConfigError when missing.
std::string preset_path(const std::string& name);

// defaults <- preset <- config file <- overrides.
RunConfig resolve_config(const std::string& preset, const std::string& config_file, const KeyValues& overrides);

std::vector<data::RelationInstance> load_dataset(const std::string& path, const std::string& format);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace sms::cli
