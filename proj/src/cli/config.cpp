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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sms/cli.hpp"

#ifndef SMS_PRESET_DIR
#define SMS_PRESET_DIR "presets"
#endif

namespace sms::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
  throw ConfigError("config key '" + key + "': expected " + what + ", got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "a boolean");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return x;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "a number");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::string s = trim(v);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

const std::vector<std::pair<std::string, std::vector<std::string>>>& RunConfig::sections() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> s = {
      {"model",
       {"encoder", "word_dim", "pos_dim", "ner_dim", "position_dim", "use_pos", "use_ner", "use_position",
        "max_distance", "small_init", "word_init", "hidden", "lstm_dropout", "features", "kernel_sizes",
        "per_kernel_query", "conv_activation", "head_dropout", "mask_entities", "representation_width"}},
      {"train",
       {"lr", "lr_decay", "epochs", "batch_size", "warmup_steps", "grad_clip", "seed", "patience", "protocol",
        "shuffle", "optimizer", "seeds"}},
      {"data", {"format", "train", "dev", "test", "word_vectors", "representations", "min_freq", "out"}}};
  return s;
}

bool RunConfig::known_key(const std::string& key) {
  for (const auto& [section, keys] : sections()) {
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return true;
  }
  return false;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = raw;
  auto& ch = model.channels;
  auto& hd = model.head;
  if (key == "encoder") model.encoder = parse_encoder_kind(v);
  else if (key == "word_dim") ch.word_dim = to_u64(key, v);
  else if (key == "pos_dim") ch.pos_dim = to_u64(key, v);
  else if (key == "ner_dim") ch.ner_dim = to_u64(key, v);
  else if (key == "position_dim") ch.position_dim = to_u64(key, v);
  else if (key == "use_pos") ch.use_pos = to_bool(key, v);
  else if (key == "use_ner") ch.use_ner = to_bool(key, v);
  else if (key == "use_position") ch.use_position = to_bool(key, v);
  else if (key == "max_distance") ch.max_distance = to_u64(key, v);
  else if (key == "small_init") ch.small_init = to_double(key, v);
  else if (key == "word_init") ch.word_init = to_double(key, v);
  else if (key == "hidden") model.lstm.hidden = to_u64(key, v);
  else if (key == "lstm_dropout") model.lstm.dropout = to_double(key, v);
  else if (key == "features") {
    auto ks = hd.toggles.kernel_sizes;
    hd.toggles = head::FeatureToggles::parse(v);
    hd.toggles.kernel_sizes = ks;
  } else if (key == "kernel_sizes") {
    hd.toggles.kernel_sizes.clear();
    for (const auto& s : split_list(v)) hd.toggles.kernel_sizes.push_back(to_u64(key, s));
    hd.toggles.validate();
  } else if (key == "per_kernel_query") hd.per_kernel_query = to_bool(key, v);
  else if (key == "conv_activation") hd.conv_activation = to_bool(key, v);
  else if (key == "head_dropout") hd.dropout = to_double(key, v);
  else if (key == "mask_entities") model.mask_entities = to_bool(key, v);
  else if (key == "representation_width") model.representation_width = to_u64(key, v);
  else if (key == "lr") train.lr = to_double(key, v);
  else if (key == "lr_decay") train.lr_decay = to_double(key, v);
  else if (key == "epochs") train.epochs = to_u64(key, v);
  else if (key == "batch_size") train.batch_size = to_u64(key, v);
  else if (key == "warmup_steps") train.warmup_steps = to_u64(key, v);
  else if (key == "grad_clip") train.grad_clip = to_double(key, v);
  else if (key == "seed") train.seed = to_u64(key, v);
  else if (key == "patience") train.patience = to_u64(key, v);
  else if (key == "protocol") {
    try {
      train.protocol = eval::parse_protocol(v);
    } catch (const UsageError&) {
      bad(key, v, "tacred-micro or semeval-macro");
    }
  } else if (key == "shuffle") train.shuffle = to_bool(key, v);
  else if (key == "optimizer") train.optimizer = v;
  else if (key == "seeds") {
    seeds.clear();
    for (const auto& s : split_list(v)) seeds.push_back(to_u64(key, s));
    if (seeds.empty()) bad(key, v, "at least one seed");
  } else if (key == "format") {
    if (v != "auto" && v != "tacred" && v != "semeval") bad(key, v, "auto, tacred or semeval");
    format = v;
  } else if (key == "train") train_path = v;
  else if (key == "dev") dev_path = v;
  else if (key == "test") test_path = v;
  else if (key == "word_vectors") word_vectors = v;
  else if (key == "representations") representations = v;
  else if (key == "min_freq") min_freq = to_u64(key, v);
  else if (key == "out") out_dir = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  const auto& ch = model.channels;
  const auto& hd = model.head;
  if (key == "encoder") return to_string(model.encoder);
  if (key == "word_dim") return std::to_string(ch.word_dim);
  if (key == "pos_dim") return std::to_string(ch.pos_dim);
  if (key == "ner_dim") return std::to_string(ch.ner_dim);
  if (key == "position_dim") return std::to_string(ch.position_dim);
  if (key == "use_pos") return fmt_bool(ch.use_pos);
  if (key == "use_ner") return fmt_bool(ch.use_ner);
  if (key == "use_position") return fmt_bool(ch.use_position);
  if (key == "max_distance") return std::to_string(ch.max_distance);
  if (key == "small_init") return fmt_double(ch.small_init);
  if (key == "word_init") return fmt_double(ch.word_init);
  if (key == "hidden") return std::to_string(model.lstm.hidden);
  if (key == "lstm_dropout") return fmt_double(model.lstm.dropout);
  if (key == "features") return hd.toggles.name();
  if (key == "kernel_sizes") return join_list(hd.toggles.kernel_sizes);
  if (key == "per_kernel_query") return fmt_bool(hd.per_kernel_query);
  if (key == "conv_activation") return fmt_bool(hd.conv_activation);
  if (key == "head_dropout") return fmt_double(hd.dropout);
  if (key == "mask_entities") return fmt_bool(model.mask_entities);
  if (key == "representation_width") return std::to_string(model.representation_width);
  if (key == "lr") return fmt_double(train.lr);
  if (key == "lr_decay") return fmt_double(train.lr_decay);
  if (key == "epochs") return std::to_string(train.epochs);
  if (key == "batch_size") return std::to_string(train.batch_size);
  if (key == "warmup_steps") return std::to_string(train.warmup_steps);
  if (key == "grad_clip") return fmt_double(train.grad_clip);
  if (key == "seed") return std::to_string(train.seed);
  if (key == "patience") return std::to_string(train.patience);
  if (key == "protocol") return eval::to_string(train.protocol);
  if (key == "shuffle") return fmt_bool(train.shuffle);
  if (key == "optimizer") return train.optimizer;
  if (key == "seeds") return join_list(seeds);
  if (key == "format") return format;
  if (key == "train") return train_path;
  if (key == "dev") return dev_path;
  if (key == "test") return test_path;
  if (key == "word_vectors") return word_vectors;
  if (key == "representations") return representations;
  if (key == "min_freq") return std::to_string(min_freq);
  if (key == "out") return out_dir;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::to_text() const {
  static const std::vector<std::string> strings = {"encoder", "features", "protocol", "optimizer", "format",
                                                   "train", "dev", "test", "word_vectors", "representations",
                                                   "out"};
  static const std::vector<std::string> lists = {"kernel_sizes", "seeds"};
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, keys] : sections()) {
    if (!first) out << "\n";
    first = false;
    out << "[" << section << "]\n";
    for (const auto& k : keys) {
      const std::string v = get(k);
      out << k << " = ";
      if (std::find(strings.begin(), strings.end(), k) != strings.end()) out << quoted(v);
      else if (std::find(lists.begin(), lists.end(), k) != lists.end()) out << "[" << v << "]";
      else out << v;
      out << "\n";
    }
  }
  return out.str();
}

KeyValues parse_config(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string line, section;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    return ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments outside quotes.
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw fail("malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      bool ok = false;
      for (const auto& [name, keys] : RunConfig::sections()) ok = ok || name == section;
      if (!ok) throw fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!RunConfig::known_key(key)) throw fail("unknown key '" + key + "'");
    if (!section.empty()) {
      for (const auto& [name, keys] : RunConfig::sections()) {
        if (name == section && std::find(keys.begin(), keys.end(), key) == keys.end()) {
          throw fail("key '" + key + "' does not belong in [" + section + "]");
        }
      }
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (!value.empty() && value.front() == '"') {
      throw fail("unterminated string");
    }
    out.emplace_back(key, value);
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

std::string preset_path(const std::string& name) {
  namespace fs = std::filesystem;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("SMS_PRESET_DIR")) dirs.emplace_back(env);
  dirs.emplace_back(SMS_PRESET_DIR);
  for (const auto& d : dirs) {
    const auto p = d / (name + ".toml");
    if (fs::exists(p)) return p.string();
  }
  throw ConfigError("unknown preset '" + name + "'");
}

RunConfig resolve_config(const std::string& preset, const std::string& config_file, const KeyValues& overrides) {
  RunConfig cfg;
  if (!preset.empty()) {
    for (const auto& [k, v] : read_config_file(preset_path(preset))) cfg.set(k, v);
  }
  if (!config_file.empty()) {
    for (const auto& [k, v] : read_config_file(config_file)) cfg.set(k, v);
  }
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.train.validate();
  cfg.model.head.toggles.validate();
  return cfg;
}

std::vector<data::RelationInstance> load_dataset(const std::string& path, const std::string& format) {
  std::string f = format;
  if (f == "auto") f = path.ends_with(".json") ? "tacred" : "semeval";
  if (f == "tacred") return data::read_tacred_json(path);
  if (f == "semeval") return data::read_semeval(path);
  throw ConfigError("unknown data format '" + format + "'");
}

}  // namespace sms::cli
