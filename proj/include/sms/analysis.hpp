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

// Multi-run procedures: feature ablation and n-gram kernel sweep.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sms/evaluation.hpp"
#include "sms/training.hpp"

namespace sms::eval {

struct Experiment {
  ModelConfig model;
  train::TrainConfig train;
  data::Vocab vocab;
  std::vector<data::RelationInstance> train_set;
  std::vector<data::RelationInstance> dev_set;
  std::vector<data::RelationInstance> test_set;
  std::vector<std::uint64_t> seeds{1};
  std::size_t threads = 1;
  std::shared_ptr<const data::WordVectors> word_vectors;
  std::shared_ptr<const enc::RepresentationFile> representations;
  // When set, each run writes its metrics log and checkpoint under
  // <out_dir>/<run name>/seed<k>.
  std::string out_dir;
};

struct RunResult {
  std::string name;
  head::FeatureToggles toggles;
  std::uint64_t seed = 0;
  ScoreReport test;
  train::TrainResult train;
  double seconds = 0;
};

RunResult run_experiment(const Experiment& exp, const head::FeatureToggles& toggles, std::uint64_t seed,
                         const std::string& name);

// Worker count from SMS_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_threads();

// The four rows of the feature ablation in report order.
std::vector<head::FeatureToggles> ablation_toggles();

// Published reference F1 for an ablation row, if any ("base" included).
std::optional<double> reference_f1(const std::string& row);

struct AblationRow {
  std::string name;
  head::FeatureToggles toggles;
  std::vector<RunResult> runs;
  double mean_f1 = 0;
  double mean_accuracy = 0;
  std::optional<double> reference_f1;
};

std::vector<AblationRow> ablation_run(const Experiment& exp, const std::vector<head::FeatureToggles>& toggles);

struct SweepRow {
  std::size_t max_n = 0;
  std::vector<std::size_t> kernel_sizes;
  std::vector<RunResult> runs;
  double mean_f1 = 0;
};

std::vector<SweepRow> ngram_sweep(const Experiment& exp, const std::vector<std::size_t>& max_n_list);

nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows);
std::string ablation_to_text(const std::vector<AblationRow>& rows);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);
std::string sweep_to_text(const std::vector<SweepRow>& rows);

}  // namespace sms::eval
