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

// SGD training loop with learning-rate decay on dev-F1 stagnation, optional
// linear warmup and global-norm gradient clipping.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sms/evaluation.hpp"
#include "sms/model.hpp"

namespace sms::train {

struct TrainConfig {
  double lr = 1.0;
  double lr_decay = 0.5;
  std::size_t epochs = 30;
  std::size_t batch_size = 50;
  std::size_t warmup_steps = 0;
  double grad_clip = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  std::size_t patience = 1;
  eval::Protocol protocol = eval::Protocol::kTacredMicro;
  bool shuffle = true;
  std::string optimizer = "sgd";

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double dev_p = 0;
  double dev_r = 0;
  double dev_f1 = 0;
  double lr = 0;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  // When set, writes metrics.jsonl, best.ckpt and config.json here.
  std::string out_dir;
  // Keep the best-dev parameters in the model after training.
  bool restore_best = true;
  std::function<void(const EpochMetrics&)> on_epoch;
  // Extra metadata merged into the checkpoint.
  nlohmann::json checkpoint_extra = nlohmann::json::object();
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  double best_f1 = -1;
  std::size_t decays = 0;
  double final_lr = 0;
};

// Learning rate for a global step, given the number of decays so far.
double scheduled_lr(const TrainConfig& cfg, std::size_t decays, std::size_t step);

TrainResult train(RelationModel<float>& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const TrainConfig& cfg, const TrainOptions& opts = {});

// One forward/backward/update pass over `batch`; returns mean loss. Exposed
// for tests.
double sgd_step(RelationModel<float>& model, const std::vector<const Example*>& batch, double lr,
                double grad_clip, std::uint64_t graph_seed);

// Predicted label strings (eval mode).
std::vector<std::string> predict_labels(const RelationModel<float>& model, const std::vector<Example>& set);
std::vector<std::string> gold_labels(const RelationModel<float>& model, const std::vector<Example>& set);

// Dropout disabled; empty set throws UsageError.
eval::ScoreReport evaluate_dev(const RelationModel<float>& model, const std::vector<Example>& dev_set,
                               eval::Protocol protocol);

// Serializes a metrics log as one JSON object per line.
std::string metrics_jsonl(const std::vector<EpochMetrics>& log);

}  // namespace sms::train
