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

#include "sms/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace sms::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr >= 0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite non-negative number");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (optimizer != "sgd") throw ConfigError("unsupported optimizer '" + optimizer + "' (only sgd)");
}

json TrainConfig::to_json() const {
  return {{"lr", lr},
          {"lr_decay", lr_decay},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"warmup_steps", warmup_steps},
          {"grad_clip", grad_clip},
          {"seed", seed},
          {"patience", patience},
          {"protocol", eval::to_string(protocol)},
          {"shuffle", shuffle},
          {"optimizer", optimizer}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.seed = j.value("seed", c.seed);
    c.patience = j.value("patience", c.patience);
    if (j.contains("protocol")) c.protocol = eval::parse_protocol(j.at("protocol").get<std::string>());
    c.shuffle = j.value("shuffle", c.shuffle);
    c.optimizer = j.value("optimizer", c.optimizer);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

json EpochMetrics::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"dev_P", dev_p},
          {"dev_R", dev_r}, {"dev_F1", dev_f1},         {"lr", lr}};
}

std::string metrics_jsonl(const std::vector<EpochMetrics>& log) {
  std::string out;
  for (const auto& m : log) out += m.to_json().dump() + "\n";
  return out;
}

double scheduled_lr(const TrainConfig& cfg, std::size_t decays, std::size_t step) {
  double lr = cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(decays));
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    lr *= static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps);
  }
  return lr;
}

namespace {

template <typename F>
void for_each_grad_row(ad::Parameter<float>& p, F&& f) {
  if (p.grad.empty()) return;
  if (p.sparse_rows) {
    const std::size_t c = p.cols();
    for (auto r : p.touched) f(r * c, (r + 1) * c);
  } else {
    f(std::size_t{0}, p.size());
  }
}

}  // namespace

double sgd_step(RelationModel<float>& model, const std::vector<const Example*>& batch, double lr,
                double grad_clip, std::uint64_t graph_seed) {
  if (batch.empty()) throw UsageError("empty batch");
  auto& store = model.store();
  store.zero_grad();
  const float inv = 1.0f / static_cast<float>(batch.size());
  double total = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    ad::Graph<float> g(Rng::mix(graph_seed, k), true);
    auto loss = model.loss(g, *batch[k]);
    const double l = loss.item();
    if (!std::isfinite(l)) {
      throw NumericError("training diverged: loss is " + std::to_string(l) + " on instance " + batch[k]->id);
    }
    total += l;
    g.backward(loss, inv);
  }

  double scale = 1.0;
  if (grad_clip > 0) {
    double sq = 0;
    for (auto& p : store.all()) {
      for_each_grad_row(p, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) sq += static_cast<double>(p.grad[i]) * p.grad[i];
      });
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
    if (norm > grad_clip) scale = grad_clip / norm;
  }
  const float step = static_cast<float>(lr * scale);
  if (step != 0.0f) {
    for (auto& p : store.all()) {
      if (!p.requires_grad) continue;
      for_each_grad_row(p, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) p.value[i] -= step * p.grad[i];
      });
    }
  }
  store.zero_grad();
  return total / static_cast<double>(batch.size());
}

std::vector<std::string> predict_labels(const RelationModel<float>& model, const std::vector<Example>& set) {
  std::vector<std::string> out;
  out.reserve(set.size());
  for (const auto& ex : set) out.push_back(model.vocab().relation_label(model.predict(ex).label));
  return out;
}

std::vector<std::string> gold_labels(const RelationModel<float>& model, const std::vector<Example>& set) {
  std::vector<std::string> out;
  out.reserve(set.size());
  for (const auto& ex : set) {
    if (!ex.has_label) throw DataError("instance " + ex.id + " has no gold relation");
    out.push_back(model.vocab().relation_label(ex.label));
  }
  return out;
}

eval::ScoreReport evaluate_dev(const RelationModel<float>& model, const std::vector<Example>& dev_set,
                               eval::Protocol protocol) {
  if (dev_set.empty()) throw UsageError("evaluation set is empty");
  return eval::score(protocol, gold_labels(model, dev_set), predict_labels(model, dev_set));
}

TrainResult train(RelationModel<float>& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& dev_set, const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("training set is empty");
  if (dev_set.empty()) throw UsageError("dev set is empty");

  namespace fs = std::filesystem;
  std::ofstream metrics;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    std::ofstream(fs::path(opts.out_dir) / "config.json")
        << json{{"model", model.config().to_json()}, {"train", cfg.to_json()}}.dump(2) << "\n";
    metrics.open(fs::path(opts.out_dir) / "metrics.jsonl");
    if (!metrics) throw DataError("cannot write metrics log in " + opts.out_dir);
  }

  TrainResult result;
  std::vector<std::vector<float>> best;
  std::size_t step = 0, stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = data::batchify(train_set.size(), cfg.batch_size, cfg.seed, epoch, cfg.shuffle);
    double loss_sum = 0;
    double epoch_lr = scheduled_lr(cfg, result.decays, step);
    std::vector<const Example*> batch;
    for (const auto& idx : batches) {
      batch.clear();
      for (auto i : idx) batch.push_back(&train_set[i]);
      const double lr = scheduled_lr(cfg, result.decays, step);
      epoch_lr = lr;
      const double l = sgd_step(model, batch, lr, cfg.grad_clip, Rng::mix(cfg.seed ^ 0x5eedULL, step));
      loss_sum += l * static_cast<double>(batch.size());
      ++step;
    }

    const auto report = evaluate_dev(model, dev_set, cfg.protocol);
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    m.dev_p = report.precision;
    m.dev_r = report.recall;
    m.dev_f1 = report.f1;
    m.lr = epoch_lr;

    if (report.f1 > result.best_f1) {
      result.best_f1 = report.f1;
      result.best_epoch = epoch;
      stale = 0;
      if (opts.restore_best) best = model.store().snapshot();
      if (!opts.out_dir.empty()) {
        json extra = opts.checkpoint_extra;
        extra["epoch"] = epoch;
        extra["dev_F1"] = report.f1;
        extra["train"] = cfg.to_json();
        model.save((fs::path(opts.out_dir) / "best.ckpt").string(), extra);
      }
    } else if (++stale >= cfg.patience) {
      result.decays++;
      stale = 0;
    }

    result.log.push_back(m);
    if (metrics.is_open()) metrics << m.to_json().dump() << "\n" << std::flush;
    if (opts.on_epoch) opts.on_epoch(m);
  }
  result.final_lr = scheduled_lr(cfg, result.decays, step);
  if (opts.restore_best && !best.empty()) model.store().restore(best);
  return result;
}

}  // namespace sms::train
