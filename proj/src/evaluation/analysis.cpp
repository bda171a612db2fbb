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

#include "sms/analysis.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>

namespace sms::eval {

using nlohmann::json;

std::size_t worker_threads() {
  if (const char* env = std::getenv("SMS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError(std::string("SMS_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunResult run_experiment(const Experiment& exp, const head::FeatureToggles& toggles, std::uint64_t seed,
                         const std::string& name) {
  const auto start = std::chrono::steady_clock::now();
  ModelConfig mc = exp.model;
  mc.head.toggles = toggles;
  RelationModel<float> model(mc, exp.vocab, seed);
  if (exp.word_vectors) model.load_pretrained(*exp.word_vectors);
  if (exp.representations) model.set_representations(exp.representations);

  const auto train_set = model.prepare(exp.train_set);
  const auto dev_set = model.prepare(exp.dev_set.empty() ? exp.train_set : exp.dev_set);
  const auto test_set = exp.test_set.empty() ? dev_set : model.prepare(exp.test_set);

  train::TrainConfig tc = exp.train;
  tc.seed = seed;
  train::TrainOptions opts;
  if (!exp.out_dir.empty()) {
    opts.out_dir = (std::filesystem::path(exp.out_dir) / name / ("seed" + std::to_string(seed))).string();
  }
  RunResult r;
  r.name = name;
  r.toggles = toggles;
  r.seed = seed;
  r.train = train::train(model, train_set, dev_set, tc, opts);
  r.test = train::evaluate_dev(model, test_set, tc.protocol);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

struct Job {
  head::FeatureToggles toggles;
  std::uint64_t seed;
  std::string name;
};

std::vector<RunResult> run_jobs(const Experiment& exp, const std::vector<Job>& jobs) {
  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_experiment(exp, jobs[i].toggles, jobs[i].seed, jobs[i].name);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(exp.threads, 1), jobs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace

std::vector<head::FeatureToggles> ablation_toggles() {
  return {head::FeatureToggles::sentence_only(), head::FeatureToggles::mention_only(),
          head::FeatureToggles::segment_only(), head::FeatureToggles::all()};
}

std::optional<double> reference_f1(const std::string& row) {
  if (row == "base") return 78.0;
  if (row == "sentence") return 78.6;
  if (row == "mention") return 78.8;
  if (row == "segment") return 79.4;
  if (row == "all") return 79.8;
  return std::nullopt;
}

std::vector<AblationRow> ablation_run(const Experiment& exp, const std::vector<head::FeatureToggles>& toggles) {
  if (toggles.empty()) throw UsageError("ablation needs at least one toggle set");
  if (exp.seeds.empty()) throw UsageError("ablation needs at least one seed");
  std::vector<Job> jobs;
  for (const auto& t : toggles) {
    t.validate();
    for (auto s : exp.seeds) jobs.push_back({t, s, t.name()});
  }
  auto results = run_jobs(exp, jobs);
  std::vector<AblationRow> rows;
  std::size_t k = 0;
  for (const auto& t : toggles) {
    AblationRow row;
    row.name = t.name();
    row.toggles = t;
    row.reference_f1 = reference_f1(row.name);
    for (std::size_t s = 0; s < exp.seeds.size(); ++s) {
      row.mean_f1 += results[k].test.f1;
      row.mean_accuracy += results[k].test.accuracy();
      row.runs.push_back(std::move(results[k++]));
    }
    row.mean_f1 /= static_cast<double>(exp.seeds.size());
    row.mean_accuracy /= static_cast<double>(exp.seeds.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> ngram_sweep(const Experiment& exp, const std::vector<std::size_t>& max_n_list) {
  if (max_n_list.empty()) throw UsageError("sweep needs at least one max n");
  if (exp.seeds.empty()) throw UsageError("sweep needs at least one seed");
  std::vector<Job> jobs;
  std::vector<SweepRow> rows;
  for (auto n : max_n_list) {
    if (n == 0) throw ConfigError("sweep max n must be at least 1");
    SweepRow row;
    row.max_n = n;
    for (std::size_t t = 1; t <= n; ++t) row.kernel_sizes.push_back(t);
    head::FeatureToggles tg = exp.model.head.toggles;
    tg.kernel_sizes = row.kernel_sizes;
    tg.use_segment = true;
    for (auto s : exp.seeds) jobs.push_back({tg, s, "ngram" + std::to_string(n)});
    rows.push_back(std::move(row));
  }
  auto results = run_jobs(exp, jobs);
  std::size_t k = 0;
  for (auto& row : rows) {
    for (std::size_t s = 0; s < exp.seeds.size(); ++s) {
      row.mean_f1 += results[k].test.f1;
      row.runs.push_back(std::move(results[k++]));
    }
    row.mean_f1 /= static_cast<double>(exp.seeds.size());
  }
  return rows;
}

namespace {

json run_json(const RunResult& r) {
  return {{"seed", r.seed},
          {"f1", r.test.f1},
          {"precision", r.test.precision},
          {"recall", r.test.recall},
          {"accuracy", r.test.accuracy()},
          {"best_epoch", r.train.best_epoch},
          {"seconds", r.seconds}};
}

}  // namespace

json ablation_to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json runs = json::array();
    for (const auto& r : row.runs) runs.push_back(run_json(r));
    out.push_back({{"row", row.name},
                   {"toggles", row.toggles.to_json()},
                   {"mean_f1", row.mean_f1},
                   {"mean_accuracy", row.mean_accuracy},
                   {"reference_f1", row.reference_f1 ? json(*row.reference_f1) : json(nullptr)},
                   {"runs", runs}});
  }
  return {{"rows", out}, {"reference_base_f1", *reference_f1("base")}};
}

std::string ablation_to_text(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-26s %8s %8s %6s %10s\n", "features", "mean F1", "mean acc", "runs", "ref F1");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-26s %8s %8s %6s %10.1f\n", "base (reference only)", "-", "-", "-",
                *reference_f1("base"));
  out << buf;
  for (const auto& row : rows) {
    const std::string ref = row.reference_f1 ? std::to_string(*row.reference_f1).substr(0, 4) : "-";
    std::snprintf(buf, sizeof buf, "%-26s %8.2f %8.2f %6zu %10s\n", ("+ " + row.name).c_str(), 100 * row.mean_f1,
                  100 * row.mean_accuracy, row.runs.size(), ref.c_str());
    out << buf;
  }
  return out.str();
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json runs = json::array();
    for (const auto& r : row.runs) runs.push_back(run_json(r));
    out.push_back({{"max_n", row.max_n}, {"kernel_sizes", row.kernel_sizes}, {"mean_f1", row.mean_f1}, {"runs", runs}});
  }
  return {{"rows", out}};
}

std::string sweep_to_text(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s %-16s %8s\n", "max n", "kernels", "mean F1");
  out << buf;
  for (const auto& row : rows) {
    std::string ks;
    for (auto t : row.kernel_sizes) ks += (ks.empty() ? "" : ",") + std::to_string(t);
    std::snprintf(buf, sizeof buf, "%-6zu %-16s %8.2f\n", row.max_n, ks.c_str(), 100 * row.mean_f1);
    out << buf;
  }
  return out.str();
}

}  // namespace sms::eval
