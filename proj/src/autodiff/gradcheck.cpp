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
#include <cmath>

#include "sms/autodiff.hpp"

namespace sms::ad {
namespace {

double evaluate(const LossBuilder& build, const GradCheckOptions& opt) {
  Graph<double> g(opt.graph_seed, opt.training);
  auto loss = build(g);
  return loss.item();
}

}  // namespace

GradCheckReport grad_check(ParameterStore<double>& params, const LossBuilder& build,
                           const GradCheckOptions& opt) {
  std::vector<std::vector<double>> analytic;
  {
    Graph<double> g(opt.graph_seed, opt.training);
    auto loss = build(g);
    if (loss.size() != 1) {
      throw UsageError("grad_check: loss must be scalar, got shape " + to_string(loss.shape()));
    }
    params.zero_grad();
    g.backward(loss);
    for (auto& p : params.all()) {
      if (p.grad.empty()) {
        analytic.emplace_back(p.size(), 0.0);
      } else {
        analytic.push_back(p.grad);
      }
    }
  }

  GradCheckReport report;
  std::size_t k = 0;
  for (auto& p : params.all()) {
    const auto& a = analytic[k++];
    if (!p.requires_grad) continue;
    GradCheckParamSummary summary{p.name, 0, 0.0};
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + opt.eps;
      const double up = evaluate(build, opt);
      p.value[i] = saved - opt.eps;
      const double down = evaluate(build, opt);
      p.value[i] = saved;

      const double numeric = (up - down) / (2.0 * opt.eps);
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), opt.floor});
      const double rel = std::abs(a[i] - numeric) / denom;
      summary.checked++;
      summary.max_rel_error = std::max(summary.max_rel_error, rel);
      if (!(rel <= opt.tol)) report.failures.push_back({p.name, i, a[i], numeric, rel});
    }
    report.checked += summary.checked;
    report.max_rel_error = std::max(report.max_rel_error, summary.max_rel_error);
    report.params.push_back(std::move(summary));
  }
  return report;
}

}  // namespace sms::ad
