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
#include <limits>

#include "sms/autodiff.hpp"

namespace sms::ad {
namespace {

template <typename T>
void check_same_graph(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (&a.graph() != &b.graph()) throw UsageError(std::string(op) + ": operands from different graphs");
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + to_string(s));
  }
}

template <typename T>
bool all_finite(std::span<const T> v) {
  for (T x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_graph(a, b, "matmul");
  require_rank(a.shape(), 2, "matmul", "lhs");
  require_rank(b.shape(), 2, "matmul", "rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  auto av = a.value();
  auto bv = b.value();
  std::vector<T> out(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = av[i * k + p];
      if (aip == T(0)) continue;
      const T* brow = &bv[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit({m, n}, std::move(out), {ia, ib}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto av = g.value(ia);
    auto bv = g.value(ib);
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = av[i * k + p];
          if (aip == T(0)) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> matvec(const Tensor<T>& a, const Tensor<T>& x) {
  check_same_graph(a, x, "matvec");
  require_rank(a.shape(), 2, "matvec", "matrix");
  require_rank(x.shape(), 1, "matvec", "vector");
  const std::size_t m = a.rows(), n = a.cols();
  if (x.size() != n) {
    throw ShapeError("matvec: " + to_string(a.shape()) + " x " + to_string(x.shape()));
  }
  auto av = a.value();
  auto xv = x.value();
  std::vector<T> out(m, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T acc = 0;
    for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j] * xv[j];
    out[i] = acc;
  }
  const auto ia = a.id(), ix = x.id();
  return a.graph().emit({m}, std::move(out), {ia, ix}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto av = g.value(ia);
    auto xv = g.value(ix);
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = go[i];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += gi * xv[j];
      }
    }
    if (g.requires_grad(ix)) {
      auto gx = g.grad(ix);
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = go[i];
        for (std::size_t j = 0; j < n; ++j) gx[j] += av[i * n + j] * gi;
      }
    }
  });
}

template <typename T>
Tensor<T> vecmat(const Tensor<T>& x, const Tensor<T>& a) {
  check_same_graph(a, x, "vecmat");
  require_rank(a.shape(), 2, "vecmat", "matrix");
  require_rank(x.shape(), 1, "vecmat", "vector");
  const std::size_t m = a.rows(), n = a.cols();
  if (x.size() != m) {
    throw ShapeError("vecmat: " + to_string(x.shape()) + " x " + to_string(a.shape()));
  }
  auto av = a.value();
  auto xv = x.value();
  std::vector<T> out(n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    const T xi = xv[i];
    for (std::size_t j = 0; j < n; ++j) out[j] += xi * av[i * n + j];
  }
  const auto ia = a.id(), ix = x.id();
  return a.graph().emit({n}, std::move(out), {ix, ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto av = g.value(ia);
    auto xv = g.value(ix);
    if (g.requires_grad(ix)) {
      auto gx = g.grad(ix);
      for (std::size_t i = 0; i < m; ++i) {
        T acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += av[i * n + j] * go[j];
        gx[i] += acc;
      }
    }
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const T xi = xv[i];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += xi * go[j];
      }
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_graph(a, b, "add");
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  auto av = a.value();
  auto bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.shape(), std::move(out), {ia, ib}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    for (auto id : {ia, ib}) {
      if (!g.requires_grad(id)) continue;
      auto gp = g.grad(id);
      for (std::size_t i = 0; i < go.size(); ++i) gp[i] += go[i];
    }
  });
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  check_same_graph(a, bias, "add_row_bias");
  require_rank(a.shape(), 2, "add_row_bias", "matrix");
  require_rank(bias.shape(), 1, "add_row_bias", "bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n) {
    throw ShapeError("add_row_bias: " + to_string(a.shape()) + " + " + to_string(bias.shape()));
  }
  auto av = a.value();
  auto bv = bias.value();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  }
  const auto ia = a.id(), ib = bias.id();
  return a.graph().emit({m, n}, std::move(out), {ia, ib}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[j] += go[i * n + j];
      }
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_graph(a, b, "mul");
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  auto av = a.value();
  auto bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.shape(), std::move(out), {ia, ib}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto av = g.value(ia);
    auto bv = g.value(ib);
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad(ib);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto ga = g.grad(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto av = g.value(ia);
    auto ga = g.grad(ia);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (av[i] > T(0)) ga[i] += go[i];
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-av[i]));
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto y = g.value(self);
    auto ga = g.grad(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto y = g.value(self);
    auto ga = g.grad(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& v) {
  require_rank(v.shape(), 1, "softmax", "input");
  auto x = v.value();
  if (x.empty()) throw ShapeError("softmax: empty input");
  if (!all_finite(x)) throw NumericError("softmax: non-finite input");
  const T mx = *std::max_element(x.begin(), x.end());
  std::vector<T> out(x.size());
  T z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (auto& o : out) o /= z;
  const auto iv = v.id();
  return v.graph().emit(v.shape(), std::move(out), {iv}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto y = g.value(self);
    auto gx = g.grad(iv);
    T dot = 0;
    for (std::size_t i = 0; i < go.size(); ++i) dot += go[i] * y[i];
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += y[i] * (go[i] - dot);
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, std::size_t gold) {
  require_rank(probs.shape(), 1, "cross_entropy", "probabilities");
  auto p = probs.value();
  if (gold >= p.size()) {
    throw UsageError("cross_entropy: label " + std::to_string(gold) + " out of range for " +
                     std::to_string(p.size()) + " classes");
  }
  T sum = 0;
  for (T x : p) sum += x;
  const double tol = std::is_same_v<T, double> ? 1e-6 : 1e-4;
  if (std::abs(static_cast<double>(sum) - 1.0) > tol) {
    throw NumericError("cross_entropy: probabilities sum to " + std::to_string(sum));
  }
  std::vector<T> out{-std::log(p[gold])};
  const auto ip = probs.id();
  return probs.graph().emit({}, std::move(out), {ip}, [=](Graph<T>& g, std::uint32_t self) {
    const T go = g.grad(self)[0];
    auto p = g.value(ip);
    g.grad(ip)[gold] += -go / p[gold];
  });
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t gold) {
  require_rank(logits.shape(), 1, "softmax_cross_entropy", "logits");
  auto x = logits.value();
  if (gold >= x.size()) {
    throw UsageError("softmax_cross_entropy: label " + std::to_string(gold) +
                     " out of range for " + std::to_string(x.size()) + " classes");
  }
  if (!all_finite(x)) throw NumericError("softmax_cross_entropy: non-finite logits");
  const T mx = *std::max_element(x.begin(), x.end());
  std::vector<T> probs(x.size());
  T z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probs[i] = std::exp(x[i] - mx);
    z += probs[i];
  }
  for (auto& p : probs) p /= z;
  std::vector<T> out{mx + std::log(z) - x[gold]};
  const auto il = logits.id();
  return logits.graph().emit(
      {}, std::move(out), {il}, [=, probs = std::move(probs)](Graph<T>& g, std::uint32_t self) {
        const T go = g.grad(self)[0];
        auto gl = g.grad(il);
        for (std::size_t i = 0; i < probs.size(); ++i) {
          gl[i] += go * (probs[i] - (i == gold ? T(1) : T(0)));
        }
      });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<T> out;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    check_same_graph(p, parts[0], "concat");
    require_rank(p.shape(), 1, "concat", "part");
    offsets.push_back(out.size());
    auto v = p.value();
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(p.id());
  }
  const std::size_t total = out.size();
  auto ids_copy = ids;
  return parts[0].graph().emit({total}, std::move(out), std::move(ids_copy),
                               [=](Graph<T>& g, std::uint32_t self) {
                                 auto go = g.grad(self);
                                 for (std::size_t k = 0; k < ids.size(); ++k) {
                                   if (!g.requires_grad(ids[k])) continue;
                                   auto gp = g.grad(ids[k]);
                                   for (std::size_t i = 0; i < gp.size(); ++i) {
                                     gp[i] += go[offsets[k] + i];
                                   }
                                 }
                               });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = parts[0].shape().empty() ? 0 : parts[0].rows();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths, offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    check_same_graph(p, parts[0], "concat_cols");
    require_rank(p.shape(), 2, "concat_cols", "part");
    if (p.rows() != n) {
      throw ShapeError("concat_cols: row counts differ, " + to_string(parts[0].shape()) + " vs " +
                       to_string(p.shape()));
    }
    ids.push_back(p.id());
    offsets.push_back(total);
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<T> out(n * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].value();
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * widths[k]), widths[k],
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + offsets[k]));
    }
  }
  auto ids_copy = ids;
  return parts[0].graph().emit({n, total}, std::move(out), std::move(ids_copy),
                               [=](Graph<T>& g, std::uint32_t self) {
                                 auto go = g.grad(self);
                                 for (std::size_t k = 0; k < ids.size(); ++k) {
                                   if (!g.requires_grad(ids[k])) continue;
                                   auto gp = g.grad(ids[k]);
                                   for (std::size_t r = 0; r < n; ++r) {
                                     for (std::size_t c = 0; c < widths[k]; ++c) {
                                       gp[r * widths[k] + c] += go[r * total + offsets[k] + c];
                                     }
                                   }
                                 }
                               });
}

template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t d = rows[0].size();
  std::vector<T> out;
  out.reserve(rows.size() * d);
  std::vector<std::uint32_t> ids;
  for (const auto& r : rows) {
    check_same_graph(r, rows[0], "stack_rows");
    require_rank(r.shape(), 1, "stack_rows", "row");
    if (r.size() != d) {
      throw ShapeError("stack_rows: row widths differ, " + to_string(rows[0].shape()) + " vs " +
                       to_string(r.shape()));
    }
    auto v = r.value();
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(r.id());
  }
  auto ids_copy = ids;
  return rows[0].graph().emit({rows.size(), d}, std::move(out), std::move(ids_copy),
                              [=](Graph<T>& g, std::uint32_t self) {
                                auto go = g.grad(self);
                                for (std::size_t k = 0; k < ids.size(); ++k) {
                                  if (!g.requires_grad(ids[k])) continue;
                                  auto gp = g.grad(ids[k]);
                                  for (std::size_t c = 0; c < d; ++c) gp[c] += go[k * d + c];
                                }
                              });
}

template <typename T>
Tensor<T> row(const Tensor<T>& a, std::size_t r) {
  require_rank(a.shape(), 2, "row", "matrix");
  if (r >= a.rows()) {
    throw ShapeError("row: index " + std::to_string(r) + " outside " + to_string(a.shape()));
  }
  const std::size_t d = a.cols();
  auto v = a.value();
  std::vector<T> out(v.begin() + static_cast<std::ptrdiff_t>(r * d),
                     v.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  const auto ia = a.id();
  return a.graph().emit({d}, std::move(out), {ia}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto ga = g.grad(ia);
    for (std::size_t c = 0; c < d; ++c) ga[r * d + c] += go[c];
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& v, std::size_t offset, std::size_t length) {
  require_rank(v.shape(), 1, "slice", "input");
  if (length == 0 || offset + length > v.size()) {
    throw ShapeError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") outside " + to_string(v.shape()));
  }
  auto x = v.value();
  std::vector<T> out(x.begin() + static_cast<std::ptrdiff_t>(offset),
                     x.begin() + static_cast<std::ptrdiff_t>(offset + length));
  const auto iv = v.id();
  return v.graph().emit({length}, std::move(out), {iv}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto gv = g.grad(iv);
    for (std::size_t i = 0; i < length; ++i) gv[offset + i] += go[i];
  });
}

template <typename T>
Tensor<T> conv1d_same(const Tensor<T>& h, const Tensor<T>& kernel, std::size_t t) {
  check_same_graph(h, kernel, "conv1d_same");
  if (t < 1) throw ConfigError("conv1d_same: kernel size must be at least 1");
  require_rank(h.shape(), 2, "conv1d_same", "input");
  require_rank(kernel.shape(), 2, "conv1d_same", "kernel");
  const std::size_t n = h.rows(), din = h.cols(), dout = kernel.cols();
  if (n == 0) throw ShapeError("conv1d_same: empty input");
  if (kernel.rows() != t * din) {
    throw ShapeError("conv1d_same: kernel " + to_string(kernel.shape()) + " does not fit window " +
                     std::to_string(t) + " over input " + to_string(h.shape()));
  }
  auto hv = h.value();
  auto kv = kernel.value();
  std::vector<T> out(n * dout, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    T* orow = &out[i * dout];
    for (std::size_t s = 0; s < t && i + s < n; ++s) {
      for (std::size_t c = 0; c < din; ++c) {
        const T x = hv[(i + s) * din + c];
        const T* krow = &kv[(s * din + c) * dout];
        for (std::size_t o = 0; o < dout; ++o) orow[o] += x * krow[o];
      }
    }
  }
  const auto ih = h.id(), ik = kernel.id();
  return h.graph().emit({n, dout}, std::move(out), {ih, ik}, [=](Graph<T>& g, std::uint32_t self) {
    auto go = g.grad(self);
    auto hv = g.value(ih);
    auto kv = g.value(ik);
    const bool need_h = g.requires_grad(ih), need_k = g.requires_grad(ik);
    std::span<T> gh, gk;
    if (need_h) gh = g.grad(ih);
    if (need_k) gk = g.grad(ik);
    for (std::size_t i = 0; i < n; ++i) {
      const T* grow = &go[i * dout];
      for (std::size_t s = 0; s < t && i + s < n; ++s) {
        for (std::size_t c = 0; c < din; ++c) {
          const std::size_t kr = (s * din + c) * dout;
          if (need_h) {
            T acc = 0;
            for (std::size_t o = 0; o < dout; ++o) acc += grow[o] * kv[kr + o];
            gh[(i + s) * din + c] += acc;
          }
          if (need_k) {
            const T x = hv[(i + s) * din + c];
            for (std::size_t o = 0; o < dout; ++o) gk[kr + o] += x * grow[o];
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> max_pool_rows(const Tensor<T>& h, std::size_t lo, std::size_t hi) {
  require_rank(h.shape(), 2, "max_pool_rows", "input");
  const std::size_t n = h.rows(), d = h.cols();
  if (lo >= hi || hi > n) {
    throw SpanError("max_pool_rows: invalid span [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + ") over " + std::to_string(n) + " rows");
  }
  auto hv = h.value();
  std::vector<T> out(d);
  std::vector<std::uint32_t> arg(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t best = lo;
    for (std::size_t r = lo + 1; r < hi; ++r) {
      if (hv[r * d + c] > hv[best * d + c]) best = r;
    }
    out[c] = hv[best * d + c];
    arg[c] = static_cast<std::uint32_t>(best);
  }
  const auto ih = h.id();
  return h.graph().emit({d}, std::move(out), {ih},
                        [=, arg = std::move(arg)](Graph<T>& g, std::uint32_t self) {
                          auto go = g.grad(self);
                          auto gh = g.grad(ih);
                          for (std::size_t c = 0; c < d; ++c) gh[arg[c] * d + c] += go[c];
                        });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::uint32_t> ids) {
  require_rank(table.shape(), 2, "embedding", "table");
  const std::size_t v = table.rows(), d = table.cols();
  if (ids.empty()) throw ShapeError("embedding: no ids");
  auto tv = table.value();
  std::vector<T> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) {
      throw LookupError("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                        std::to_string(v) + " rows");
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[r] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  const auto it = table.id();
  std::vector<std::uint32_t> idv(ids.begin(), ids.end());
  return table.graph().emit({ids.size(), d}, std::move(out), {it},
                            [=, idv = std::move(idv)](Graph<T>& g, std::uint32_t self) {
                              auto go = g.grad(self);
                              auto gt = g.grad(it);
                              Parameter<T>* p = g.param_of(it);
                              const bool sparse = p != nullptr && p->sparse_rows;
                              for (std::size_t r = 0; r < idv.size(); ++r) {
                                if (sparse) p->mark_row(idv[r]);
                                for (std::size_t c = 0; c < d; ++c) {
                                  gt[idv[r] * d + c] += go[r * d + c];
                                }
                              }
                            });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double p) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: probability must be in [0, 1)");
  Graph<T>& graph = a.graph();
  if (!graph.training() || p == 0.0) return a;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  auto av = a.value();
  std::vector<T> mask(av.size());
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    mask[i] = graph.rng().uniform() < p ? T(0) : keep_scale;
    out[i] = av[i] * mask[i];
  }
  const auto ia = a.id();
  return graph.emit(a.shape(), std::move(out), {ia},
                    [=, mask = std::move(mask)](Graph<T>& g, std::uint32_t self) {
                      auto go = g.grad(self);
                      auto ga = g.grad(ia);
                      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * mask[i];
                    });
}

template <typename T>
Tensor<T> lstm_scan(const Tensor<T>& xw, const Tensor<T>& u, bool reverse) {
  check_same_graph(xw, u, "lstm_scan");
  require_rank(xw.shape(), 2, "lstm_scan", "input projection");
  require_rank(u.shape(), 2, "lstm_scan", "recurrent matrix");
  const std::size_t n = xw.rows(), h = u.rows();
  if (n == 0) throw ShapeError("lstm_scan: empty sequence");
  if (u.cols() != 4 * h || xw.cols() != 4 * h) {
    throw ShapeError("lstm_scan: input projection " + to_string(xw.shape()) +
                     " and recurrent matrix " + to_string(u.shape()) + " disagree");
  }
  auto xv = xw.value();
  auto uv = u.value();
  // Per position: gates (i, f, g, o) and cell state, indexed by position.
  std::vector<T> gates(n * 4 * h), cells(n * h), out(n * h);
  std::vector<T> z(4 * h);
  std::vector<T> h_prev(h, T(0)), c_prev(h, T(0));
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    std::copy_n(&xv[t * 4 * h], 4 * h, z.begin());
    if (step > 0) {
      for (std::size_t k = 0; k < h; ++k) {
        const T hk = h_prev[k];
        if (hk == T(0)) continue;
        const T* urow = &uv[k * 4 * h];
        for (std::size_t j = 0; j < 4 * h; ++j) z[j] += hk * urow[j];
      }
    }
    T* gt = &gates[t * 4 * h];
    for (std::size_t k = 0; k < h; ++k) {
      const T ig = T(1) / (T(1) + std::exp(-z[k]));
      const T fg = T(1) / (T(1) + std::exp(-z[h + k]));
      const T gg = std::tanh(z[2 * h + k]);
      const T og = T(1) / (T(1) + std::exp(-z[3 * h + k]));
      const T c = fg * c_prev[k] + ig * gg;
      gt[k] = ig;
      gt[h + k] = fg;
      gt[2 * h + k] = gg;
      gt[3 * h + k] = og;
      cells[t * h + k] = c;
      out[t * h + k] = og * std::tanh(c);
      c_prev[k] = c;
      h_prev[k] = out[t * h + k];
    }
  }
  const auto ix = xw.id(), iu = u.id();
  return xw.graph().emit(
      {n, h}, std::move(out), {ix, iu},
      [=, gates = std::move(gates), cells = std::move(cells)](Graph<T>& g, std::uint32_t self) {
        auto go = g.grad(self);
        auto hs = g.value(self);
        auto uv = g.value(iu);
        const bool need_x = g.requires_grad(ix), need_u = g.requires_grad(iu);
        std::span<T> gx, gu;
        if (need_x) gx = g.grad(ix);
        if (need_u) gu = g.grad(iu);
        std::vector<T> dh_next(h, T(0)), dc_next(h, T(0)), dz(4 * h);
        for (std::size_t step = n; step-- > 0;) {
          const std::size_t t = reverse ? n - 1 - step : step;
          const T* gt = &gates[t * 4 * h];
          const bool has_prev = step > 0;
          const std::size_t tp = reverse ? t + 1 : t - 1;  // valid only if has_prev
          for (std::size_t k = 0; k < h; ++k) {
            const T ig = gt[k], fg = gt[h + k], gg = gt[2 * h + k], og = gt[3 * h + k];
            const T tc = std::tanh(cells[t * h + k]);
            const T dh = go[t * h + k] + dh_next[k];
            const T dc = dc_next[k] + dh * og * (T(1) - tc * tc);
            const T c_before = has_prev ? cells[tp * h + k] : T(0);
            dz[k] = dc * gg * ig * (T(1) - ig);
            dz[h + k] = dc * c_before * fg * (T(1) - fg);
            dz[2 * h + k] = dc * ig * (T(1) - gg * gg);
            dz[3 * h + k] = dh * tc * og * (T(1) - og);
            dc_next[k] = dc * fg;
          }
          if (need_x) {
            for (std::size_t j = 0; j < 4 * h; ++j) gx[t * 4 * h + j] += dz[j];
          }
          if (has_prev) {
            for (std::size_t k = 0; k < h; ++k) {
              const T* urow = &uv[k * 4 * h];
              T acc = 0;
              for (std::size_t j = 0; j < 4 * h; ++j) acc += urow[j] * dz[j];
              dh_next[k] = acc;
              if (need_u) {
                const T hk = hs[tp * h + k];
                T* grow = &gu[k * 4 * h];
                for (std::size_t j = 0; j < 4 * h; ++j) grow[j] += hk * dz[j];
              }
            }
          }
        }
      });
}

#define SMS_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> matvec(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> vecmat(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                            \
  template Tensor<T> relu(const Tensor<T>&);                                                \
  template Tensor<T> sigmoid(const Tensor<T>&);                                             \
  template Tensor<T> tanh(const Tensor<T>&);                                                \
  template Tensor<T> softmax(const Tensor<T>&);                                             \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::size_t);                          \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);                  \
  template Tensor<T> concat(const std::vector<Tensor<T>>&);                                 \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                            \
  template Tensor<T> stack_rows(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> row(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> conv1d_same(const Tensor<T>&, const Tensor<T>&, std::size_t);          \
  template Tensor<T> max_pool_rows(const Tensor<T>&, std::size_t, std::size_t);             \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const std::uint32_t>);           \
  template Tensor<T> dropout(const Tensor<T>&, double);                                     \
  template Tensor<T> lstm_scan(const Tensor<T>&, const Tensor<T>&, bool);

SMS_INSTANTIATE_OPS(float)
SMS_INSTANTIATE_OPS(double)

#undef SMS_INSTANTIATE_OPS

}  // namespace sms::ad
