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

// Reverse-mode differentiation over dense row-major arrays.
//
// A Graph records operations as they execute (a tape); Tensor is a cheap
// handle to one recorded node. Parameters live outside any graph in a
// ParameterStore and are bound into a graph with Graph::param(), after which
// backward() accumulates straight into Parameter::grad. Everything is
// templated on the scalar type: double for verification, float for training.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sms/error.hpp"
#include "sms/rng.hpp"

namespace sms::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first touched by backward
  bool requires_grad = true;
  // Row-sparse gradient bookkeeping for embedding tables: only rows listed
  // in `touched` can hold nonzero gradient.
  bool sparse_rows = false;
  std::vector<std::uint32_t> touched;
  std::vector<std::uint8_t> touched_flag;

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : value.size() / shape[0]; }

  void ensure_grad();
  void mark_row(std::size_t row);
  void zero_grad();
};

template <typename T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  // Adds a zero-initialized parameter. Names must be unique.
  Parameter<T>& add(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  // Insertion order.
  std::deque<Parameter<T>>& all() { return params_; }
  const std::deque<Parameter<T>>& all() const { return params_; }

  void zero_grad();

  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

 private:
  std::deque<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
class Graph;

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Graph<T>* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph<T>& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }

  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const { return shape().at(0); }
  std::size_t cols() const { return shape().at(1); }

  std::span<const T> value() const;
  // Empty when no gradient has been accumulated.
  std::span<const T> grad() const;
  bool requires_grad() const;

  T item() const;
  T at(std::size_t i) const { return value()[i]; }
  T at(std::size_t r, std::size_t c) const { return value()[r * cols() + c]; }
  std::vector<T> to_vector() const { auto v = value(); return {v.begin(), v.end()}; }

 private:
  Graph<T>* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::uint32_t self)>;

  explicit Graph(std::uint64_t seed = 0, bool training = false);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor<T> constant(Shape shape, std::vector<T> values);
  Tensor<T> variable(Shape shape, std::vector<T> values);
  Tensor<T> param(Parameter<T>& p);

  // Seeds d(loss)/d(loss) with `seed` and propagates to every reachable
  // node. Loss must have exactly one element.
  void backward(const Tensor<T>& loss, T seed = T(1));

  // Drops all nodes and rewinds the random stream to the construction seed.
  void reset();

  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }
  Rng& rng() { return rng_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface. emit() records a node; its backward closure is
  // kept only when some parent requires a gradient.
  Tensor<T> emit(Shape shape, std::vector<T> value, std::vector<std::uint32_t> parents,
                 Backward backward);
  std::span<T> value(std::uint32_t id);
  std::span<T> grad(std::uint32_t id);  // allocates zeros on first use
  bool has_grad(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  const Shape& shape(std::uint32_t id) const { return nodes_[id].shape; }
  Parameter<T>* param_of(std::uint32_t id) const { return nodes_[id].param; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    Parameter<T>* param = nullptr;
    std::vector<std::uint32_t> parents;
    Backward backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::uint64_t seed_;
  bool training_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Operations. Shapes: vectors are rank 1, matrices rank 2 row-major, scalars
// rank 0. Every op throws ShapeError naming the offending shapes.

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// A[m x n] * x[n] -> [m]
template <typename T>
Tensor<T> matvec(const Tensor<T>& a, const Tensor<T>& x);

// x[m]^T * A[m x n] -> [n]
template <typename T>
Tensor<T> vecmat(const Tensor<T>& x, const Tensor<T>& a);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// A[m x n] + b[n] broadcast over rows.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> relu(const Tensor<T>& a);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);

template <typename T>
Tensor<T> tanh(const Tensor<T>& a);

// Numerically stable softmax over a vector. Non-finite input -> NumericError.
template <typename T>
Tensor<T> softmax(const Tensor<T>& v);

// -ln p[gold] for a probability vector p.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, std::size_t gold);

// -log_softmax(logits)[gold], fused.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t gold);

// Concatenates vectors end to end.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts);

// Concatenates matrices with equal row counts side by side.
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

// Stacks equal-length vectors as matrix rows.
template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows);

template <typename T>
Tensor<T> row(const Tensor<T>& a, std::size_t r);

template <typename T>
Tensor<T> slice(const Tensor<T>& v, std::size_t offset, std::size_t length);

// Same-length 1-D convolution. Output row i = flatten(H[i .. i+t-1]) * kernel
// where rows past the end are zeros. kernel is [t*d_in x d_out].
template <typename T>
Tensor<T> conv1d_same(const Tensor<T>& h, const Tensor<T>& kernel, std::size_t t);

// Componentwise max over rows [lo, hi). Gradient goes to the first argmax.
template <typename T>
Tensor<T> max_pool_rows(const Tensor<T>& h, std::size_t lo, std::size_t hi);

// Gathers rows of `table` by id. When the table is a sparse-row parameter,
// backward records which rows were touched.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::uint32_t> ids);

// Inverted dropout; identity when the graph is not in training mode or p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double p);

// One direction of an LSTM over a precomputed input projection.
// xw is [n x 4h] (gate order i, f, g, o, input bias already added), u is
// [h x 4h]. Returns hidden states [n x h] in input order. `reverse` scans
// from the last row to the first.
template <typename T>
Tensor<T> lstm_scan(const Tensor<T>& xw, const Tensor<T>& u, bool reverse);

// ---------------------------------------------------------------------------
// Finite-difference verification.

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-2;
  std::uint64_t graph_seed = 0;
  bool training = false;
};

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

struct GradCheckParamSummary {
  std::string param;
  std::size_t checked = 0;
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckParamSummary> params;
  std::vector<GradCheckEntry> failures;
  double max_rel_error = 0;
  std::size_t checked = 0;
  bool passed() const { return failures.empty(); }
};

using LossBuilder = std::function<Tensor<double>(Graph<double>&)>;

// Compares backward() against central differences for every entry of every
// parameter with requires_grad. `build` must construct a scalar loss on the
// graph it is given; it is invoked once per perturbation with a fresh graph
// seeded identically.
GradCheckReport grad_check(ParameterStore<double>& params, const LossBuilder& build,
                           const GradCheckOptions& options = {});

// ---------------------------------------------------------------------------
// Parameter checkpoints: "SMS1" little-endian binary. After the fixed header
// (magic, version, parameter count) comes a length-prefixed UTF-8 metadata
// string, then one record per parameter.

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::string& path, const ParameterStore<T>& params,
                     const std::string& metadata);

// Returns the metadata string. Every stored parameter must exist in `params`
// with an identical shape.
template <typename T>
std::string load_checkpoint(const std::string& path, ParameterStore<T>& params);

// Reads only the metadata string.
std::string read_checkpoint_metadata(const std::string& path);

}  // namespace sms::ad
