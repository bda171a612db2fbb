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
#include <sstream>

#include "sms/autodiff.hpp"

namespace sms::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
void Parameter<T>::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), T(0));
}

template <typename T>
void Parameter<T>::mark_row(std::size_t r) {
  if (touched_flag.size() != rows()) touched_flag.assign(rows(), 0);
  if (!touched_flag[r]) {
    touched_flag[r] = 1;
    touched.push_back(static_cast<std::uint32_t>(r));
  }
}

template <typename T>
void Parameter<T>::zero_grad() {
  if (grad.empty()) return;
  if (sparse_rows) {
    const std::size_t c = cols();
    for (auto r : touched) {
      std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(r * c), c, T(0));
      touched_flag[r] = 0;
    }
    touched.clear();
  } else {
    std::fill(grad.begin(), grad.end(), T(0));
  }
}

template <typename T>
Parameter<T>& ParameterStore<T>::add(const std::string& name, Shape shape) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  for (auto s : shape) {
    if (s == 0) throw ShapeError("parameter " + name + " has empty shape " + to_string(shape));
  }
  Parameter<T> p;
  p.name = name;
  p.value.assign(numel(shape), T(0));
  p.shape = std::move(shape);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return params_[it->second];
}

template <typename T>
std::size_t ParameterStore<T>::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
std::vector<std::vector<T>> ParameterStore<T>::snapshot() const {
  std::vector<std::vector<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

template <typename T>
void ParameterStore<T>::restore(const std::vector<std::vector<T>>& values) {
  if (values.size() != params_.size()) throw ConfigError("snapshot does not match parameter store");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != params_[i].value.size()) {
      throw ConfigError("snapshot size mismatch for " + params_[i].name);
    }
    params_[i].value = values[i];
  }
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return graph_->shape(id_);
}

template <typename T>
std::size_t Tensor<T>::size() const {
  return numel(shape());
}

template <typename T>
std::span<const T> Tensor<T>::value() const {
  return graph_->value(id_);
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!graph_->has_grad(id_)) return {};
  return graph_->grad(id_);
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return graph_->requires_grad(id_);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return value()[0];
}

template <typename T>
Graph<T>::Graph(std::uint64_t seed, bool training) : seed_(seed), training_(training), rng_(seed) {}

template <typename T>
Tensor<T> Graph<T>::constant(Shape shape, std::vector<T> values) {
  if (numel(shape) != values.size()) {
    throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " +
                     to_string(shape));
  }
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Tensor<T> Graph<T>::variable(Shape shape, std::vector<T> values) {
  auto t = constant(std::move(shape), std::move(values));
  nodes_[t.id()].requires_grad = true;
  return t;
}

template <typename T>
Tensor<T> Graph<T>::param(Parameter<T>& p) {
  Node n;
  n.shape = p.shape;
  n.param = &p;
  n.requires_grad = p.requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Tensor<T> Graph<T>::emit(Shape shape, std::vector<T> value, std::vector<std::uint32_t> parents,
                         Backward backward) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (auto p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  if (n.requires_grad) {
    n.parents = std::move(parents);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
std::span<T> Graph<T>::value(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->value;
  return n.value;
}

template <typename T>
std::span<T> Graph<T>::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param) {
    n.param->ensure_grad();
    return n.param->grad;
  }
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), T(0));
  return n.grad;
}

template <typename T>
bool Graph<T>::has_grad(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.param) return !n.param->grad.empty();
  return !n.grad.empty();
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss, T seed) {
  if (&loss.graph() != this) throw UsageError("backward: tensor belongs to another graph");
  if (numel(nodes_[loss.id()].shape) != 1) {
    throw UsageError("backward: loss must be scalar, got shape " +
                     to_string(nodes_[loss.id()].shape));
  }
  std::vector<std::uint8_t> reachable(loss.id() + 1, 0);
  reachable[loss.id()] = 1;
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    for (auto p : nodes_[i].parents) reachable[p] = 1;
  }
  for (std::uint32_t i = 0; i <= loss.id(); ++i) {
    if (reachable[i] && nodes_[i].requires_grad) grad(i);
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id())[0] += seed;
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    if (reachable[i] && nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

template <typename T>
void Graph<T>::reset() {
  nodes_.clear();
  rng_.reseed(seed_);
}

template struct Parameter<float>;
template struct Parameter<double>;
template class ParameterStore<float>;
template class ParameterStore<double>;
template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace sms::ad
