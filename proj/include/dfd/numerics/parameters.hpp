#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dfd/error.hpp"
#include "dfd/numerics/rng.hpp"
#include "dfd/numerics/tensor.hpp"

namespace dfd::num {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

// Named trainable tensors in insertion order. Parameters live in stable
// heap storage so tapes and optimizers can hold references across inserts.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& other) { *this = other; }
  ParameterSet& operator=(const ParameterSet& other) {
    if (this == &other) return *this;
    params_.clear();
    index_.clear();
    for (const auto& p : other.params_) add(p->name, p->value);
    return *this;
  }
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter<T>& add(const std::string& name, Tensor<T> value) {
    if (index_.contains(name)) throw UsageError("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter<T>>();
    p->name = name;
    p->grad = Tensor<T>(value.shape());
    p->value = std::move(value);
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<T>& get(const std::string& name) { return *params_.at(lookup(name)); }
  const Parameter<T>& get(const std::string& name) const { return *params_.at(lookup(name)); }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->grad.fill(T{0});
  }

  // L2 norm over every gradient entry, accumulated in double.
  double grad_norm() const {
    double sum = 0.0;
    for (const auto& p : params_) {
      for (T g : p->grad.data()) sum += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sum);
  }

  // Global-norm clipping; returns the norm before clipping.
  double clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
      const T scale = static_cast<T>(max_norm / norm);
      for (auto& p : params_) {
        for (T& g : p->grad.data()) g *= scale;
      }
    }
    return norm;
  }

  std::vector<Tensor<T>> snapshot() const {
    std::vector<Tensor<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<Tensor<T>>& values) {
    if (values.size() != params_.size()) throw ShapeError("snapshot size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].shape() != params_[i]->value.shape()) {
        throw ShapeError("snapshot shape mismatch for " + params_[i]->name);
      }
      params_[i]->value = values[i];
    }
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& p : params_) out.add(p->name, p->value.template cast<U>());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
  }

  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double lo, double hi, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

}  // namespace dfd::num
