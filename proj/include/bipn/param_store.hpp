#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bipn/rng.hpp"
#include "bipn/tensor.hpp"

namespace bipn {

/// Trainable tensor plus its accumulated gradient.
template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool has_grad = false;

  void accumulate_grad(const Tensor<S>& g) {
    if (!has_grad) {
      grad = Tensor<S>(value.shape);
      has_grad = true;
    }
    for (std::int64_t i = 0; i < grad.numel(); ++i) grad.data[i] += g.data[i];
  }

  void clear_grad() {
    has_grad = false;
    grad = Tensor<S>();
  }
};

/// Glorot-style uniform init: [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
template <typename S>
void init_glorot_uniform(Tensor<S>& t, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  const double b = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (S& v : t.data) v = static_cast<S>(rng.uniform(-b, b));
}

/// Named parameter collection with Adam state. Entries are kept sorted by
/// name so iteration order (and therefore serialization and update order) is
/// deterministic.
template <typename S>
class ParamStore {
 public:
  struct AdamSlot {
    Tensor<S> m;
    Tensor<S> v;
  };

  Parameter<S>& create(const std::string& name, Shape shape) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) throw ConfigError("duplicate parameter name: " + name);
    it->second.name = name;
    it->second.value = Tensor<S>(std::move(shape));
    return it->second;
  }

  Parameter<S>& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Parameter<S>& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grads() {
    for (auto& [name, p] : entries_) p.clear_grad();
  }

  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t n) { step_count_ = n; }

  std::map<std::string, AdamSlot>& adam_state() { return adam_state_; }
  const std::map<std::string, AdamSlot>& adam_state() const { return adam_state_; }

  std::int64_t total_values() const {
    std::int64_t n = 0;
    for (const auto& [name, p] : entries_) n += p.value.numel();
    return n;
  }

 private:
  std::map<std::string, Parameter<S>> entries_;
  std::map<std::string, AdamSlot> adam_state_;
  std::int64_t step_count_ = 0;
};

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over every entry. Grads must be populated
/// for all entries; clears them afterwards.
template <typename S>
void adam_step(ParamStore<S>& store, const AdamConfig& cfg) {
  for (auto& [name, p] : store) {
    if (!p.has_grad) throw NumericError("adam_step: missing gradient for parameter " + name);
  }
  store.set_step_count(store.step_count() + 1);
  const double t = static_cast<double>(store.step_count());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : store) {
    auto& slot = store.adam_state()[name];
    if (slot.m.shape.empty()) {
      slot.m = Tensor<S>(p.value.shape);
      slot.v = Tensor<S>(p.value.shape);
    }
    S* m = slot.m.ptr();
    S* v = slot.v.ptr();
    const S* g = p.grad.ptr();
    S* w = p.value.ptr();
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    const S lr = static_cast<S>(cfg.learning_rate), eps = static_cast<S>(cfg.epsilon);
    const S ibc1 = static_cast<S>(1.0 / bc1), ibc2 = static_cast<S>(1.0 / bc2);
    for (std::int64_t i = 0; i < p.value.numel(); ++i) {
      m[i] = b1 * m[i] + (S(1) - b1) * g[i];
      v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
      const S mhat = m[i] * ibc1;
      const S vhat = v[i] * ibc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    p.clear_grad();
  }
}

}  // namespace bipn
