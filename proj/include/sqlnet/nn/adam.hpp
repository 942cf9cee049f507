#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sqlnet/nn/tape.hpp"

namespace sqlnet::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments, tracked per parameter. Each parameter has its own step
/// count so a parameter that joins training late (an unfrozen embedding
/// table) starts with fresh bias correction.
template <typename T>
class AdamState {
 public:
  struct Moments {
    Tensor<T> first;
    Tensor<T> second;
    long step = 0;
  };

  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  Moments& moments(const Parameter<T>& p) {
    auto [it, inserted] = moments_.try_emplace(&p);
    if (inserted) {
      it->second.first = Tensor<T>(p.value.shape());
      it->second.second = Tensor<T>(p.value.shape());
    }
    return it->second;
  }

  const Moments* find(const Parameter<T>& p) const {
    auto it = moments_.find(&p);
    return it == moments_.end() ? nullptr : &it->second;
  }

 private:
  AdamConfig config_;
  std::unordered_map<const Parameter<T>*, Moments> moments_;
};

/// One bias-corrected Adam update of every parameter in `params` from its
/// current gradient.
template <typename T>
void adam_step(const std::vector<Parameter<T>*>& params, AdamState<T>& state) {
  const AdamConfig& cfg = state.config();
  for (Parameter<T>* p : params) {
    if (p->grad.shape() != p->value.shape()) throw std::logic_error("adam_step: gradient shape mismatch for " + p->name);
    auto& m = state.moments(*p);
    ++m.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(m.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(m.step));
    T* value = p->value.data();
    const T* grad = p->grad.data();
    T* first = m.first.data();
    T* second = m.second.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = grad[i];
      first[i] = static_cast<T>(cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g);
      second[i] = static_cast<T>(cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g);
      const double m_hat = first[i] / c1;
      const double v_hat = second[i] / c2;
      value[i] = static_cast<T>(value[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace sqlnet::nn
