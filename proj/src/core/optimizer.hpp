#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace gasopt {

struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update in place. Returns false (and leaves params
// and moments untouched) when the gradient contains a non-finite entry.
inline bool adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
                      const AdamConfig& cfg) {
  for (double g : grad)
    if (!std::isfinite(g)) return false;

  ++state.step;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  return true;
}

}  // namespace gasopt
