#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "market.hpp"
#include "storage.hpp"
#include "tape.hpp"

namespace gasopt {

enum class ModelKind { smod, sfmod };

inline const char* to_string(ModelKind m) { return m == ModelKind::smod ? "smod" : "sfmod"; }

// Per-feature affine normalization: x_norm = (x - shift) / scale.
// Feature order: day, level, spot[, front-month price].
struct NormStats {
  std::vector<double> shift;
  std::vector<double> scale;
};

// A bank of small feedforward subnets sharing one architecture; each trading
// day is mapped onto one subnet (calendar months by default). Every affine
// layer, including the last, is followed by a sigmoid, so raw outputs lie in
// (0,1) and are stretched onto the admissible action interval by the caller.
struct PolicyParams {
  ModelKind model = ModelKind::smod;
  int input_dim = 3;
  int output_dim = 1;
  std::vector<int> hidden{16};
  int subnet_count = 0;
  std::vector<int> day_to_subnet;  // one entry per trading day
  NormStats norm;
  std::vector<double> values;  // flat, subnet-major

  int params_per_subnet() const;
  int param_count() const { return subnet_count * params_per_subnet(); }
  int days() const { return static_cast<int>(day_to_subnet.size()); }
};

// Architecture + fan-in-scaled symmetric uniform weight init (biases zero),
// deterministic in (seed, subnet, layer). Subnets follow spec.month_starts.
PolicyParams init_policy(ModelKind model, const StorageSpec& spec, std::vector<int> hidden,
                         std::uint64_t seed);

// Price statistics are fitted over the first train_count scenarios only; the
// day and level features use fixed scales K-1 and capacity. A zero spread
// falls back to scale 1 so deterministic instances stay usable.
NormStats fit_norm_stats(const ScenarioSet& s, const StorageSpec& spec, ModelKind model,
                         std::int64_t train_count);

template <class Real>
struct PolicyScratch {
  std::vector<Real> a;
  std::vector<Real> b;
};

// Evaluates subnet(day) on normalized features. `values` must hold
// param_count() entries of Real (doubles, or tape leaves in training).
template <class Real>
void policy_forward(const PolicyParams& p, std::span<const Real> values, int day,
                    std::span<const Real> features, std::span<Real> out,
                    PolicyScratch<Real>& scratch);

template <class Real>
inline Real squash_action(const Real& raw, const Real& lo, const Real& hi) {
  return lo + raw * (hi - lo);
}

// Versioned JSON checkpoint; doubles round-trip exactly.
void save_policy(const PolicyParams& p, const std::string& path);
PolicyParams load_policy(const std::string& path);

}  // namespace gasopt
