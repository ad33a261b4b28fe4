#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "market.hpp"
#include "policy.hpp"
#include "storage.hpp"
#include "tape.hpp"

namespace gasopt {

// Full per-day record of one simulated episode (double path only).
struct EpisodeLedger {
  std::vector<double> level;        // H_0..H_K
  std::vector<double> spot_action;  // realized h^S_k
  std::vector<double> fwd_action;   // realized forward trade per day (0 off-window)
  std::vector<double> delivery;     // delivery rate in effect on day k
  std::vector<double> bound_lo;     // spot bounds after the reachability cap
  std::vector<double> bound_hi;
  std::vector<double> cash_delta;  // includes forward premia; day 0 includes overhead
  double wealth = 0.0;
  double violation = 0.0;
  bool forced = false;
};

template <class Real>
struct EpisodeOutcome {
  Real wealth;     // terminal cash, currency units
  Real violation;  // MWh of infeasibility absorbed by the penalty path
  bool forced = false;
};

namespace detail {
template <class Real>
inline Real make_const(double c) {
  if constexpr (std::is_same_v<Real, ad::Rev>)
    return ad::Rev::constant(c);
  else
    return c;
}
}  // namespace detail

// Drives each day's raw policy outputs. raw values live in [0,1] and are
// stretched onto the admissible interval; a Direct provider instead emits
// actions that are clamped onto the interval (used to replay ledgers and to
// probe the constraint mechanics with fixed trades).
template <class Real>
struct NetworkProvider {
  static constexpr bool direct = false;
  const PolicyParams* policy;
  std::span<const Real> values;
  PolicyScratch<Real> scratch;

  void operator()(int day, std::span<const Real> features, std::span<Real> raw) {
    policy_forward<Real>(*policy, values, day, features, raw, scratch);
  }
};

struct RawSeriesProvider {
  static constexpr bool direct = false;
  std::span<const double> spot_raw;
  std::span<const double> fwd_raw;  // may be empty for smod

  void operator()(int day, std::span<const double>, std::span<double> raw) {
    raw[0] = spot_raw[day];
    if (raw.size() > 1) raw[1] = fwd_raw.empty() ? 0.0 : fwd_raw[day];
  }
};

struct DirectActionProvider {
  static constexpr bool direct = true;
  std::span<const double> spot_actions;
  std::span<const double> fwd_actions;  // may be empty for smod

  void operator()(int day, std::span<const double>, std::span<double> out) {
    out[0] = spot_actions[day];
    if (out.size() > 1) out[1] = fwd_actions.empty() ? 0.0 : fwd_actions[day];
  }
};

// One storage episode on scenario row i. The daily loop:
//   features -> provider -> forward trade (sfmod) -> merged spot bounds
//   -> reachability cap -> action -> cash -> level update.
// The upper spot bound is additionally capped at drain_after[k+1] - H - d so
// "can still empty by maturity" stays invariant; the interval degenerates to
// forced maximal withdrawal near the end, which lands H_K at exactly zero.
// States that are nevertheless unreachable (only constructible artificially)
// collapse onto the lower bound and accrue `violation`.
template <class Real, class Provider>
EpisodeOutcome<Real> run_episode(ModelKind model, const StorageSpec& spec, const ScenarioSet& s,
                                 std::int64_t scenario, const NormStats& norm, Provider& provider,
                                 EpisodeLedger* ledger = nullptr) {
  const int K = spec.days;
  const bool sfmod = model == ModelKind::sfmod;
  auto C = [](double c) { return detail::make_const<Real>(c); };
  auto spot = s.spot_row(scenario);

  const int months = static_cast<int>(spec.month_starts.size());
  const int last_tradable_month = months - 2;  // no trades in the final contract

  Real cash = C(-spec.overhead);
  Real H = C(0.0);
  Real pending = C(0.0);
  Real delivery = C(0.0);
  Real violation = C(0.0);
  bool forced = false;
  int next_month = 1;

  if (ledger) {
    ledger->level.assign(K + 1, 0.0);
    ledger->spot_action.assign(K, 0.0);
    ledger->fwd_action.assign(K, 0.0);
    ledger->delivery.assign(K, 0.0);
    ledger->bound_lo.assign(K, 0.0);
    ledger->bound_hi.assign(K, 0.0);
    ledger->cash_delta.assign(K, 0.0);
  }

  const double inv_day_scale = 1.0 / norm.scale[0];
  const double inv_level_scale = 1.0 / norm.scale[1];
  const double inv_spot_scale = 1.0 / norm.scale[2];

  Real features[4];
  Real raw[2];
  const std::size_t n_feat = sfmod ? 4 : 3;
  const std::size_t n_raw = sfmod ? 2 : 1;

  double cash_before = ad::val(cash);
  for (int k = 0; k < K; ++k) {
    if (sfmod && next_month < months && k == spec.month_starts[next_month]) {
      delivery = pending;
      pending = C(0.0);
      ++next_month;
    }

    features[0] = C((static_cast<double>(k) - norm.shift[0]) * inv_day_scale);
    features[1] = (H - norm.shift[1]) * inv_level_scale;
    features[2] = C((spot[k] - norm.shift[2]) * inv_spot_scale);
    std::optional<FrontMonth> front;
    if (sfmod) {
      front = s.rolling_front_month(scenario, k);
      features[3] =
          C(front ? (front->price - norm.shift[3]) / norm.scale[3] : 0.0);
    }

    provider(k, std::span<const Real>(features, n_feat), std::span<Real>(raw, n_raw));

    Real fwd_trade = C(0.0);
    if (sfmod && front && front->month <= last_tradable_month) {
      double cap = spec.alpha * spec.capacity / static_cast<double>(front->delivery_days);
      if constexpr (Provider::direct) {
        fwd_trade = ad::smin(cap, ad::smax(-cap, raw[1]));
      } else {
        fwd_trade = -cap + raw[1] * (2.0 * cap);
      }
      cash = cash + fwd_trade * (-front->price * static_cast<double>(front->delivery_days));
      pending = pending + fwd_trade;
    }

    Real lo = ad::smax(spec.withdrawal_max[k], -H) - delivery;
    Real hi = ad::smin(spec.injection_max[k], spec.capacity - H) - delivery;
    hi = ad::smin(hi, spec.drain_after[k + 1] - H - delivery);
    if (ad::val(hi) < ad::val(lo)) {
      violation = violation + (lo - hi);
      hi = lo;
      forced = true;
    }

    Real action;
    if constexpr (Provider::direct) {
      action = ad::smin(hi, ad::smax(lo, raw[0]));
    } else {
      action = lo + raw[0] * (hi - lo);
    }

    Real gross = action * spot[k];
    cash = cash - gross;
    if (spec.kappa != 0.0) cash = cash - spec.kappa * ad::sabs(gross);
    H = H + action + delivery;

    if (ledger) {
      ledger->level[k + 1] = ad::val(H);
      ledger->spot_action[k] = ad::val(action);
      ledger->fwd_action[k] = ad::val(fwd_trade);
      ledger->delivery[k] = ad::val(delivery);
      ledger->bound_lo[k] = ad::val(lo);
      ledger->bound_hi[k] = ad::val(hi);
      ledger->cash_delta[k] = ad::val(cash) - cash_before;
      cash_before = ad::val(cash);
    }
  }

  if (std::abs(ad::val(H)) > 1e-9 * spec.capacity) {
    violation = violation + ad::sabs(H);
    forced = true;
  }

  if (ledger) {
    ledger->wealth = ad::val(cash);
    ledger->violation = ad::val(violation);
    ledger->forced = forced;
  }
  return {cash, violation, forced};
}

// Convenience double-path run with the network policy.
EpisodeOutcome<double> simulate_episode(const PolicyParams& policy, const StorageSpec& spec,
                                        const ScenarioSet& s, std::int64_t scenario,
                                        EpisodeLedger* ledger = nullptr);

}  // namespace gasopt
