#pragma once

#include <span>
#include <vector>

#include "common.hpp"

namespace gasopt {

// Physical storage contract: capacity, per-day action bounds, costs, calendar.
// Daily actions are MWh/day; positive = injection, negative = withdrawal.
struct StorageSpec {
  int days = 0;
  double capacity = 0.0;
  double kappa = 0.0;     // proportional cost on |h*S|
  double overhead = 0.0;  // fixed cost charged once at day 0
  double alpha = 0.0;     // forward liquidity cap fraction: |h^j| <= alpha*c/len
  std::vector<double> injection_max;   // u_k > 0
  std::vector<double> withdrawal_max;  // l_k < 0
  std::vector<int> month_starts;

  // drain_after[k] = sum_{j=k}^{K-1} |l_j|; drain_after[K] = 0. Maximum volume
  // that can still be withdrawn from day k (inclusive) to maturity.
  std::vector<double> drain_after;

  int month_of(int day) const;
  int month_begin(int m) const { return month_starts[m]; }
  int month_end(int m) const {
    return m + 1 < static_cast<int>(month_starts.size()) ? month_starts[m + 1] : days;
  }
};

// Validates and precomputes drain_after.
StorageSpec make_storage_spec(int days, double capacity, double kappa, double overhead,
                              double alpha, std::vector<double> withdrawal_max,
                              std::vector<double> injection_max, std::vector<int> month_starts);

// Reference two-regime daily bounds at K=351 with a 250,000 MWh capacity:
// withdrawal -600 through day 170 then -3072, injection 2808 through day 200
// then 408. Months every 30 days, the last month absorbing the remainder.
StorageSpec reference_preset_spec(double alpha, double kappa = 0.0, double overhead = 0.0);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

inline bool feasible(const Bounds& b) { return b.lo <= b.hi; }

// Merged daily bounds for the spot action given level H and the current
// month's delivery rate d: [max(l_k,-H) - d, min(u_k, c-H) - d]. May return
// an inverted interval if H lies outside [0, c]; callers pick error vs penalty.
Bounds effective_bounds(const StorageSpec& spec, double level, int k, double delivery = 0.0);

// True iff the storage can still be emptied by maturity starting day k, i.e.
// H <= drain_after[k] (with a 1e-9*c slack for accumulated rounding).
bool terminal_reachable(const StorageSpec& spec, double level, int k);

// Once emptying is no longer reachable the upper bound collapses onto the
// lower one: maximal withdrawal until maturity.
inline Bounds apply_forced_withdrawal(const Bounds& b, bool reachable) {
  return reachable ? b : Bounds{b.lo, b.lo};
}

// First day whose remaining drain capacity falls below the storage capacity
// (the day the emptying boundary starts to bind below c), or -1 if it never
// does.
int reachability_crossing_day(const StorageSpec& spec);

// Cash delta of a spot action settled at price s.
inline double step_cash(const StorageSpec& spec, double action, double s) {
  double gross = action * s;
  return -gross - spec.kappa * std::abs(gross);
}

// Per-month delivery rates implied by a per-day forward action series (the
// action on day k applies to the then-front month). Month 0 never has one.
std::vector<double> delivery_quantities(std::span<const double> fwd_action_by_day,
                                        const StorageSpec& spec);

// Storage level before the action of day n, reconstructed from recorded spot
// actions and per-month delivery rates.
double storage_level(std::span<const double> spot_actions,
                     std::span<const double> monthly_delivery, const StorageSpec& spec, int n);

}  // namespace gasopt
