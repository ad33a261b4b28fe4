#include "storage.hpp"

#include <algorithm>
#include <cmath>

namespace gasopt {

int StorageSpec::month_of(int day) const {
  auto it = std::upper_bound(month_starts.begin(), month_starts.end(), day);
  return static_cast<int>(it - month_starts.begin()) - 1;
}

StorageSpec make_storage_spec(int days, double capacity, double kappa, double overhead,
                              double alpha, std::vector<double> withdrawal_max,
                              std::vector<double> injection_max, std::vector<int> month_starts) {
  require(days >= 1, errc::invalid_argument, "storage horizon must be >= 1 day");
  require(std::isfinite(capacity) && capacity > 0.0, errc::invalid_argument,
          "capacity must be positive");
  require(std::isfinite(kappa) && kappa >= 0.0, errc::invalid_argument,
          "kappa must be nonnegative");
  require(std::isfinite(overhead) && overhead >= 0.0, errc::invalid_argument,
          "overhead must be nonnegative");
  require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, errc::invalid_argument,
          "alpha must lie in [0, 1]");
  require(static_cast<int>(withdrawal_max.size()) == days, errc::invalid_argument,
          "withdrawal_max must have one entry per day");
  require(static_cast<int>(injection_max.size()) == days, errc::invalid_argument,
          "injection_max must have one entry per day");
  for (int k = 0; k < days; ++k) {
    require(std::isfinite(withdrawal_max[k]) && withdrawal_max[k] < 0.0, errc::invalid_argument,
            "withdrawal bound must be negative on every day (day " + std::to_string(k) + ")");
    require(std::isfinite(injection_max[k]) && injection_max[k] > 0.0, errc::invalid_argument,
            "injection bound must be positive on every day (day " + std::to_string(k) + ")");
  }
  require(!month_starts.empty() && month_starts.front() == 0, errc::invalid_argument,
          "month_starts must begin at day 0");
  for (std::size_t m = 1; m < month_starts.size(); ++m)
    require(month_starts[m] > month_starts[m - 1] && month_starts[m] < days,
            errc::invalid_argument, "month_starts must be strictly increasing and inside horizon");

  StorageSpec spec;
  spec.days = days;
  spec.capacity = capacity;
  spec.kappa = kappa;
  spec.overhead = overhead;
  spec.alpha = alpha;
  spec.withdrawal_max = std::move(withdrawal_max);
  spec.injection_max = std::move(injection_max);
  spec.month_starts = std::move(month_starts);

  spec.drain_after.assign(static_cast<std::size_t>(days) + 1, 0.0);
  for (int k = days - 1; k >= 0; --k)
    spec.drain_after[k] = spec.drain_after[k + 1] - spec.withdrawal_max[k];
  return spec;
}

StorageSpec reference_preset_spec(double alpha, double kappa, double overhead) {
  const int days = 351;
  std::vector<double> lower(days), upper(days);
  for (int k = 0; k < days; ++k) {
    lower[k] = k <= 170 ? -600.0 : -3072.0;
    upper[k] = k <= 200 ? 2808.0 : 408.0;
  }
  std::vector<int> starts;
  for (int n = 0; n + 21 <= days; n += 30) starts.push_back(n);
  return make_storage_spec(days, 250000.0, kappa, overhead, alpha, std::move(lower),
                           std::move(upper), std::move(starts));
}

Bounds effective_bounds(const StorageSpec& spec, double level, int k, double delivery) {
  double lo = std::max(spec.withdrawal_max[k], -level) - delivery;
  double hi = std::min(spec.injection_max[k], spec.capacity - level) - delivery;
  return {lo, hi};
}

bool terminal_reachable(const StorageSpec& spec, double level, int k) {
  return level <= spec.drain_after[k] + 1e-9 * spec.capacity;
}

int reachability_crossing_day(const StorageSpec& spec) {
  for (int k = 0; k < spec.days; ++k)
    if (spec.drain_after[k] < spec.capacity) return k;
  return -1;
}

std::vector<double> delivery_quantities(std::span<const double> fwd_action_by_day,
                                        const StorageSpec& spec) {
  require(static_cast<int>(fwd_action_by_day.size()) == spec.days, errc::invalid_argument,
          "forward action series must have one entry per day");
  std::vector<double> d(spec.month_starts.size(), 0.0);
  for (std::size_t j = 1; j < spec.month_starts.size(); ++j) {
    for (int k = spec.month_begin(static_cast<int>(j) - 1); k < spec.month_begin(static_cast<int>(j)); ++k)
      d[j] += fwd_action_by_day[k];
  }
  return d;
}

double storage_level(std::span<const double> spot_actions, std::span<const double> monthly_delivery,
                     const StorageSpec& spec, int n) {
  require(n >= 0 && n <= spec.days, errc::invalid_argument, "day out of range");
  require(monthly_delivery.size() == spec.month_starts.size(), errc::invalid_argument,
          "need one delivery rate per month");
  double level = 0.0;
  for (int k = 0; k < n && k < static_cast<int>(spot_actions.size()); ++k)
    level += spot_actions[k];
  for (std::size_t m = 1; m < spec.month_starts.size(); ++m) {
    int overlap = std::clamp(n - spec.month_begin(static_cast<int>(m)), 0,
                             spec.month_end(static_cast<int>(m)) - spec.month_begin(static_cast<int>(m)));
    level += monthly_delivery[m] * overlap;
  }
  return level;
}

}  // namespace gasopt
