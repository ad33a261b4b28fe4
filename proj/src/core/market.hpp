#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace gasopt {

// Seasonal level times an exponentiated mean-reverting Gaussian factor:
//   S_k = seasonal(k) * exp(X_k),  seasonal(k) = level + amplitude*cos(2*pi*(k-phase)/365)
// X follows a one-day exact Ornstein-Uhlenbeck transition.
struct MarketModelParams {
  double seasonal_level = 20.0;
  double seasonal_amplitude = 8.0;
  double seasonal_phase = 270.0;       // day index of the seasonal peak
  double mean_reversion_speed = 0.02;  // per day
  double volatility = 0.05;            // per sqrt(day)
  double initial_log_deviation = 0.0;  // X_0, shared by all scenarios
};

double seasonal_price(const MarketModelParams& p, double day);

// Validates positivity/finiteness; throws Error(errc::invalid_argument) with
// the offending field named.
void validate(const MarketModelParams& p);

struct FrontMonth {
  int month;         // delivery month index j, quotes exist for k < n_j
  double price;      // F(k, n_j, n_{j+1}-1)
  int delivery_days; // n_{j+1} - n_j (last month ends at K)
};

class ScenarioSet {
 public:
  ScenarioSet(std::int64_t scenarios, std::int64_t days, std::vector<int> month_starts);

  std::int64_t count() const { return scenarios_; }
  std::int64_t days() const { return days_; }

  const std::vector<int>& month_starts() const { return month_starts_; }
  int month_count() const { return static_cast<int>(month_starts_.size()); }
  // Delivery window of month m is [month_begin(m), month_end(m)).
  int month_begin(int m) const { return month_starts_[m]; }
  int month_end(int m) const {
    return m + 1 < month_count() ? month_starts_[m + 1] : static_cast<int>(days_);
  }
  int month_of(int day) const;

  std::span<const double> spot_row(std::int64_t i) const {
    return {spot_.data() + i * days_, static_cast<std::size_t>(days_)};
  }
  std::span<double> spot_row(std::int64_t i) {
    return {spot_.data() + i * days_, static_cast<std::size_t>(days_)};
  }
  double spot(std::int64_t i, int k) const { return spot_[i * days_ + k]; }

  bool has_forwards() const { return !forwards_.empty(); }
  // Forward quote for delivery month j observed on day k (requires k < n_j).
  double forward(std::int64_t i, int j, int k) const;

  // Front-month contract observable on day k, or nullopt during the last
  // month where the rolling contract would deliver beyond the horizon.
  std::optional<FrontMonth> rolling_front_month(std::int64_t i, int k) const;

  friend void gen_forward_curves(ScenarioSet& s, const MarketModelParams& p);

 private:
  std::int64_t scenarios_;
  std::int64_t days_;
  std::vector<int> month_starts_;
  std::vector<double> spot_;      // row-major, scenarios x days
  std::vector<double> forwards_;  // per scenario: blocks for months j=1..J, block j holds n_j quotes
  std::vector<std::int64_t> fwd_offset_;  // block offset per month (index 0 unused)
  std::int64_t fwd_per_scenario_ = 0;
};

// Spot paths only; forwards are filled by gen_forward_curves. Identical
// (params, scenarios, days, seed) give identical sets regardless of threads:
// every scenario has its own counter-derived substream.
ScenarioSet gen_spot_paths(const MarketModelParams& p, std::int64_t scenarios, std::int64_t days,
                           std::vector<int> month_starts, std::uint64_t seed);

// Fills per-month forward quotes with the model's conditional expectation of
// the delivery-window average, given the spot state on the observation day.
void gen_forward_curves(ScenarioSet& s, const MarketModelParams& p);

// E[S_d | X_k = x] under the model, tau = d - k >= 0.
double conditional_spot_mean(const MarketModelParams& p, double x, int k, int d);

// CSV ingest/export: rows are scenarios, columns are days, comma-separated,
// no header unless has_header. Cells must parse as finite positive numbers;
// errors name the (0-based) row and column.
ScenarioSet ingest_csv(const std::string& path, bool has_header, std::vector<int> month_starts);
void export_csv(const ScenarioSet& s, const std::string& path);

}  // namespace gasopt
