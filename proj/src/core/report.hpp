#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace gasopt {

// Raw evaluation material: per-scenario terminal P&L plus the fill-level
// paths (rows x (days+1), row-major).
struct EvalResult {
  std::int64_t rows = 0;
  int days = 0;
  std::vector<double> pnl;
  std::vector<double> fills;
  std::int64_t forced_episodes = 0;
  double max_violation = 0.0;

  std::span<const double> fill_row(std::int64_t i) const {
    return {fills.data() + i * (days + 1), static_cast<std::size_t>(days + 1)};
  }
};

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // sample (n-1); 0 for singletons
};

SummaryStats summarize(std::span<const double> xs);

// Linear-interpolation quantile on a sorted sample (midpoint median for even n).
double quantile_sorted(std::span<const double> sorted, double q);

struct PnLReport {
  std::string label;
  std::int64_t scenarios = 0;
  int days = 0;
  double capacity = 0.0;
  std::vector<double> pnl;
  SummaryStats stats;
  std::vector<double> hist_edges;          // bins + 1 entries
  std::vector<std::int64_t> hist_counts;   // sums to scenarios
  std::vector<double> fill_mean;           // days + 1 entries
  std::vector<std::pair<std::string, std::vector<double>>> fill_quantiles;  // p05..p95
};

PnLReport make_report(const std::string& label, const EvalResult& eval, double capacity,
                      int histogram_bins);

// Stable, versioned JSON with sorted keys; identical inputs give identical bytes.
void write_report_json(const PnLReport& r, const std::string& path);
PnLReport read_report_json(const std::string& path);

void write_pnl_csv(const PnLReport& r, const std::string& path);
void write_fill_csv(const PnLReport& r, const std::string& path);
void write_histogram_csv(const PnLReport& r, const std::string& path);

// Side-by-side summary table for N reports.
void write_compare_csv(std::span<const PnLReport> reports, const std::string& path);
void write_compare_json(std::span<const PnLReport> reports, const std::string& path);

}  // namespace gasopt
