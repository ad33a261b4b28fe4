#include "market.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rng.hpp"

namespace gasopt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void validate_month_starts(const std::vector<int>& starts, std::int64_t days) {
  require(!starts.empty(), errc::invalid_argument, "month_starts must not be empty");
  require(starts.front() == 0, errc::invalid_argument, "month_starts must begin at day 0");
  for (std::size_t m = 1; m < starts.size(); ++m)
    require(starts[m] > starts[m - 1], errc::invalid_argument,
            "month_starts must be strictly increasing");
  require(starts.back() < days, errc::invalid_argument,
          "last month start must lie before the final day");
}

// Variance of X_d given X_k over tau days, exact OU transition.
double ou_variance(const MarketModelParams& p, double tau) {
  double lambda = p.mean_reversion_speed;
  double s2 = p.volatility * p.volatility;
  if (lambda == 0.0) return s2 * tau;
  return s2 * (-std::expm1(-2.0 * lambda * tau)) / (2.0 * lambda);
}

}  // namespace

double seasonal_price(const MarketModelParams& p, double day) {
  return p.seasonal_level +
         p.seasonal_amplitude * std::cos(kTwoPi * (day - p.seasonal_phase) / 365.0);
}

void validate(const MarketModelParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(p.seasonal_level) && finite(p.seasonal_amplitude) && finite(p.seasonal_phase) &&
              finite(p.mean_reversion_speed) && finite(p.volatility) &&
              finite(p.initial_log_deviation),
          errc::invalid_argument, "market params must be finite");
  require(p.seasonal_amplitude >= 0.0, errc::invalid_argument,
          "seasonal_amplitude must be nonnegative");
  require(p.seasonal_level > p.seasonal_amplitude, errc::invalid_argument,
          "seasonal_level must exceed seasonal_amplitude so prices stay positive");
  require(p.mean_reversion_speed >= 0.0, errc::invalid_argument,
          "mean_reversion_speed must be nonnegative");
  require(p.volatility >= 0.0, errc::invalid_argument, "volatility must be nonnegative");
}

ScenarioSet::ScenarioSet(std::int64_t scenarios, std::int64_t days, std::vector<int> month_starts)
    : scenarios_(scenarios), days_(days), month_starts_(std::move(month_starts)) {
  require(scenarios >= 1, errc::invalid_argument, "scenario count must be >= 1");
  require(days >= 1, errc::invalid_argument, "day count must be >= 1");
  require(scenarios <= (std::int64_t{1} << 31) && days <= (std::int64_t{1} << 31) &&
              scenarios * days <= (std::int64_t{1} << 28),
          errc::invalid_argument, "scenario grid too large to address");
  validate_month_starts(month_starts_, days_);
  spot_.assign(static_cast<std::size_t>(scenarios_ * days_), 0.0);
}

int ScenarioSet::month_of(int day) const {
  auto it = std::upper_bound(month_starts_.begin(), month_starts_.end(), day);
  return static_cast<int>(it - month_starts_.begin()) - 1;
}

double ScenarioSet::forward(std::int64_t i, int j, int k) const {
  require(has_forwards(), errc::invalid_argument, "scenario set has no forward curves");
  require(j >= 1 && j < month_count(), errc::invalid_argument, "forward month out of range");
  require(k >= 0 && k < month_starts_[j], errc::invalid_argument,
          "forward quote requested at or after delivery start");
  return forwards_[i * fwd_per_scenario_ + fwd_offset_[j] + k];
}

std::optional<FrontMonth> ScenarioSet::rolling_front_month(std::int64_t i, int k) const {
  if (month_count() < 2 || k >= month_starts_.back()) return std::nullopt;
  int j = month_of(k) + 1;
  return FrontMonth{j, forward(i, j, k), month_end(j) - month_begin(j)};
}

ScenarioSet gen_spot_paths(const MarketModelParams& p, std::int64_t scenarios, std::int64_t days,
                           std::vector<int> month_starts, std::uint64_t seed) {
  validate(p);
  ScenarioSet s(scenarios, days, std::move(month_starts));

  double lambda = p.mean_reversion_speed;
  double decay = std::exp(-lambda);
  double step_std = std::sqrt(ou_variance(p, 1.0));
  std::vector<double> seasonal(static_cast<std::size_t>(days));
  for (std::int64_t k = 0; k < days; ++k) seasonal[k] = seasonal_price(p, static_cast<double>(k));

  parallel_for_each(static_cast<std::size_t>(scenarios), [&](std::size_t i) {
    Rng rng(substream_seed(seed, i));
    auto row = s.spot_row(static_cast<std::int64_t>(i));
    double x = p.initial_log_deviation;
    row[0] = seasonal[0] * std::exp(x);
    for (std::int64_t k = 1; k < days; ++k) {
      x = decay * x + step_std * rng.normal();
      row[k] = seasonal[k] * std::exp(x);
    }
  });
  return s;
}

double conditional_spot_mean(const MarketModelParams& p, double x, int k, int d) {
  double tau = static_cast<double>(d - k);
  double a = std::exp(-p.mean_reversion_speed * tau);
  return seasonal_price(p, static_cast<double>(d)) * std::exp(a * x + 0.5 * ou_variance(p, tau));
}

void gen_forward_curves(ScenarioSet& s, const MarketModelParams& p) {
  validate(p);
  int months = s.month_count();
  require(months >= 2, errc::invalid_argument,
          "forward curves need at least two months in the calendar");

  s.fwd_offset_.assign(static_cast<std::size_t>(months), 0);
  std::int64_t total = 0;
  for (int j = 1; j < months; ++j) {
    s.fwd_offset_[j] = total;
    total += s.month_begin(j);
  }
  s.fwd_per_scenario_ = total;
  s.forwards_.assign(static_cast<std::size_t>(total * s.count()), 0.0);

  parallel_for_each(static_cast<std::size_t>(s.count()), [&](std::size_t i) {
    auto row = s.spot_row(static_cast<std::int64_t>(i));
    double* out = s.forwards_.data() + static_cast<std::int64_t>(i) * s.fwd_per_scenario_;
    for (int j = 1; j < months; ++j) {
      int d0 = s.month_begin(j);
      int d1 = s.month_end(j);
      for (int k = 0; k < d0; ++k) {
        double x = std::log(row[k] / seasonal_price(p, static_cast<double>(k)));
        double acc = 0.0;
        for (int d = d0; d < d1; ++d) acc += conditional_spot_mean(p, x, k, d);
        out[s.fwd_offset_[j] + k] = acc / static_cast<double>(d1 - d0);
      }
    }
  });
}

ScenarioSet ingest_csv(const std::string& path, bool has_header, std::vector<int> month_starts) {
  std::ifstream in(path);
  require(in.good(), errc::io, "cannot open scenario csv: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t file_row = 0;
  while (std::getline(in, line)) {
    ++file_row;
    if (has_header && file_row == 1) continue;
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
    std::int64_t row = static_cast<std::int64_t>(rows.size());
    std::vector<double> values;
    std::size_t pos = 0;
    int col = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string_view cell(line.data() + pos,
                            (comma == std::string::npos ? line.size() : comma) - pos);
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v))
        fail(errc::parse, "scenario csv: cell '" + std::string(cell) + "' at row " +
                              std::to_string(row) + " col " + std::to_string(col) +
                              " is not a finite number");
      if (v <= 0.0)
        fail(errc::parse, "scenario csv: non-positive price at row " + std::to_string(row) +
                              " col " + std::to_string(col));
      values.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
      ++col;
    }
    if (!rows.empty() && values.size() != rows.front().size())
      fail(errc::parse, "scenario csv: row " + std::to_string(row) + " has " +
                            std::to_string(values.size()) + " columns, expected " +
                            std::to_string(rows.front().size()));
    rows.push_back(std::move(values));
  }
  require(!rows.empty(), errc::parse, "scenario csv is empty: " + path);

  ScenarioSet s(static_cast<std::int64_t>(rows.size()),
                static_cast<std::int64_t>(rows.front().size()), std::move(month_starts));
  for (std::int64_t i = 0; i < s.count(); ++i) {
    auto dst = s.spot_row(i);
    std::copy(rows[i].begin(), rows[i].end(), dst.begin());
  }
  return s;
}

void export_csv(const ScenarioSet& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open output csv: " + path);
  std::string line;
  for (std::int64_t i = 0; i < s.count(); ++i) {
    line.clear();
    auto row = s.spot_row(i);
    for (std::int64_t k = 0; k < s.days(); ++k) {
      if (k) line += ',';
      line += format_double(row[k]);
    }
    line += '\n';
    out << line;
  }
  require(out.good(), errc::io, "failed writing csv: " + path);
}

}  // namespace gasopt
