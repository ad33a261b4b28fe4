#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gasopt {

SummaryStats summarize(std::span<const double> xs) {
  require(!xs.empty(), errc::invalid_argument, "cannot summarize an empty sample");
  SummaryStats out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;

  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  out.median = quantile_sorted(sorted, 0.5);
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  require(!sorted.empty(), errc::invalid_argument, "quantile of empty sample");
  require(q >= 0.0 && q <= 1.0, errc::invalid_argument, "quantile level outside [0,1]");
  double pos = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PnLReport make_report(const std::string& label, const EvalResult& eval, double capacity,
                      int histogram_bins) {
  require(histogram_bins >= 1, errc::invalid_argument, "histogram needs at least one bin");
  require(eval.rows >= 1, errc::invalid_argument, "report needs at least one scenario");

  PnLReport r;
  r.label = label;
  r.scenarios = eval.rows;
  r.days = eval.days;
  r.capacity = capacity;
  r.pnl = eval.pnl;
  r.stats = summarize(r.pnl);

  double lo = *std::min_element(r.pnl.begin(), r.pnl.end());
  double hi = *std::max_element(r.pnl.begin(), r.pnl.end());
  if (lo == hi) {
    r.hist_edges = {lo, hi};
    r.hist_counts = {eval.rows};
  } else {
    r.hist_edges.resize(histogram_bins + 1);
    for (int b = 0; b <= histogram_bins; ++b)
      r.hist_edges[b] = lo + (hi - lo) * static_cast<double>(b) / histogram_bins;
    r.hist_counts.assign(histogram_bins, 0);
    for (double x : r.pnl) {
      int b = static_cast<int>((x - lo) / (hi - lo) * histogram_bins);
      b = std::clamp(b, 0, histogram_bins - 1);  // right edge falls into the last bin
      ++r.hist_counts[b];
    }
  }

  const int cols = eval.days + 1;
  r.fill_mean.assign(cols, 0.0);
  for (std::int64_t i = 0; i < eval.rows; ++i) {
    auto row = eval.fill_row(i);
    for (int k = 0; k < cols; ++k) r.fill_mean[k] += row[k];
  }
  for (int k = 0; k < cols; ++k) r.fill_mean[k] /= static_cast<double>(eval.rows);

  const std::vector<std::pair<std::string, double>> levels = {
      {"p05", 0.05}, {"p25", 0.25}, {"p50", 0.50}, {"p75", 0.75}, {"p95", 0.95}};
  std::vector<double> column(eval.rows);
  for (const auto& [name, q] : levels) r.fill_quantiles.emplace_back(name, std::vector<double>(cols));
  for (int k = 0; k < cols; ++k) {
    for (std::int64_t i = 0; i < eval.rows; ++i) column[i] = eval.fills[i * cols + k];
    std::sort(column.begin(), column.end());
    for (std::size_t q = 0; q < levels.size(); ++q)
      r.fill_quantiles[q].second[k] = quantile_sorted(column, levels[q].second);
  }
  return r;
}

namespace {

nlohmann::json to_json(const PnLReport& r) {
  nlohmann::json j;
  j["version"] = 1;
  j["format"] = "gasopt-report";
  j["label"] = r.label;
  j["scenarios"] = r.scenarios;
  j["days"] = r.days;
  j["capacity"] = r.capacity;
  j["mean"] = r.stats.mean;
  j["median"] = r.stats.median;
  j["stddev"] = r.stats.stddev;
  j["pnl"] = r.pnl;
  j["histogram"]["edges"] = r.hist_edges;
  j["histogram"]["counts"] = r.hist_counts;
  j["fill"]["mean"] = r.fill_mean;
  for (const auto& [name, values] : r.fill_quantiles) j["fill"][name] = values;
  return j;
}

}  // namespace

void write_report_json(const PnLReport& r, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open report for writing: " + path);
  out << to_json(r).dump(2) << '\n';
  require(out.good(), errc::io, "failed writing report: " + path);
}

PnLReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io, "cannot open report: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(errc::parse, std::string("report is not valid json: ") + e.what());
  }
  try {
    require(j.at("format") == "gasopt-report" && j.at("version") == 1, errc::parse,
            "not a recognized report file");
    PnLReport r;
    r.label = j.at("label");
    r.scenarios = j.at("scenarios");
    r.days = j.at("days");
    r.capacity = j.at("capacity");
    r.stats.mean = j.at("mean");
    r.stats.median = j.at("median");
    r.stats.stddev = j.at("stddev");
    r.pnl = j.at("pnl").get<std::vector<double>>();
    r.hist_edges = j.at("histogram").at("edges").get<std::vector<double>>();
    r.hist_counts = j.at("histogram").at("counts").get<std::vector<std::int64_t>>();
    r.fill_mean = j.at("fill").at("mean").get<std::vector<double>>();
    for (const char* name : {"p05", "p25", "p50", "p75", "p95"})
      r.fill_quantiles.emplace_back(name, j.at("fill").at(name).get<std::vector<double>>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("report missing or mistyped field: ") + e.what());
  }
}

void write_pnl_csv(const PnLReport& r, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open csv for writing: " + path);
  out << "pnl\n";
  for (double x : r.pnl) out << format_double(x) << '\n';
  require(out.good(), errc::io, "failed writing csv: " + path);
}

void write_fill_csv(const PnLReport& r, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open csv for writing: " + path);
  out << "day,mean";
  for (const auto& [name, values] : r.fill_quantiles) out << ',' << name;
  out << '\n';
  for (std::size_t k = 0; k < r.fill_mean.size(); ++k) {
    out << k << ',' << format_double(r.fill_mean[k]);
    for (const auto& [name, values] : r.fill_quantiles) out << ',' << format_double(values[k]);
    out << '\n';
  }
  require(out.good(), errc::io, "failed writing csv: " + path);
}

void write_histogram_csv(const PnLReport& r, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open csv for writing: " + path);
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < r.hist_counts.size(); ++b)
    out << format_double(r.hist_edges[b]) << ',' << format_double(r.hist_edges[b + 1]) << ','
        << r.hist_counts[b] << '\n';
  require(out.good(), errc::io, "failed writing csv: " + path);
}

void write_compare_csv(std::span<const PnLReport> reports, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open csv for writing: " + path);
  out << "label,scenarios,mean,median,stddev\n";
  for (const auto& r : reports)
    out << r.label << ',' << r.scenarios << ',' << format_double(r.stats.mean) << ','
        << format_double(r.stats.median) << ',' << format_double(r.stats.stddev) << '\n';
  require(out.good(), errc::io, "failed writing csv: " + path);
}

void write_compare_json(std::span<const PnLReport> reports, const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["format"] = "gasopt-compare";
  auto& rows = j["methods"];
  rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row;
    row["label"] = r.label;
    row["scenarios"] = r.scenarios;
    row["mean"] = r.stats.mean;
    row["median"] = r.stats.median;
    row["stddev"] = r.stats.stddev;
    rows.push_back(row);
  }
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open comparison for writing: " + path);
  out << j.dump(2) << '\n';
  require(out.good(), errc::io, "failed writing comparison: " + path);
}

}  // namespace gasopt
