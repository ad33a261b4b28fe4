#include "lsmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

namespace gasopt {

namespace {

constexpr int kMaxRegularizationBumps = 8;

// Piecewise-linear read of a uniform-grid prefix starting at level 0;
// clamping the segment index extends the end segments linearly.
inline double interp_prefix(const double* values, int count, double inv_step, double level) {
  if (count == 1) return values[0];
  double t = level * inv_step;
  int idx = static_cast<int>(std::floor(t));
  idx = std::clamp(idx, 0, count - 2);
  double frac = t - static_cast<double>(idx);
  return values[idx] + (values[idx + 1] - values[idx]) * frac;
}

void make_candidates(double lo, double hi, int n, std::vector<double>& out) {
  out.clear();
  if (hi > lo) {
    double span = hi - lo;
    double inv = 1.0 / static_cast<double>(n - 1);
    for (int t = 0; t < n; ++t) out.push_back(lo + span * (static_cast<double>(t) * inv));
    out.front() = lo;
    out.back() = hi;
  } else {
    out.push_back(lo);
  }
  if (lo <= 0.0 && 0.0 <= hi) out.push_back(0.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// Bounds for one day with the emptying cap applied; collapses onto the lower
// bound (maximal withdrawal) when the interval inverts.
inline Bounds capped_bounds(const StorageSpec& spec, double level, int k) {
  Bounds b = effective_bounds(spec, level, k);
  b.hi = std::min(b.hi, spec.drain_after[k + 1] - level);
  if (b.hi < b.lo) b.hi = b.lo;
  return b;
}

// Ascending scan; strict improvement keeps the lowest action among ties.
template <class Score>
double pick_action(const std::vector<double>& candidates, Score&& score) {
  double best = -std::numeric_limits<double>::infinity();
  double best_a = candidates.front();
  for (double a : candidates) {
    double v = score(a);
    if (v > best) {
      best = v;
      best_a = a;
    }
  }
  return best_a;
}

inline double basis_dot(const double* beta, double s_std, int degree) {
  double acc = beta[0];
  double pw = 1.0;
  for (int d = 1; d <= degree; ++d) {
    pw *= s_std;
    acc += beta[d] * pw;
  }
  return acc;
}

void validate_lsmc_config(const ScenarioSet& s, const StorageSpec& spec, const LsmcConfig& cfg) {
  require(spec.days == s.days(), errc::invalid_argument,
          "storage horizon must match scenario days");
  require(cfg.storage_grid >= 2, errc::invalid_argument, "storage_grid must be >= 2");
  require(cfg.action_grid >= 2, errc::invalid_argument, "action_grid must be >= 2");
  require(cfg.basis_degree >= 0, errc::invalid_argument, "basis_degree must be >= 0");
  require(cfg.regularization >= 0.0, errc::invalid_argument, "regularization must be >= 0");
  std::int64_t rows = cfg.train_count < 0 ? s.count() : cfg.train_count;
  require(rows >= 1 && rows <= s.count(), errc::invalid_argument,
          "train_count out of range for the scenario set");
}

}  // namespace

LsmcResult lsmc_solve(const ScenarioSet& s, const StorageSpec& spec, const LsmcConfig& cfg) {
  validate_lsmc_config(s, spec, cfg);
  const std::int64_t n = cfg.train_count < 0 ? s.count() : cfg.train_count;
  const int K = spec.days;
  const int G = cfg.storage_grid;
  const int B = cfg.basis_degree + 1;
  const double step = spec.capacity / static_cast<double>(G - 1);
  const double inv_step = 1.0 / step;
  const double slack = 1e-9 * spec.capacity;

  // Reachable prefix of the level grid per day (can still be emptied).
  std::vector<int> alive(K + 1, 1);
  for (int k = 0; k <= K; ++k) {
    double cap = spec.drain_after[k] + slack;
    int a = static_cast<int>(std::floor(cap * inv_step)) + 1;
    alive[k] = std::clamp(a, 1, G);
  }

  LsmcResult result;
  LsmcPolicy& pol = result.policy;
  pol.days = K;
  pol.capacity = spec.capacity;
  pol.storage_grid = G;
  pol.action_grid = cfg.action_grid;
  pol.basis_degree = cfg.basis_degree;
  pol.price_shift.assign(K, 0.0);
  pol.price_scale.assign(K, 1.0);
  pol.alive_next.assign(K, 0);
  pol.coef_begin.assign(K + 1, 0);
  for (int k = 0; k < K; ++k) pol.coef_begin[k + 1] = pol.coef_begin[k] + alive[k + 1] * B;
  pol.coef.assign(static_cast<std::size_t>(pol.coef_begin[K]), 0.0);

  // Realized values along each fitting scenario, current day (v_cur) and the
  // day after (v_next); only the alive prefix of each row is meaningful.
  std::vector<double> v_next(static_cast<std::size_t>(n) * G, 0.0);
  std::vector<double> v_cur(static_cast<std::size_t>(n) * G, 0.0);

  Eigen::MatrixXd phi(n, B);
  Eigen::VectorXd y(n);

  for (int k = K - 1; k >= 0; --k) {
    const int a_next = alive[k + 1];
    const int a_cur = alive[k];
    pol.alive_next[k] = a_next;

    // Per-day price standardization over the fitting rows.
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += s.spot(i, k);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double d = s.spot(i, k) - mean;
      ss += d * d;
    }
    double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 0.0)) sd = 1.0;
    pol.price_shift[k] = mean;
    pol.price_scale[k] = sd;

    for (std::int64_t i = 0; i < n; ++i) {
      double s_std = (s.spot(i, k) - mean) / sd;
      double pw = 1.0;
      phi(i, 0) = 1.0;
      for (int d = 1; d < B; ++d) {
        pw *= s_std;
        phi(i, d) = pw;
      }
    }

    // Continuation coefficients per reachable next-day node.
    double* coef_day = pol.coef.data() + pol.coef_begin[k];
    if (cfg.regularization == 0.0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
      for (int g = 0; g < a_next; ++g) {
        for (std::int64_t i = 0; i < n; ++i) y(i) = v_next[static_cast<std::size_t>(i) * G + g];
        Eigen::VectorXd beta = svd.solve(y);
        for (int d = 0; d < B; ++d) coef_day[g * B + d] = beta(d);
      }
    } else {
      Eigen::MatrixXd gram = phi.transpose() * phi;
      double lam = cfg.regularization;
      for (int attempt = 0;; ++attempt) {
        Eigen::MatrixXd reg = gram + lam * Eigen::MatrixXd::Identity(B, B);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
        bool ok = ldlt.info() == Eigen::Success;
        for (int g = 0; ok && g < a_next; ++g) {
          for (std::int64_t i = 0; i < n; ++i) y(i) = v_next[static_cast<std::size_t>(i) * G + g];
          Eigen::VectorXd beta = ldlt.solve(phi.transpose() * y);
          ok = beta.allFinite();
          if (ok)
            for (int d = 0; d < B; ++d) coef_day[g * B + d] = beta(d);
        }
        if (ok) break;
        require(attempt < kMaxRegularizationBumps, errc::numeric,
                "continuation regression failed to stabilize");
        lam *= 10.0;
        ++result.regularization_bumps;
      }
    }

    // Realized value update: choices on the fitted continuation, values along
    // the scenario's own path.
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t lo_i, std::size_t hi_i) {
      std::vector<double> cont(static_cast<std::size_t>(a_next));
      std::vector<double> candidates;
      candidates.reserve(static_cast<std::size_t>(cfg.action_grid) + 1);
      for (std::size_t i = lo_i; i < hi_i; ++i) {
        double spot_k = s.spot(static_cast<std::int64_t>(i), k);
        double s_std = (spot_k - mean) / sd;
        for (int g = 0; g < a_next; ++g)
          cont[static_cast<std::size_t>(g)] = basis_dot(coef_day + g * B, s_std, cfg.basis_degree);
        const double* next_row = v_next.data() + i * G;
        double* cur_row = v_cur.data() + i * G;
        for (int g = 0; g < a_cur; ++g) {
          double level = static_cast<double>(g) * step;
          Bounds b = capped_bounds(spec, level, k);
          make_candidates(b.lo, b.hi, cfg.action_grid, candidates);
          double act = pick_action(candidates, [&](double a) {
            return step_cash(spec, a, spot_k) +
                   interp_prefix(cont.data(), a_next, inv_step, level + a);
          });
          cur_row[g] = step_cash(spec, act, spot_k) +
                       interp_prefix(next_row, a_next, inv_step, level + act);
        }
      }
    });
    std::swap(v_cur, v_next);
  }

  result.training = lsmc_evaluate(pol, s, spec, 0, n);
  return result;
}

EvalResult lsmc_evaluate(const LsmcPolicy& pol, const ScenarioSet& s, const StorageSpec& spec,
                         std::int64_t row_begin, std::int64_t row_end) {
  if (row_end < 0) row_end = s.count();
  require(row_begin >= 0 && row_begin < row_end && row_end <= s.count(), errc::invalid_argument,
          "scenario row range out of bounds");
  require(pol.days == spec.days && spec.days == s.days(), errc::invalid_argument,
          "rule, storage and scenarios must share the horizon");
  require(pol.capacity == spec.capacity, errc::invalid_argument,
          "rule was fitted for a different capacity");

  const int K = spec.days;
  const int B = pol.basis_degree + 1;
  const double inv_step = 1.0 / pol.level_step();
  EvalResult out;
  out.rows = row_end - row_begin;
  out.days = K;
  out.pnl.assign(static_cast<std::size_t>(out.rows), 0.0);
  out.fills.assign(static_cast<std::size_t>(out.rows) * (K + 1), 0.0);
  std::vector<std::int64_t> forced(static_cast<std::size_t>(out.rows), 0);
  std::vector<double> violation(static_cast<std::size_t>(out.rows), 0.0);

  parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t lo_i, std::size_t hi_i) {
    std::vector<double> cont;
    std::vector<double> candidates;
    candidates.reserve(static_cast<std::size_t>(pol.action_grid) + 1);
    for (std::size_t i = lo_i; i < hi_i; ++i) {
      auto spot = s.spot_row(row_begin + static_cast<std::int64_t>(i));
      double* fills = out.fills.data() + i * (K + 1);
      double cash = -spec.overhead;
      double level = 0.0;
      fills[0] = 0.0;
      for (int k = 0; k < K; ++k) {
        double s_std = (spot[k] - pol.price_shift[k]) / pol.price_scale[k];
        int a_next = pol.alive_next[k];
        cont.resize(static_cast<std::size_t>(a_next));
        const double* coef_day = pol.coef.data() + pol.coef_begin[k];
        for (int g = 0; g < a_next; ++g)
          cont[static_cast<std::size_t>(g)] = basis_dot(coef_day + g * B, s_std, pol.basis_degree);

        Bounds b = effective_bounds(spec, level, k);
        double capped = std::min(b.hi, spec.drain_after[k + 1] - level);
        if (capped < b.lo) {
          violation[i] += b.lo - capped;
          forced[i] = 1;
          capped = b.lo;
        }
        make_candidates(b.lo, capped, pol.action_grid, candidates);
        double act = pick_action(candidates, [&](double a) {
          return step_cash(spec, a, spot[k]) +
                 interp_prefix(cont.data(), a_next, inv_step, level + a);
        });
        cash += step_cash(spec, act, spot[k]);
        level += act;
        fills[k + 1] = level;
      }
      if (std::abs(level) > 1e-9 * spec.capacity) {
        violation[i] += std::abs(level);
        forced[i] = 1;
      }
      out.pnl[i] = cash;
    }
  });

  for (std::size_t i = 0; i < forced.size(); ++i) {
    out.forced_episodes += forced[i];
    out.max_violation = std::max(out.max_violation, violation[i]);
  }
  return out;
}

void save_lsmc(const LsmcPolicy& p, const std::string& path) {
  nlohmann::json j;
  j["format"] = "gasopt-lsmc";
  j["version"] = 1;
  j["days"] = p.days;
  j["capacity"] = p.capacity;
  j["storage_grid"] = p.storage_grid;
  j["action_grid"] = p.action_grid;
  j["basis_degree"] = p.basis_degree;
  j["price_shift"] = p.price_shift;
  j["price_scale"] = p.price_scale;
  j["alive_next"] = p.alive_next;
  j["coef_begin"] = p.coef_begin;
  j["coef"] = p.coef;
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
  require(out.good(), errc::io, "failed writing exercise rule: " + path);
}

LsmcPolicy load_lsmc(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io, "cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("invalid exercise-rule file: ") + e.what());
  }
  try {
    require(j.at("format") == "gasopt-lsmc" && j.at("version") == 1, errc::parse,
            "unrecognized exercise-rule format");
    LsmcPolicy p;
    p.days = j.at("days").get<int>();
    p.capacity = j.at("capacity").get<double>();
    p.storage_grid = j.at("storage_grid").get<int>();
    p.action_grid = j.at("action_grid").get<int>();
    p.basis_degree = j.at("basis_degree").get<int>();
    p.price_shift = j.at("price_shift").get<std::vector<double>>();
    p.price_scale = j.at("price_scale").get<std::vector<double>>();
    p.alive_next = j.at("alive_next").get<std::vector<int>>();
    p.coef_begin = j.at("coef_begin").get<std::vector<std::int64_t>>();
    p.coef = j.at("coef").get<std::vector<double>>();
    require(p.days >= 1 && p.capacity > 0 && p.storage_grid >= 2 && p.action_grid >= 2 &&
                p.basis_degree >= 0,
            errc::parse, "exercise-rule fields out of range");
    const int B = p.basis_degree + 1;
    require(static_cast<int>(p.price_shift.size()) == p.days &&
                static_cast<int>(p.price_scale.size()) == p.days &&
                static_cast<int>(p.alive_next.size()) == p.days &&
                static_cast<int>(p.coef_begin.size()) == p.days + 1,
            errc::parse, "exercise-rule arrays truncated");
    for (int k = 0; k < p.days; ++k) {
      require(p.alive_next[k] >= 1 && p.alive_next[k] <= p.storage_grid, errc::parse,
              "reachable-node count out of range");
      require(p.coef_begin[k + 1] - p.coef_begin[k] == p.alive_next[k] * B, errc::parse,
              "coefficient block size mismatch");
      require(p.price_scale[k] > 0.0, errc::parse, "price scale must be positive");
    }
    require(p.coef_begin[0] == 0 &&
                p.coef_begin[p.days] == static_cast<std::int64_t>(p.coef.size()),
            errc::parse, "coefficient table size mismatch");
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("invalid exercise-rule file: ") + e.what());
  }
}

}  // namespace gasopt
