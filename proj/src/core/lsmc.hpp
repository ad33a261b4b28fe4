#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "market.hpp"
#include "report.hpp"
#include "storage.hpp"

namespace gasopt {

struct LsmcConfig {
  int storage_grid = 41;        // uniform level nodes on [0, capacity]
  int action_grid = 21;         // candidate actions per interval (plus 0)
  int basis_degree = 2;         // polynomial degree in the standardized price
  double regularization = 1e-6; // ridge weight; 0 switches to min-norm SVD
  std::int64_t train_count = -1;  // rows used for the regressions; -1 = all
};

// Regression-based exercise rule: per day, one polynomial continuation fit in
// the standardized spot per reachable level node. Everything needed to replay
// decisions is stored, so evaluation never touches the fitting scenarios.
struct LsmcPolicy {
  int days = 0;
  double capacity = 0.0;
  int storage_grid = 0;
  int action_grid = 0;
  int basis_degree = 0;
  std::vector<double> price_shift;  // per day
  std::vector<double> price_scale;  // per day
  std::vector<int> alive_next;      // level nodes reachable on day k+1
  std::vector<std::int64_t> coef_begin;  // per day offset into coef
  std::vector<double> coef;              // alive_next[k] * (degree+1) per day

  double level_step() const { return capacity / (storage_grid - 1); }
};

struct LsmcResult {
  LsmcPolicy policy;
  EvalResult training;  // greedy replay over the fitting rows
  int regularization_bumps = 0;
};

// Backward induction over the level grid with least-squares continuation
// values. The fit uses the first train_count rows; choices are made on the
// fitted continuation while values propagate along each scenario's own
// realized path, which keeps the estimate from feeding on its own noise.
LsmcResult lsmc_solve(const ScenarioSet& s, const StorageSpec& spec, const LsmcConfig& cfg);

// Greedy forward replay of the stored rule on rows [row_begin, row_end).
EvalResult lsmc_evaluate(const LsmcPolicy& policy, const ScenarioSet& s, const StorageSpec& spec,
                         std::int64_t row_begin = 0, std::int64_t row_end = -1);

void save_lsmc(const LsmcPolicy& p, const std::string& path);
LsmcPolicy load_lsmc(const std::string& path);

}  // namespace gasopt
