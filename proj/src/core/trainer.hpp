#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "episode.hpp"
#include "market.hpp"
#include "optimizer.hpp"
#include "policy.hpp"
#include "report.hpp"
#include "storage.hpp"

namespace gasopt {

// Exponential utility (1 - e^{ -r x }) / r on numeraire-scaled wealth; the
// clamped exp keeps it finite with bounded slope for extreme candidates.
inline double exp_utility(double x, double risk_aversion) {
  return (1.0 - ad::exp_clamped(-risk_aversion * x)) / risk_aversion;
}

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 64;
  double learning_rate = 0.05;
  double risk_aversion = 3.0;
  std::int64_t train_count = 900;
  std::int64_t validation_count = 100;
  std::uint64_t seed = 1;
  double penalty_weight = 10.0;  // numeraire units per MWh of infeasibility
  double numeraire = 0.0;        // 0 = capacity * mean training spot price
  std::vector<int> hidden{16};
  bool keep_best = true;  // return the best-validation checkpoint
  double alpha = 0.1;     // sfmod liquidity fraction (copied onto the storage spec)
};

TrainConfig default_train_config(ModelKind model);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_mean_pnl = 0.0;
  double val_loss = 0.0;
  double val_mean_pnl = 0.0;
};

struct TrainResult {
  PolicyParams policy;
  std::vector<EpochLog> log;
  double numeraire = 0.0;
  int best_epoch = -1;  // 1-based; -1 when validation is empty or keep_best off
  bool diverged = false;
  int skipped_steps = 0;          // batches dropped due to non-finite gradients
  std::int64_t saturated_episodes = 0;  // utility exp tail engaged
};

// Minibatch Adam on mean negative utility of scaled terminal wealth, with an
// infeasibility penalty. Deterministic in (config, inputs) regardless of the
// worker thread count. The first train_count scenario rows train, the next
// validation_count rows validate; price normalization is fitted on the
// training rows only.
TrainResult train_policy(ModelKind model, const ScenarioSet& s, const StorageSpec& spec,
                         const TrainConfig& cfg);

// Double-path evaluation over scenario rows [row_begin, row_end).
EvalResult evaluate_policy(const PolicyParams& policy, const ScenarioSet& s,
                           const StorageSpec& spec, std::int64_t row_begin = 0,
                           std::int64_t row_end = -1);

// One log line per epoch as JSON (jsonl).
void write_train_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace gasopt
