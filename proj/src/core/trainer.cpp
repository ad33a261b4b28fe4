#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rng.hpp"

namespace gasopt {

TrainConfig default_train_config(ModelKind model) {
  TrainConfig cfg;
  if (model == ModelKind::sfmod) {
    cfg.batch_size = 100;
    cfg.risk_aversion = 10.0;
  }
  return cfg;
}

namespace {

struct EpisodeStats {
  double loss = 0.0;
  double pnl = 0.0;
  bool saturated = false;
};

// Builds the tape for one episode, runs backward from the penalized-utility
// loss and writes d(loss)/d(params) into grad.
EpisodeStats episode_gradient(ad::Tape& tape, ModelKind model, const StorageSpec& spec,
                              const ScenarioSet& s, std::int64_t scenario,
                              const PolicyParams& policy, std::vector<ad::Rev>& leaves,
                              double risk_aversion, double inv_numeraire, double penalty_weight,
                              std::span<double> grad) {
  tape.reset();
  const std::size_t n = policy.values.size();
  leaves.clear();
  leaves.reserve(n);
  for (std::size_t p = 0; p < n; ++p) leaves.push_back(ad::Rev::leaf(tape, policy.values[p]));

  NetworkProvider<ad::Rev> provider{&policy, leaves, {}};
  auto outcome = run_episode<ad::Rev>(model, spec, s, scenario, policy.norm, provider);

  ad::Rev scaled = outcome.wealth * inv_numeraire - penalty_weight * outcome.violation;
  ad::Rev z = scaled * (-risk_aversion);
  ad::Rev loss = (ad::exp_clamped(z) - 1.0) * (1.0 / risk_aversion);
  if (loss.id < 0) {
    std::fill(grad.begin(), grad.end(), 0.0);
  } else {
    tape.backward(loss.id);
    for (std::size_t p = 0; p < n; ++p) grad[p] = tape.adjoint(static_cast<int>(p));
  }

  return {loss.v, outcome.wealth.v, std::abs(z.v) > ad::kExpClamp};
}

EpisodeStats episode_loss(ModelKind model, const StorageSpec& spec, const ScenarioSet& s,
                          std::int64_t scenario, const PolicyParams& policy, double risk_aversion,
                          double inv_numeraire, double penalty_weight) {
  NetworkProvider<double> provider{&policy, policy.values, {}};
  auto outcome = run_episode<double>(model, spec, s, scenario, policy.norm, provider);
  double scaled = outcome.wealth * inv_numeraire - penalty_weight * outcome.violation;
  double z = -risk_aversion * scaled;
  return {(ad::exp_clamped(z) - 1.0) / risk_aversion, outcome.wealth,
          std::abs(z) > ad::kExpClamp};
}

void validate_train_inputs(ModelKind model, const ScenarioSet& s, const StorageSpec& spec,
                           const TrainConfig& cfg) {
  require(spec.days == s.days(), errc::invalid_argument,
          "storage horizon must match scenario days");
  require(spec.month_starts == s.month_starts(), errc::invalid_argument,
          "storage and scenario month calendars must agree");
  require(cfg.epochs >= 1, errc::invalid_argument, "epochs must be >= 1");
  require(cfg.batch_size >= 1, errc::invalid_argument, "batch_size must be >= 1");
  require(cfg.learning_rate > 0.0, errc::invalid_argument, "learning_rate must be positive");
  require(cfg.risk_aversion > 0.0, errc::invalid_argument, "risk_aversion must be positive");
  require(cfg.penalty_weight >= 0.0, errc::invalid_argument, "penalty_weight must be >= 0");
  require(cfg.train_count >= 1, errc::invalid_argument, "need at least one training scenario");
  require(cfg.validation_count >= 0, errc::invalid_argument, "validation_count must be >= 0");
  require(cfg.train_count + cfg.validation_count <= s.count(), errc::invalid_argument,
          "train + validation scenario counts exceed the set");
  require(cfg.batch_size <= cfg.train_count, errc::invalid_argument,
          "batch_size cannot exceed train_count");
  if (model == ModelKind::sfmod)
    require(s.has_forwards(), errc::invalid_argument, "sfmod training needs forward curves");
}

}  // namespace

TrainResult train_policy(ModelKind model, const ScenarioSet& s, const StorageSpec& spec_in,
                         const TrainConfig& cfg) {
  validate_train_inputs(model, s, spec_in, cfg);

  StorageSpec spec = spec_in;
  if (model == ModelKind::sfmod) {
    require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, errc::invalid_argument,
            "alpha must lie in [0, 1]");
    spec.alpha = cfg.alpha;
  }

  TrainResult result;
  result.policy = init_policy(model, spec, cfg.hidden, substream_seed(cfg.seed, 17));
  result.policy.norm = fit_norm_stats(s, spec, model, cfg.train_count);

  double numeraire = cfg.numeraire;
  if (numeraire <= 0.0) numeraire = spec.capacity * result.policy.norm.shift[2];
  require(std::isfinite(numeraire) && numeraire > 0.0, errc::invalid_argument,
          "numeraire must be positive");
  result.numeraire = numeraire;
  const double inv_numeraire = 1.0 / numeraire;

  PolicyParams& policy = result.policy;
  const std::size_t n_params = policy.values.size();
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam(n_params);

  std::vector<std::int64_t> order(static_cast<std::size_t>(cfg.train_count));
  std::iota(order.begin(), order.end(), 0);

  const int batches = static_cast<int>((cfg.train_count + cfg.batch_size - 1) / cfg.batch_size);
  std::vector<double> grads(static_cast<std::size_t>(cfg.batch_size) * n_params);
  std::vector<EpisodeStats> batch_stats(cfg.batch_size);
  std::vector<double> grad_mean(n_params);
  std::vector<EpisodeStats> val_stats(static_cast<std::size_t>(cfg.validation_count));

  std::vector<double> best_values;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<double> last_good = policy.values;

  for (int epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
    Rng shuffle_rng(substream_seed(cfg.seed, 100000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);

    double epoch_loss = 0.0;
    double epoch_pnl = 0.0;
    std::int64_t seen = 0;

    for (int b = 0; b < batches; ++b) {
      std::int64_t begin = static_cast<std::int64_t>(b) * cfg.batch_size;
      std::int64_t end = std::min<std::int64_t>(begin + cfg.batch_size, cfg.train_count);
      std::int64_t bsz = end - begin;

      parallel_for(static_cast<std::size_t>(bsz), [&](std::size_t lo, std::size_t hi) {
        ad::Tape tape;
        std::vector<ad::Rev> leaves;
        for (std::size_t e = lo; e < hi; ++e) {
          batch_stats[e] = episode_gradient(
              tape, model, spec, s, order[static_cast<std::size_t>(begin) + e], policy, leaves,
              cfg.risk_aversion, inv_numeraire, cfg.penalty_weight,
              {grads.data() + e * n_params, n_params});
        }
      });

      std::fill(grad_mean.begin(), grad_mean.end(), 0.0);
      double batch_loss = 0.0;
      for (std::int64_t e = 0; e < bsz; ++e) {
        const double* g = grads.data() + static_cast<std::size_t>(e) * n_params;
        for (std::size_t p = 0; p < n_params; ++p) grad_mean[p] += g[p];
        batch_loss += batch_stats[e].loss;
        epoch_pnl += batch_stats[e].pnl;
        if (batch_stats[e].saturated) ++result.saturated_episodes;
      }
      double inv_bsz = 1.0 / static_cast<double>(bsz);
      for (std::size_t p = 0; p < n_params; ++p) grad_mean[p] *= inv_bsz;
      batch_loss *= inv_bsz;
      epoch_loss += batch_loss * static_cast<double>(bsz);
      seen += bsz;

      if (!std::isfinite(batch_loss)) {
        result.diverged = true;
        policy.values = best_values.empty() ? last_good : best_values;
        break;
      }
      last_good = policy.values;
      if (!adam_step(policy.values, grad_mean, adam, adam_cfg)) ++result.skipped_steps;
    }
    if (result.diverged) break;

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(seen);
    log.train_mean_pnl = epoch_pnl / static_cast<double>(seen);

    if (cfg.validation_count > 0) {
      parallel_for_each(static_cast<std::size_t>(cfg.validation_count), [&](std::size_t v) {
        val_stats[v] = episode_loss(model, spec, s, cfg.train_count + static_cast<std::int64_t>(v),
                                    policy, cfg.risk_aversion, inv_numeraire, cfg.penalty_weight);
      });
      double vl = 0.0, vp = 0.0;
      for (const auto& st : val_stats) {
        vl += st.loss;
        vp += st.pnl;
      }
      log.val_loss = vl / static_cast<double>(cfg.validation_count);
      log.val_mean_pnl = vp / static_cast<double>(cfg.validation_count);

      if (cfg.keep_best && log.val_loss < best_val_loss) {
        best_val_loss = log.val_loss;
        best_values = policy.values;
        result.best_epoch = epoch;
      }
    }
    result.log.push_back(log);
  }

  if (cfg.keep_best && !best_values.empty()) policy.values = std::move(best_values);
  return result;
}

EvalResult evaluate_policy(const PolicyParams& policy, const ScenarioSet& s,
                           const StorageSpec& spec, std::int64_t row_begin, std::int64_t row_end) {
  if (row_end < 0) row_end = s.count();
  require(row_begin >= 0 && row_begin < row_end && row_end <= s.count(), errc::invalid_argument,
          "scenario row range out of bounds");
  require(policy.days() == spec.days && spec.days == s.days(), errc::invalid_argument,
          "policy, storage and scenarios must share the horizon");
  require(spec.month_starts == s.month_starts(), errc::invalid_argument,
          "storage and scenario month calendars must agree");
  if (policy.model == ModelKind::sfmod)
    require(s.has_forwards(), errc::invalid_argument, "sfmod evaluation needs forward curves");

  EvalResult out;
  out.rows = row_end - row_begin;
  out.days = spec.days;
  out.pnl.assign(static_cast<std::size_t>(out.rows), 0.0);
  out.fills.assign(static_cast<std::size_t>(out.rows) * (spec.days + 1), 0.0);
  std::vector<std::int64_t> forced(static_cast<std::size_t>(out.rows), 0);
  std::vector<double> violation(static_cast<std::size_t>(out.rows), 0.0);

  parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t lo, std::size_t hi) {
    EpisodeLedger ledger;
    for (std::size_t i = lo; i < hi; ++i) {
      auto outcome = simulate_episode(policy, spec, s, row_begin + static_cast<std::int64_t>(i),
                                      &ledger);
      out.pnl[i] = outcome.wealth;
      std::copy(ledger.level.begin(), ledger.level.end(),
                out.fills.begin() + static_cast<std::ptrdiff_t>(i * (spec.days + 1)));
      forced[i] = outcome.forced ? 1 : 0;
      violation[i] = outcome.violation;
    }
  });

  for (std::size_t i = 0; i < forced.size(); ++i) {
    out.forced_episodes += forced[i];
    out.max_violation = std::max(out.max_violation, violation[i]);
  }
  return out;
}

void write_train_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open training log for writing: " + path);
  for (const auto& e : log) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["train_mean_pnl"] = e.train_mean_pnl;
    j["val_loss"] = e.val_loss;
    j["val_mean_pnl"] = e.val_mean_pnl;
    out << j.dump() << '\n';
  }
  require(out.good(), errc::io, "failed writing training log: " + path);
}

}  // namespace gasopt
