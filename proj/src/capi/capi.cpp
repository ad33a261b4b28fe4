#include "gasopt/gasopt.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "../core/lsmc.hpp"
#include "../core/market.hpp"
#include "../core/policy.hpp"
#include "../core/report.hpp"
#include "../core/storage.hpp"
#include "../core/trainer.hpp"

struct gasopt_scenarios {
  gasopt::ScenarioSet impl;
};
struct gasopt_storage {
  gasopt::StorageSpec impl;
};
struct gasopt_policy {
  gasopt::PolicyParams impl;
};
struct gasopt_lsmc {
  gasopt::LsmcPolicy impl;
};
struct gasopt_eval {
  gasopt::EvalResult impl;
};

namespace {

thread_local std::string t_last_error;

gasopt_status map_errc(gasopt::errc c) {
  switch (c) {
    case gasopt::errc::invalid_argument:
      return GASOPT_ERR_INVALID_ARGUMENT;
    case gasopt::errc::io:
      return GASOPT_ERR_IO;
    case gasopt::errc::parse:
      return GASOPT_ERR_PARSE;
    case gasopt::errc::infeasible:
      return GASOPT_ERR_INFEASIBLE;
    case gasopt::errc::numeric:
      return GASOPT_ERR_NUMERIC;
    case gasopt::errc::internal:
      return GASOPT_ERR_INTERNAL;
  }
  return GASOPT_ERR_INTERNAL;
}

template <class F>
gasopt_status wrap(F&& body) noexcept {
  try {
    body();
    return GASOPT_OK;
  } catch (const gasopt::Error& e) {
    t_last_error = e.what();
    return map_errc(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return GASOPT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GASOPT_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return GASOPT_ERR_INTERNAL;
  }
}

void check(bool ok, const char* what) {
  gasopt::require(ok, gasopt::errc::invalid_argument, what);
}

gasopt::MarketModelParams to_market(const gasopt_market_params* p) {
  check(p != nullptr, "market params pointer is NULL");
  gasopt::MarketModelParams m;
  m.seasonal_level = p->seasonal_level;
  m.seasonal_amplitude = p->seasonal_amplitude;
  m.seasonal_phase = p->seasonal_phase;
  m.mean_reversion_speed = p->mean_reversion_speed;
  m.volatility = p->volatility;
  m.initial_log_deviation = p->initial_log_deviation;
  return m;
}

std::vector<int> to_month_starts(const int32_t* month_starts, int32_t month_count) {
  check(month_starts != nullptr || month_count == 0, "month_starts pointer is NULL");
  return std::vector<int>(month_starts, month_starts + month_count);
}

gasopt::ModelKind to_model(gasopt_model m) {
  check(m == GASOPT_MODEL_SPOT || m == GASOPT_MODEL_SPOT_FORWARD, "unknown model kind");
  return m == GASOPT_MODEL_SPOT ? gasopt::ModelKind::smod : gasopt::ModelKind::sfmod;
}

gasopt::TrainConfig to_train_config(const gasopt_train_config* cfg) {
  check(cfg != nullptr, "train config pointer is NULL");
  check(cfg->hidden_count >= 0 && cfg->hidden_count <= 8, "hidden_count must lie in [0, 8]");
  gasopt::TrainConfig c;
  c.epochs = cfg->epochs;
  c.batch_size = cfg->batch_size;
  c.learning_rate = cfg->learning_rate;
  c.risk_aversion = cfg->risk_aversion;
  c.train_count = cfg->train_count;
  c.validation_count = cfg->validation_count;
  c.seed = cfg->seed;
  c.penalty_weight = cfg->penalty_weight;
  c.numeraire = cfg->numeraire;
  c.hidden.assign(cfg->hidden_sizes, cfg->hidden_sizes + cfg->hidden_count);
  c.keep_best = cfg->keep_best != 0;
  c.alpha = cfg->alpha;
  return c;
}

}  // namespace

extern "C" {

const char* gasopt_version(void) { return "1.0.0"; }

const char* gasopt_last_error(void) { return t_last_error.c_str(); }

/* ---- market scenarios ---------------------------------------------------- */

void gasopt_market_params_init(gasopt_market_params* p) {
  if (!p) return;
  gasopt::MarketModelParams d;
  p->seasonal_level = d.seasonal_level;
  p->seasonal_amplitude = d.seasonal_amplitude;
  p->seasonal_phase = d.seasonal_phase;
  p->mean_reversion_speed = d.mean_reversion_speed;
  p->volatility = d.volatility;
  p->initial_log_deviation = d.initial_log_deviation;
}

gasopt_status gasopt_scenarios_generate(const gasopt_market_params* params, int64_t scenarios,
                                        int32_t days, const int32_t* month_starts,
                                        int32_t month_count, uint64_t seed,
                                        gasopt_scenarios** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    auto set = gasopt::gen_spot_paths(to_market(params), scenarios, days,
                                      to_month_starts(month_starts, month_count), seed);
    *out = new gasopt_scenarios{std::move(set)};
  });
}

gasopt_status gasopt_scenarios_from_csv(const char* path, int32_t has_header,
                                        const int32_t* month_starts, int32_t month_count,
                                        gasopt_scenarios** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    check(path != nullptr, "path is NULL");
    auto set = gasopt::ingest_csv(path, has_header != 0, to_month_starts(month_starts, month_count));
    *out = new gasopt_scenarios{std::move(set)};
  });
}

gasopt_status gasopt_scenarios_to_csv(const gasopt_scenarios* s, const char* path) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    check(path != nullptr, "path is NULL");
    gasopt::export_csv(s->impl, path);
  });
}

gasopt_status gasopt_scenarios_build_forwards(gasopt_scenarios* s,
                                              const gasopt_market_params* params) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    gasopt::gen_forward_curves(s->impl, to_market(params));
  });
}

gasopt_status gasopt_scenarios_info(const gasopt_scenarios* s, int64_t* scenarios, int32_t* days,
                                    int32_t* months, int32_t* has_forwards) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    if (scenarios) *scenarios = s->impl.count();
    if (days) *days = static_cast<int32_t>(s->impl.days());
    if (months) *months = s->impl.month_count();
    if (has_forwards) *has_forwards = s->impl.has_forwards() ? 1 : 0;
  });
}

gasopt_status gasopt_scenarios_spot(const gasopt_scenarios* s, int64_t row, double* out,
                                    int32_t days) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    check(row >= 0 && row < s->impl.count(), "scenario row out of range");
    check(days == s->impl.days(), "output length must equal the day count");
    auto r = s->impl.spot_row(row);
    std::copy(r.begin(), r.end(), out);
  });
}

gasopt_status gasopt_scenarios_front_month(const gasopt_scenarios* s, int64_t row, int32_t day,
                                           int32_t* delivery_month, int32_t* delivery_days,
                                           double* price, int32_t* available) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    check(available != nullptr, "available pointer is NULL");
    check(row >= 0 && row < s->impl.count(), "scenario row out of range");
    check(day >= 0 && day < s->impl.days(), "day out of range");
    auto fm = s->impl.rolling_front_month(row, day);
    *available = fm ? 1 : 0;
    if (fm) {
      if (delivery_month) *delivery_month = fm->month;
      if (delivery_days) *delivery_days = fm->delivery_days;
      if (price) *price = fm->price;
    }
  });
}

void gasopt_scenarios_free(gasopt_scenarios* s) { delete s; }

/* ---- storage contract ---------------------------------------------------- */

gasopt_status gasopt_storage_create(int32_t days, double capacity, double kappa, double overhead,
                                    double alpha, const double* withdrawal_max,
                                    const double* injection_max, const int32_t* month_starts,
                                    int32_t month_count, gasopt_storage** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    check(days > 0, "days must be positive");
    check(withdrawal_max != nullptr && injection_max != nullptr, "bounds pointers are NULL");
    auto spec = gasopt::make_storage_spec(
        days, capacity, kappa, overhead, alpha,
        std::vector<double>(withdrawal_max, withdrawal_max + days),
        std::vector<double>(injection_max, injection_max + days),
        to_month_starts(month_starts, month_count));
    *out = new gasopt_storage{std::move(spec)};
  });
}

gasopt_status gasopt_storage_reference_preset(double alpha, double kappa, double overhead,
                                          gasopt_storage** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    *out = new gasopt_storage{gasopt::reference_preset_spec(alpha, kappa, overhead)};
  });
}

gasopt_status gasopt_storage_info(const gasopt_storage* st, int32_t* days, double* capacity,
                                  int32_t* months) {
  return wrap([&] {
    check(st != nullptr, "storage handle is NULL");
    if (days) *days = st->impl.days;
    if (capacity) *capacity = st->impl.capacity;
    if (months) *months = static_cast<int32_t>(st->impl.month_starts.size());
  });
}

gasopt_status gasopt_storage_bounds(const gasopt_storage* st, double level, int32_t day,
                                    double delivery, double* lo, double* hi) {
  return wrap([&] {
    check(st != nullptr, "storage handle is NULL");
    check(day >= 0 && day < st->impl.days, "day out of range");
    auto b = gasopt::effective_bounds(st->impl, level, day, delivery);
    if (lo) *lo = b.lo;
    if (hi) *hi = b.hi;
  });
}

gasopt_status gasopt_storage_terminal_reachable(const gasopt_storage* st, double level,
                                                int32_t day, int32_t* reachable) {
  return wrap([&] {
    check(st != nullptr, "storage handle is NULL");
    check(reachable != nullptr, "output pointer is NULL");
    check(day >= 0 && day <= st->impl.days, "day out of range");
    *reachable = gasopt::terminal_reachable(st->impl, level, day) ? 1 : 0;
  });
}

gasopt_status gasopt_storage_crossing_day(const gasopt_storage* st, int32_t* day) {
  return wrap([&] {
    check(st != nullptr, "storage handle is NULL");
    check(day != nullptr, "output pointer is NULL");
    *day = gasopt::reachability_crossing_day(st->impl);
  });
}

void gasopt_storage_free(gasopt_storage* st) { delete st; }

/* ---- network policy training --------------------------------------------- */

void gasopt_train_config_init(gasopt_model model, gasopt_train_config* cfg) {
  if (!cfg) return;
  gasopt::TrainConfig d = gasopt::default_train_config(
      model == GASOPT_MODEL_SPOT_FORWARD ? gasopt::ModelKind::sfmod : gasopt::ModelKind::smod);
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->risk_aversion = d.risk_aversion;
  cfg->train_count = d.train_count;
  cfg->validation_count = d.validation_count;
  cfg->seed = d.seed;
  cfg->penalty_weight = d.penalty_weight;
  cfg->numeraire = d.numeraire;
  cfg->hidden_count = static_cast<int32_t>(d.hidden.size());
  for (std::size_t i = 0; i < d.hidden.size() && i < 8; ++i)
    cfg->hidden_sizes[i] = d.hidden[i];
  cfg->keep_best = d.keep_best ? 1 : 0;
  cfg->alpha = d.alpha;
}

gasopt_status gasopt_train(gasopt_model model, const gasopt_scenarios* s, const gasopt_storage* st,
                           const gasopt_train_config* cfg, const char* log_path,
                           gasopt_policy** out, gasopt_train_summary* summary) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    check(st != nullptr, "storage handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    auto result = gasopt::train_policy(to_model(model), s->impl, st->impl, to_train_config(cfg));
    if (log_path) gasopt::write_train_log(result.log, log_path);
    if (summary) {
      std::memset(summary, 0, sizeof(*summary));
      summary->numeraire = result.numeraire;
      summary->best_epoch = result.best_epoch;
      summary->diverged = result.diverged ? 1 : 0;
      summary->skipped_steps = result.skipped_steps;
      summary->saturated_episodes = result.saturated_episodes;
      if (!result.log.empty()) {
        summary->final_train_loss = result.log.back().train_loss;
        summary->final_val_loss = result.log.back().val_loss;
        summary->final_val_mean_pnl = result.log.back().val_mean_pnl;
      }
    }
    *out = new gasopt_policy{std::move(result.policy)};
  });
}

gasopt_status gasopt_policy_save(const gasopt_policy* p, const char* path) {
  return wrap([&] {
    check(p != nullptr, "policy handle is NULL");
    check(path != nullptr, "path is NULL");
    gasopt::save_policy(p->impl, path);
  });
}

gasopt_status gasopt_policy_load(const char* path, gasopt_policy** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    check(path != nullptr, "path is NULL");
    *out = new gasopt_policy{gasopt::load_policy(path)};
  });
}

gasopt_status gasopt_policy_info(const gasopt_policy* p, gasopt_model* model, int32_t* days,
                                 int64_t* param_count) {
  return wrap([&] {
    check(p != nullptr, "policy handle is NULL");
    if (model)
      *model = p->impl.model == gasopt::ModelKind::smod ? GASOPT_MODEL_SPOT
                                                        : GASOPT_MODEL_SPOT_FORWARD;
    if (days) *days = p->impl.days();
    if (param_count) *param_count = p->impl.param_count();
  });
}

void gasopt_policy_free(gasopt_policy* p) { delete p; }

gasopt_status gasopt_policy_evaluate(const gasopt_policy* p, const gasopt_scenarios* s,
                                     const gasopt_storage* st, int64_t row_begin, int64_t row_end,
                                     gasopt_eval** out) {
  return wrap([&] {
    check(p != nullptr, "policy handle is NULL");
    check(s != nullptr, "scenarios handle is NULL");
    check(st != nullptr, "storage handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    *out = new gasopt_eval{gasopt::evaluate_policy(p->impl, s->impl, st->impl, row_begin, row_end)};
  });
}

/* ---- regression benchmark ------------------------------------------------ */

void gasopt_lsmc_config_init(gasopt_lsmc_config* cfg) {
  if (!cfg) return;
  gasopt::LsmcConfig d;
  cfg->storage_grid = d.storage_grid;
  cfg->action_grid = d.action_grid;
  cfg->basis_degree = d.basis_degree;
  cfg->regularization = d.regularization;
  cfg->train_count = d.train_count;
}

gasopt_status gasopt_lsmc_solve(const gasopt_scenarios* s, const gasopt_storage* st,
                                const gasopt_lsmc_config* cfg, gasopt_lsmc** out,
                                int32_t* regularization_bumps) {
  return wrap([&] {
    check(s != nullptr, "scenarios handle is NULL");
    check(st != nullptr, "storage handle is NULL");
    check(cfg != nullptr, "config pointer is NULL");
    check(out != nullptr, "output pointer is NULL");
    gasopt::LsmcConfig c;
    c.storage_grid = cfg->storage_grid;
    c.action_grid = cfg->action_grid;
    c.basis_degree = cfg->basis_degree;
    c.regularization = cfg->regularization;
    c.train_count = cfg->train_count;
    auto result = gasopt::lsmc_solve(s->impl, st->impl, c);
    if (regularization_bumps) *regularization_bumps = result.regularization_bumps;
    *out = new gasopt_lsmc{std::move(result.policy)};
  });
}

gasopt_status gasopt_lsmc_evaluate(const gasopt_lsmc* rule, const gasopt_scenarios* s,
                                   const gasopt_storage* st, int64_t row_begin, int64_t row_end,
                                   gasopt_eval** out) {
  return wrap([&] {
    check(rule != nullptr, "exercise-rule handle is NULL");
    check(s != nullptr, "scenarios handle is NULL");
    check(st != nullptr, "storage handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    *out =
        new gasopt_eval{gasopt::lsmc_evaluate(rule->impl, s->impl, st->impl, row_begin, row_end)};
  });
}

gasopt_status gasopt_lsmc_save(const gasopt_lsmc* rule, const char* path) {
  return wrap([&] {
    check(rule != nullptr, "exercise-rule handle is NULL");
    check(path != nullptr, "path is NULL");
    gasopt::save_lsmc(rule->impl, path);
  });
}

gasopt_status gasopt_lsmc_load(const char* path, gasopt_lsmc** out) {
  return wrap([&] {
    check(out != nullptr, "output pointer is NULL");
    check(path != nullptr, "path is NULL");
    *out = new gasopt_lsmc{gasopt::load_lsmc(path)};
  });
}

void gasopt_lsmc_free(gasopt_lsmc* rule) { delete rule; }

/* ---- evaluation results and reports -------------------------------------- */

gasopt_status gasopt_eval_info(const gasopt_eval* e, int64_t* rows, int32_t* days,
                               int64_t* forced_episodes, double* max_violation) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    if (rows) *rows = e->impl.rows;
    if (days) *days = e->impl.days;
    if (forced_episodes) *forced_episodes = e->impl.forced_episodes;
    if (max_violation) *max_violation = e->impl.max_violation;
  });
}

gasopt_status gasopt_eval_stats(const gasopt_eval* e, double* mean, double* median,
                                double* stddev) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    auto stats = gasopt::summarize(e->impl.pnl);
    if (mean) *mean = stats.mean;
    if (median) *median = stats.median;
    if (stddev) *stddev = stats.stddev;
  });
}

gasopt_status gasopt_eval_pnl(const gasopt_eval* e, double* out, int64_t rows) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    check(rows == e->impl.rows, "output length must equal the row count");
    std::copy(e->impl.pnl.begin(), e->impl.pnl.end(), out);
  });
}

gasopt_status gasopt_eval_fills(const gasopt_eval* e, int64_t row, double* out, int32_t len) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    check(out != nullptr, "output pointer is NULL");
    check(row >= 0 && row < e->impl.rows, "row out of range");
    check(len == e->impl.days + 1, "output length must equal days + 1");
    auto r = e->impl.fill_row(row);
    std::copy(r.begin(), r.end(), out);
  });
}

gasopt_status gasopt_eval_report_json(const gasopt_eval* e, const char* label, double capacity,
                                      int32_t histogram_bins, const char* path) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    check(label != nullptr, "label is NULL");
    check(path != nullptr, "path is NULL");
    auto report = gasopt::make_report(label, e->impl, capacity, histogram_bins);
    gasopt::write_report_json(report, path);
  });
}

gasopt_status gasopt_eval_report_csv(const gasopt_eval* e, const char* label, double capacity,
                                     int32_t histogram_bins, const char* pnl_path,
                                     const char* fill_path, const char* histogram_path) {
  return wrap([&] {
    check(e != nullptr, "evaluation handle is NULL");
    check(label != nullptr, "label is NULL");
    auto report = gasopt::make_report(label, e->impl, capacity, histogram_bins);
    if (pnl_path) gasopt::write_pnl_csv(report, pnl_path);
    if (fill_path) gasopt::write_fill_csv(report, fill_path);
    if (histogram_path) gasopt::write_histogram_csv(report, histogram_path);
  });
}

gasopt_status gasopt_compare_write(const gasopt_eval* const* evals, const char* const* labels,
                                   int32_t count, double capacity, int32_t histogram_bins,
                                   const char* csv_path, const char* json_path) {
  return wrap([&] {
    check(evals != nullptr && labels != nullptr, "input pointers are NULL");
    check(count >= 1, "need at least one evaluation");
    std::vector<gasopt::PnLReport> reports;
    reports.reserve(static_cast<std::size_t>(count));
    for (int32_t i = 0; i < count; ++i) {
      check(evals[i] != nullptr, "evaluation handle is NULL");
      check(labels[i] != nullptr, "label is NULL");
      reports.push_back(gasopt::make_report(labels[i], evals[i]->impl, capacity, histogram_bins));
    }
    if (csv_path) gasopt::write_compare_csv(reports, csv_path);
    if (json_path) gasopt::write_compare_json(reports, json_path);
  });
}

void gasopt_eval_free(gasopt_eval* e) { delete e; }

}  // extern "C"
