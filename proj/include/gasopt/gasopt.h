/* gasopt: gas-storage trading policies (neural + regression benchmark).
 *
 * Plain-C surface over the C++ core. All objects are opaque handles created
 * by gasopt_*_ functions and released with the matching *_free. Functions
 * return GASOPT_OK or an error status; gasopt_last_error() describes the most
 * recent failure on the calling thread. Out-parameters are written only on
 * success. NULL is always a valid argument to the *_free functions.
 *
 * Parallel sections honor the GASOPT_THREADS environment variable (read per
 * call); results are independent of the thread count.
 */
#ifndef GASOPT_H
#define GASOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GASOPT_API __declspec(dllexport)
#else
#define GASOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gasopt_status {
  GASOPT_OK = 0,
  GASOPT_ERR_INVALID_ARGUMENT = 1,
  GASOPT_ERR_IO = 2,
  GASOPT_ERR_PARSE = 3,
  GASOPT_ERR_INFEASIBLE = 4,
  GASOPT_ERR_NUMERIC = 5,
  GASOPT_ERR_INTERNAL = 6
} gasopt_status;

typedef enum gasopt_model {
  GASOPT_MODEL_SPOT = 0,         /* spot trading only */
  GASOPT_MODEL_SPOT_FORWARD = 1  /* spot + rolling front-month forward */
} gasopt_model;

typedef struct gasopt_scenarios gasopt_scenarios; /* simulated/ingested price paths */
typedef struct gasopt_storage gasopt_storage;     /* storage contract */
typedef struct gasopt_policy gasopt_policy;       /* trained network policy */
typedef struct gasopt_lsmc gasopt_lsmc;           /* regression exercise rule */
typedef struct gasopt_eval gasopt_eval;           /* per-scenario evaluation result */

GASOPT_API const char* gasopt_version(void);

/* Message for the last failing call on this thread; empty string if none. */
GASOPT_API const char* gasopt_last_error(void);

/* ---- market scenarios ---------------------------------------------------- */

typedef struct gasopt_market_params {
  double seasonal_level;
  double seasonal_amplitude;
  double seasonal_phase;         /* day of the seasonal peak */
  double mean_reversion_speed;   /* per day */
  double volatility;             /* per sqrt(day) */
  double initial_log_deviation;
} gasopt_market_params;

GASOPT_API void gasopt_market_params_init(gasopt_market_params* p);

/* Seasonal exponential-OU spot paths; per-scenario seeded substreams.
 * month_starts lists first days of delivery months (month_starts[0] == 0). */
GASOPT_API gasopt_status gasopt_scenarios_generate(const gasopt_market_params* params,
                                                   int64_t scenarios, int32_t days,
                                                   const int32_t* month_starts,
                                                   int32_t month_count, uint64_t seed,
                                                   gasopt_scenarios** out);

/* CSV matrix, one scenario per row, days columns. */
GASOPT_API gasopt_status gasopt_scenarios_from_csv(const char* path, int32_t has_header,
                                                   const int32_t* month_starts,
                                                   int32_t month_count, gasopt_scenarios** out);

GASOPT_API gasopt_status gasopt_scenarios_to_csv(const gasopt_scenarios* s, const char* path);

/* Fills per-month forward quotes consistent with the spot model. */
GASOPT_API gasopt_status gasopt_scenarios_build_forwards(gasopt_scenarios* s,
                                                         const gasopt_market_params* params);

GASOPT_API gasopt_status gasopt_scenarios_info(const gasopt_scenarios* s, int64_t* scenarios,
                                               int32_t* days, int32_t* months,
                                               int32_t* has_forwards);

/* Copies spot row `row` into out[0..days). */
GASOPT_API gasopt_status gasopt_scenarios_spot(const gasopt_scenarios* s, int64_t row, double* out,
                                               int32_t days);

/* Front-month quote observable on (row, day); delivery_month/-days optional. */
GASOPT_API gasopt_status gasopt_scenarios_front_month(const gasopt_scenarios* s, int64_t row,
                                                      int32_t day, int32_t* delivery_month,
                                                      int32_t* delivery_days, double* price,
                                                      int32_t* available);

GASOPT_API void gasopt_scenarios_free(gasopt_scenarios* s);

/* ---- storage contract ---------------------------------------------------- */

GASOPT_API gasopt_status gasopt_storage_create(int32_t days, double capacity, double kappa,
                                               double overhead, double alpha,
                                               const double* withdrawal_max,
                                               const double* injection_max,
                                               const int32_t* month_starts, int32_t month_count,
                                               gasopt_storage** out);

/* Reference two-regime facility: K=351, c=250000, withdrawal -600 then -3072
 * (after day 170), injection 2808 then 408 (after day 200), 30-day months. */
GASOPT_API gasopt_status gasopt_storage_reference_preset(double alpha, double kappa, double overhead,
                                                     gasopt_storage** out);

GASOPT_API gasopt_status gasopt_storage_info(const gasopt_storage* st, int32_t* days,
                                             double* capacity, int32_t* months);

/* Merged spot bounds at (level, day) given the running delivery rate. */
GASOPT_API gasopt_status gasopt_storage_bounds(const gasopt_storage* st, double level, int32_t day,
                                               double delivery, double* lo, double* hi);

GASOPT_API gasopt_status gasopt_storage_terminal_reachable(const gasopt_storage* st, double level,
                                                           int32_t day, int32_t* reachable);

/* First day whose remaining drain capacity falls below the capacity; -1 if never. */
GASOPT_API gasopt_status gasopt_storage_crossing_day(const gasopt_storage* st, int32_t* day);

GASOPT_API void gasopt_storage_free(gasopt_storage* st);

/* ---- network policy training --------------------------------------------- */

typedef struct gasopt_train_config {
  int32_t epochs;
  int32_t batch_size;
  double learning_rate;
  double risk_aversion;
  int64_t train_count;       /* leading scenario rows used for fitting */
  int64_t validation_count;  /* rows following the training block */
  uint64_t seed;
  double penalty_weight;     /* numeraire units per MWh of infeasibility */
  double numeraire;          /* 0 = capacity * mean training spot */
  int32_t hidden_count;      /* entries used in hidden_sizes */
  int32_t hidden_sizes[8];
  int32_t keep_best;         /* return the best-validation checkpoint */
  double alpha;              /* forward liquidity fraction used while training
                                the spot+forward model; overrides the storage
                                handle's alpha for the training episodes */
} gasopt_train_config;

GASOPT_API void gasopt_train_config_init(gasopt_model model, gasopt_train_config* cfg);

typedef struct gasopt_train_summary {
  double numeraire;
  int32_t best_epoch; /* 1-based; -1 when unused */
  int32_t diverged;
  int32_t skipped_steps;
  int64_t saturated_episodes;
  double final_train_loss;
  double final_val_loss;
  double final_val_mean_pnl;
} gasopt_train_summary;

/* Trains a policy; optionally writes a per-epoch jsonl log to log_path and a
 * run summary into *summary (both may be NULL). */
GASOPT_API gasopt_status gasopt_train(gasopt_model model, const gasopt_scenarios* s,
                                      const gasopt_storage* st, const gasopt_train_config* cfg,
                                      const char* log_path, gasopt_policy** out,
                                      gasopt_train_summary* summary);

GASOPT_API gasopt_status gasopt_policy_save(const gasopt_policy* p, const char* path);
GASOPT_API gasopt_status gasopt_policy_load(const char* path, gasopt_policy** out);
GASOPT_API gasopt_status gasopt_policy_info(const gasopt_policy* p, gasopt_model* model,
                                            int32_t* days, int64_t* param_count);
GASOPT_API void gasopt_policy_free(gasopt_policy* p);

/* Replays the policy on scenario rows [row_begin, row_end); row_end = -1
 * means all rows. */
GASOPT_API gasopt_status gasopt_policy_evaluate(const gasopt_policy* p, const gasopt_scenarios* s,
                                                const gasopt_storage* st, int64_t row_begin,
                                                int64_t row_end, gasopt_eval** out);

/* ---- regression benchmark ------------------------------------------------ */

typedef struct gasopt_lsmc_config {
  int32_t storage_grid;
  int32_t action_grid;
  int32_t basis_degree;
  double regularization; /* 0 switches the fit to min-norm least squares */
  int64_t train_count;   /* rows used for the fit; -1 = all */
} gasopt_lsmc_config;

GASOPT_API void gasopt_lsmc_config_init(gasopt_lsmc_config* cfg);

GASOPT_API gasopt_status gasopt_lsmc_solve(const gasopt_scenarios* s, const gasopt_storage* st,
                                           const gasopt_lsmc_config* cfg, gasopt_lsmc** out,
                                           int32_t* regularization_bumps);

GASOPT_API gasopt_status gasopt_lsmc_evaluate(const gasopt_lsmc* rule, const gasopt_scenarios* s,
                                              const gasopt_storage* st, int64_t row_begin,
                                              int64_t row_end, gasopt_eval** out);

GASOPT_API gasopt_status gasopt_lsmc_save(const gasopt_lsmc* rule, const char* path);
GASOPT_API gasopt_status gasopt_lsmc_load(const char* path, gasopt_lsmc** out);
GASOPT_API void gasopt_lsmc_free(gasopt_lsmc* rule);

/* ---- evaluation results and reports -------------------------------------- */

GASOPT_API gasopt_status gasopt_eval_info(const gasopt_eval* e, int64_t* rows, int32_t* days,
                                          int64_t* forced_episodes, double* max_violation);

GASOPT_API gasopt_status gasopt_eval_stats(const gasopt_eval* e, double* mean, double* median,
                                           double* stddev);

/* Copies the per-scenario P&L vector into out[0..rows). */
GASOPT_API gasopt_status gasopt_eval_pnl(const gasopt_eval* e, double* out, int64_t rows);

/* Copies the fill-level path of one row into out[0..days]. */
GASOPT_API gasopt_status gasopt_eval_fills(const gasopt_eval* e, int64_t row, double* out,
                                           int32_t len);

/* Full report (statistics, histogram, fill fan) as stable versioned JSON. */
GASOPT_API gasopt_status gasopt_eval_report_json(const gasopt_eval* e, const char* label,
                                                 double capacity, int32_t histogram_bins,
                                                 const char* path);

/* CSV artifacts; any of the three paths may be NULL to skip it. */
GASOPT_API gasopt_status gasopt_eval_report_csv(const gasopt_eval* e, const char* label,
                                                double capacity, int32_t histogram_bins,
                                                const char* pnl_path, const char* fill_path,
                                                const char* histogram_path);

/* Side-by-side summary of several evaluations (CSV and/or JSON; NULL skips). */
GASOPT_API gasopt_status gasopt_compare_write(const gasopt_eval* const* evals,
                                              const char* const* labels, int32_t count,
                                              double capacity, int32_t histogram_bins,
                                              const char* csv_path, const char* json_path);

GASOPT_API void gasopt_eval_free(gasopt_eval* e);

#ifdef __cplusplus
}
#endif

#endif /* GASOPT_H */
