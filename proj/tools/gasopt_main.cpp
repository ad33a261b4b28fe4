// Command-line front end. Orchestration only: every numerical operation goes
// through the public C API, config and artifact plumbing lives here.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gasopt/gasopt.h"

namespace {

using nlohmann::json;

struct ScenariosDeleter {
  void operator()(gasopt_scenarios* p) const { gasopt_scenarios_free(p); }
};
struct StorageDeleter {
  void operator()(gasopt_storage* p) const { gasopt_storage_free(p); }
};
struct PolicyDeleter {
  void operator()(gasopt_policy* p) const { gasopt_policy_free(p); }
};
struct LsmcDeleter {
  void operator()(gasopt_lsmc* p) const { gasopt_lsmc_free(p); }
};
struct EvalDeleter {
  void operator()(gasopt_eval* p) const { gasopt_eval_free(p); }
};

using ScenariosPtr = std::unique_ptr<gasopt_scenarios, ScenariosDeleter>;
using StoragePtr = std::unique_ptr<gasopt_storage, StorageDeleter>;
using PolicyPtr = std::unique_ptr<gasopt_policy, PolicyDeleter>;
using LsmcPtr = std::unique_ptr<gasopt_lsmc, LsmcDeleter>;
using EvalPtr = std::unique_ptr<gasopt_eval, EvalDeleter>;

[[noreturn]] void die(const std::string& what) {
  std::cerr << "error: " << what << "\n";
  std::exit(1);
}

void ok_or_die(gasopt_status st, const std::string& context) {
  if (st != GASOPT_OK) die(context + ": " + gasopt_last_error());
}

// ---- configuration -------------------------------------------------------

struct ScenarioSource {
  bool from_csv = false;
  std::string csv_path;
  bool has_header = false;
  std::int64_t count = 1000;
  gasopt_market_params market{};
  bool with_forwards = false;
  bool with_forwards_set = false;
};

struct StorageConfig {
  bool preset = true;
  double alpha = 0.0;
  bool alpha_set = false;
  double kappa = 0.0;
  double overhead = 0.0;
  int days = 0;  // inline fields; preset ignores them
  double capacity = 0.0;
  std::vector<double> withdrawal_max;
  std::vector<double> injection_max;
  std::vector<int> month_starts;
};

struct CompareRun {
  std::string label;
  std::string policy_path;  // exactly one of the two paths is set
  std::string lsmc_path;
};

struct AppConfig {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::string model = "smod";  // smod | sfmod | lsmc
  std::string label;           // defaults to the model name
  int histogram_bins = 30;
  ScenarioSource scenarios;
  StorageConfig storage;
  gasopt_train_config train{};
  gasopt_lsmc_config lsmc{};
  std::string checkpoint;  // evaluate input
  std::int64_t eval_row_begin = 0;
  std::int64_t eval_row_end = -1;
  std::vector<CompareRun> runs;

  bool train_counts_set = false;
  bool train_alpha_set = false;
  bool lsmc_train_count_set = false;
};

std::vector<int> default_month_starts(int days) {
  std::vector<int> starts;
  for (int n = 0; n + 21 <= days; n += 30) starts.push_back(n);
  if (starts.empty()) starts.push_back(0);
  return starts;
}

// Accumulating getters: every violated field ends up in `errors`.
template <class T>
void read_field(const json& j, const std::string& scope, const char* key, T& out,
                std::vector<std::string>& errors) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(scope + key + ": wrong type");
  }
}

void read_bounds_field(const json& j, const std::string& scope, const char* key,
                       std::vector<double>& out, int days, std::vector<std::string>& errors) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if (v.is_number()) {
      out.assign(static_cast<std::size_t>(days > 0 ? days : 1), v.get<double>());
    } else {
      out = v.get<std::vector<double>>();
    }
  } catch (const json::exception&) {
    errors.push_back(scope + key + ": expected a number or an array of numbers");
  }
}

void parse_market(const json& j, const std::string& scope, gasopt_market_params& m,
                  std::vector<std::string>& errors) {
  read_field(j, scope, "seasonal_level", m.seasonal_level, errors);
  read_field(j, scope, "seasonal_amplitude", m.seasonal_amplitude, errors);
  read_field(j, scope, "seasonal_phase", m.seasonal_phase, errors);
  read_field(j, scope, "mean_reversion_speed", m.mean_reversion_speed, errors);
  read_field(j, scope, "volatility", m.volatility, errors);
  read_field(j, scope, "initial_log_deviation", m.initial_log_deviation, errors);
}

void parse_config_json(const json& j, AppConfig& cfg, std::vector<std::string>& errors) {
  read_field(j, "", "out_dir", cfg.out_dir, errors);
  read_field(j, "", "seed", cfg.seed, errors);
  read_field(j, "", "model", cfg.model, errors);
  read_field(j, "", "label", cfg.label, errors);
  read_field(j, "", "histogram_bins", cfg.histogram_bins, errors);

  if (j.contains("scenarios")) {
    const json& s = j.at("scenarios");
    bool has_gen = s.contains("generate");
    bool has_csv = s.contains("csv");
    if (has_gen == has_csv) {
      errors.push_back("scenarios: exactly one of `generate` or `csv` must be present");
    } else if (has_csv) {
      cfg.scenarios.from_csv = true;
      const json& c = s.at("csv");
      read_field(c, "scenarios.csv.", "path", cfg.scenarios.csv_path, errors);
      read_field(c, "scenarios.csv.", "has_header", cfg.scenarios.has_header, errors);
      if (cfg.scenarios.csv_path.empty())
        errors.push_back("scenarios.csv.path: required");
    } else {
      const json& g = s.at("generate");
      read_field(g, "scenarios.generate.", "count", cfg.scenarios.count, errors);
      if (g.contains("market"))
        parse_market(g.at("market"), "scenarios.generate.market.", cfg.scenarios.market, errors);
      if (g.contains("with_forwards")) {
        read_field(g, "scenarios.generate.", "with_forwards", cfg.scenarios.with_forwards, errors);
        cfg.scenarios.with_forwards_set = true;
      }
    }
  }

  if (j.contains("storage")) {
    const json& s = j.at("storage");
    std::string preset;
    read_field(s, "storage.", "preset", preset, errors);
    if (!preset.empty() && preset != "reference")
      errors.push_back("storage.preset: unknown preset `" + preset + "` (expected `reference`)");
    cfg.storage.preset = !s.contains("days");
    cfg.storage.alpha_set = s.contains("alpha");
    read_field(s, "storage.", "alpha", cfg.storage.alpha, errors);
    read_field(s, "storage.", "kappa", cfg.storage.kappa, errors);
    read_field(s, "storage.", "overhead", cfg.storage.overhead, errors);
    if (!cfg.storage.preset) {
      read_field(s, "storage.", "days", cfg.storage.days, errors);
      read_field(s, "storage.", "capacity", cfg.storage.capacity, errors);
      read_bounds_field(s, "storage.", "withdrawal_max", cfg.storage.withdrawal_max,
                        cfg.storage.days, errors);
      read_bounds_field(s, "storage.", "injection_max", cfg.storage.injection_max,
                        cfg.storage.days, errors);
      read_field(s, "storage.", "month_starts", cfg.storage.month_starts, errors);
      if (cfg.storage.days <= 0) errors.push_back("storage.days: must be positive");
      if (cfg.storage.capacity <= 0) errors.push_back("storage.capacity: must be positive");
      if (cfg.storage.withdrawal_max.empty())
        errors.push_back("storage.withdrawal_max: required for inline storage");
      if (cfg.storage.injection_max.empty())
        errors.push_back("storage.injection_max: required for inline storage");
    }
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    read_field(t, "train.", "epochs", cfg.train.epochs, errors);
    read_field(t, "train.", "batch_size", cfg.train.batch_size, errors);
    read_field(t, "train.", "learning_rate", cfg.train.learning_rate, errors);
    read_field(t, "train.", "risk_aversion", cfg.train.risk_aversion, errors);
    if (t.contains("train_count") || t.contains("validation_count")) cfg.train_counts_set = true;
    read_field(t, "train.", "train_count", cfg.train.train_count, errors);
    read_field(t, "train.", "validation_count", cfg.train.validation_count, errors);
    read_field(t, "train.", "penalty_weight", cfg.train.penalty_weight, errors);
    read_field(t, "train.", "numeraire", cfg.train.numeraire, errors);
    read_field(t, "train.", "keep_best", cfg.train.keep_best, errors);
    cfg.train_alpha_set = t.contains("alpha");
    read_field(t, "train.", "alpha", cfg.train.alpha, errors);
    if (t.contains("hidden")) {
      std::vector<int> hidden;
      read_field(t, "train.", "hidden", hidden, errors);
      if (hidden.size() > 8) {
        errors.push_back("train.hidden: at most 8 layers");
      } else {
        cfg.train.hidden_count = static_cast<int32_t>(hidden.size());
        for (std::size_t i = 0; i < hidden.size(); ++i)
          cfg.train.hidden_sizes[i] = hidden[i];
      }
    }
  }

  if (j.contains("lsmc")) {
    const json& l = j.at("lsmc");
    read_field(l, "lsmc.", "storage_grid", cfg.lsmc.storage_grid, errors);
    read_field(l, "lsmc.", "action_grid", cfg.lsmc.action_grid, errors);
    read_field(l, "lsmc.", "basis_degree", cfg.lsmc.basis_degree, errors);
    read_field(l, "lsmc.", "regularization", cfg.lsmc.regularization, errors);
    if (l.contains("train_count")) cfg.lsmc_train_count_set = true;
    read_field(l, "lsmc.", "train_count", cfg.lsmc.train_count, errors);
  }

  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    read_field(e, "evaluate.", "checkpoint", cfg.checkpoint, errors);
    read_field(e, "evaluate.", "row_begin", cfg.eval_row_begin, errors);
    read_field(e, "evaluate.", "row_end", cfg.eval_row_end, errors);
  }

  if (j.contains("compare")) {
    const json& c = j.at("compare");
    read_field(c, "compare.", "row_begin", cfg.eval_row_begin, errors);
    read_field(c, "compare.", "row_end", cfg.eval_row_end, errors);
    if (c.contains("runs")) {
      for (std::size_t i = 0; i < c.at("runs").size(); ++i) {
        const json& r = c.at("runs")[i];
        std::string scope = "compare.runs[" + std::to_string(i) + "].";
        CompareRun run;
        read_field(r, scope, "label", run.label, errors);
        read_field(r, scope, "policy", run.policy_path, errors);
        read_field(r, scope, "lsmc", run.lsmc_path, errors);
        if (run.label.empty()) errors.push_back(scope + "label: required");
        if (run.policy_path.empty() == run.lsmc_path.empty())
          errors.push_back(scope + "policy/lsmc: exactly one checkpoint path required");
        cfg.runs.push_back(std::move(run));
      }
    }
  }
}

void validate_config(const AppConfig& cfg, std::vector<std::string>& errors) {
  if (cfg.model != "smod" && cfg.model != "sfmod" && cfg.model != "lsmc")
    errors.push_back("model: must be one of smod, sfmod, lsmc");
  if (cfg.histogram_bins < 1) errors.push_back("histogram_bins: must be >= 1");
  if (!cfg.scenarios.from_csv && cfg.scenarios.count < 1)
    errors.push_back("scenarios.generate.count: must be >= 1");
  if (cfg.storage.alpha < 0.0 || cfg.storage.alpha > 1.0)
    errors.push_back("storage.alpha: must lie in [0, 1]");
  if (cfg.train.epochs < 1) errors.push_back("train.epochs: must be >= 1");
  if (cfg.train.batch_size < 1) errors.push_back("train.batch_size: must be >= 1");
  if (!(cfg.train.learning_rate > 0.0)) errors.push_back("train.learning_rate: must be positive");
  if (!(cfg.train.risk_aversion > 0.0)) errors.push_back("train.risk_aversion: must be positive");
  if (cfg.train.penalty_weight < 0.0) errors.push_back("train.penalty_weight: must be >= 0");
  if (cfg.train.alpha < 0.0 || cfg.train.alpha > 1.0)
    errors.push_back("train.alpha: must lie in [0, 1]");
  if (cfg.lsmc.storage_grid < 2) errors.push_back("lsmc.storage_grid: must be >= 2");
  if (cfg.lsmc.action_grid < 2) errors.push_back("lsmc.action_grid: must be >= 2");
  if (cfg.lsmc.basis_degree < 0) errors.push_back("lsmc.basis_degree: must be >= 0");
  if (cfg.lsmc.regularization < 0.0) errors.push_back("lsmc.regularization: must be >= 0");
}

// ---- object construction through the C API --------------------------------

StoragePtr build_storage(const AppConfig& cfg) {
  gasopt_storage* st = nullptr;
  if (cfg.storage.preset) {
    ok_or_die(gasopt_storage_reference_preset(cfg.storage.alpha, cfg.storage.kappa,
                                          cfg.storage.overhead, &st),
              "storage preset");
  } else {
    const StorageConfig& s = cfg.storage;
    std::vector<double> wmax = s.withdrawal_max;
    std::vector<double> imax = s.injection_max;
    if (wmax.size() == 1) wmax.assign(static_cast<std::size_t>(s.days), wmax[0]);
    if (imax.size() == 1) imax.assign(static_cast<std::size_t>(s.days), imax[0]);
    std::vector<int> months = s.month_starts.empty() ? default_month_starts(s.days)
                                                     : s.month_starts;
    std::vector<int32_t> months32(months.begin(), months.end());
    ok_or_die(gasopt_storage_create(s.days, s.capacity, s.kappa, s.overhead, s.alpha, wmax.data(),
                                    imax.data(), months32.data(),
                                    static_cast<int32_t>(months32.size()), &st),
              "storage");
  }
  return StoragePtr(st);
}

ScenariosPtr build_scenarios(const AppConfig& cfg, const StoragePtr& storage, bool need_forwards) {
  int32_t days = 0;
  int32_t months = 0;
  ok_or_die(gasopt_storage_info(storage.get(), &days, nullptr, &months), "storage info");
  std::vector<int32_t> month_starts;
  if (cfg.storage.preset) {
    month_starts.resize(static_cast<std::size_t>(months));
    for (int m = 0; m < months; ++m) month_starts[static_cast<std::size_t>(m)] = 30 * m;
  } else if (!cfg.storage.month_starts.empty()) {
    month_starts.assign(cfg.storage.month_starts.begin(), cfg.storage.month_starts.end());
  } else {
    auto def = default_month_starts(days);
    month_starts.assign(def.begin(), def.end());
  }

  gasopt_scenarios* s = nullptr;
  if (cfg.scenarios.from_csv) {
    ok_or_die(gasopt_scenarios_from_csv(cfg.scenarios.csv_path.c_str(),
                                        cfg.scenarios.has_header ? 1 : 0, month_starts.data(),
                                        static_cast<int32_t>(month_starts.size()), &s),
              "scenario csv " + cfg.scenarios.csv_path);
  } else {
    ok_or_die(gasopt_scenarios_generate(&cfg.scenarios.market, cfg.scenarios.count, days,
                                        month_starts.data(),
                                        static_cast<int32_t>(month_starts.size()), cfg.seed, &s),
              "scenario generation");
  }
  ScenariosPtr sp(s);

  bool want_forwards =
      cfg.scenarios.with_forwards_set ? cfg.scenarios.with_forwards : need_forwards;
  if (want_forwards) {
    int32_t has = 0;
    ok_or_die(gasopt_scenarios_info(sp.get(), nullptr, nullptr, nullptr, &has), "scenario info");
    if (!has)
      ok_or_die(gasopt_scenarios_build_forwards(sp.get(), &cfg.scenarios.market),
                "forward curve construction");
  }
  return sp;
}

void write_reports(const EvalPtr& eval, const std::string& label, double capacity, int bins,
                   const std::filesystem::path& dir, const std::string& stem) {
  ok_or_die(gasopt_eval_report_json(eval.get(), label.c_str(), capacity, bins,
                                    (dir / (stem + "_report.json")).string().c_str()),
            "report json");
  ok_or_die(gasopt_eval_report_csv(eval.get(), label.c_str(), capacity, bins,
                                   (dir / (stem + "_pnl.csv")).string().c_str(),
                                   (dir / (stem + "_fill.csv")).string().c_str(),
                                   (dir / (stem + "_hist.csv")).string().c_str()),
            "report csv");
}

void print_stats(const std::string& label, const EvalPtr& eval) {
  double mean = 0, median = 0, stddev = 0;
  int64_t rows = 0, forced = 0;
  double max_violation = 0;
  ok_or_die(gasopt_eval_stats(eval.get(), &mean, &median, &stddev), "stats");
  ok_or_die(gasopt_eval_info(eval.get(), &rows, nullptr, &forced, &max_violation), "eval info");
  std::printf("%s: scenarios=%lld mean=%.6g median=%.6g std=%.6g", label.c_str(),
              static_cast<long long>(rows), mean, median, stddev);
  if (forced > 0)
    std::printf(" forced=%lld max_violation=%.3g", static_cast<long long>(forced), max_violation);
  std::printf("\n");
}

// Shrinks the default 900/100 split onto small scenario sets; explicit config
// values are taken literally.
void fit_split_to_rows(const AppConfig& cfg, gasopt_train_config& tc, int64_t rows) {
  if (!cfg.train_counts_set && tc.train_count + tc.validation_count > rows) {
    tc.validation_count = rows / 10;
    tc.train_count = rows - tc.validation_count;
  }
}

// ---- subcommands ----------------------------------------------------------

int cmd_simulate(const AppConfig& cfg) {
  auto storage = build_storage(cfg);
  auto scenarios = build_scenarios(cfg, storage, cfg.model == "sfmod");
  std::filesystem::create_directories(cfg.out_dir);
  auto path = std::filesystem::path(cfg.out_dir) / "scenarios.csv";
  ok_or_die(gasopt_scenarios_to_csv(scenarios.get(), path.string().c_str()), "scenario export");
  int64_t count = 0;
  int32_t days = 0;
  ok_or_die(gasopt_scenarios_info(scenarios.get(), &count, &days, nullptr, nullptr), "info");
  std::printf("wrote %lld scenarios x %d days to %s\n", static_cast<long long>(count), days,
              path.string().c_str());
  return 0;
}

int cmd_train(const AppConfig& cfg) {
  if (cfg.model == "lsmc") die("train expects --model smod or sfmod");
  gasopt_model model = cfg.model == "sfmod" ? GASOPT_MODEL_SPOT_FORWARD : GASOPT_MODEL_SPOT;
  auto storage = build_storage(cfg);
  auto scenarios = build_scenarios(cfg, storage, model == GASOPT_MODEL_SPOT_FORWARD);

  gasopt_train_config tc = cfg.train;
  tc.seed = cfg.seed;
  int64_t rows = 0;
  ok_or_die(gasopt_scenarios_info(scenarios.get(), &rows, nullptr, nullptr, nullptr), "info");
  fit_split_to_rows(cfg, tc, rows);

  std::filesystem::create_directories(cfg.out_dir);
  auto dir = std::filesystem::path(cfg.out_dir);
  gasopt_policy* policy = nullptr;
  gasopt_train_summary summary{};
  ok_or_die(gasopt_train(model, scenarios.get(), storage.get(), &tc,
                         (dir / "train_log.jsonl").string().c_str(), &policy, &summary),
            "training");
  PolicyPtr pp(policy);
  ok_or_die(gasopt_policy_save(pp.get(), (dir / "checkpoint.json").string().c_str()),
            "checkpoint save");

  std::printf("numeraire=%.6g best_epoch=%d diverged=%d skipped_steps=%d saturated=%lld",
              summary.numeraire, summary.best_epoch, summary.diverged, summary.skipped_steps,
              static_cast<long long>(summary.saturated_episodes));
  if (model == GASOPT_MODEL_SPOT_FORWARD) std::printf(" alpha=%g", tc.alpha);
  std::printf("\n");

  int64_t row_begin = tc.validation_count > 0 ? tc.train_count : 0;
  int64_t row_end = tc.validation_count > 0 ? tc.train_count + tc.validation_count : -1;
  gasopt_eval* eval = nullptr;
  ok_or_die(gasopt_policy_evaluate(pp.get(), scenarios.get(), storage.get(), row_begin, row_end,
                                   &eval),
            "evaluation");
  EvalPtr ep(eval);
  double capacity = 0;
  ok_or_die(gasopt_storage_info(storage.get(), nullptr, &capacity, nullptr), "storage info");
  std::string label = cfg.label.empty() ? cfg.model : cfg.label;
  write_reports(ep, label, capacity, cfg.histogram_bins, dir, label);
  print_stats(label, ep);
  return 0;
}

int cmd_benchmark(const AppConfig& cfg) {
  auto storage = build_storage(cfg);
  auto scenarios = build_scenarios(cfg, storage, false);
  std::filesystem::create_directories(cfg.out_dir);
  auto dir = std::filesystem::path(cfg.out_dir);

  gasopt_lsmc_config lc = cfg.lsmc;
  if (!cfg.lsmc_train_count_set) {
    // Equal footing with the network by default: fit on the same leading rows
    // a training run would use. Set lsmc.train_count (-1 = all) to override.
    int64_t rows = 0;
    ok_or_die(gasopt_scenarios_info(scenarios.get(), &rows, nullptr, nullptr, nullptr), "info");
    gasopt_train_config tc = cfg.train;
    fit_split_to_rows(cfg, tc, rows);
    lc.train_count = std::min<int64_t>(tc.train_count, rows);
  }

  gasopt_lsmc* rule = nullptr;
  int32_t bumps = 0;
  ok_or_die(gasopt_lsmc_solve(scenarios.get(), storage.get(), &lc, &rule, &bumps),
            "benchmark solve");
  LsmcPtr rp(rule);
  ok_or_die(gasopt_lsmc_save(rp.get(), (dir / "lsmc_rule.json").string().c_str()), "rule save");
  if (bumps > 0) std::printf("regularization bumps: %d\n", bumps);

  gasopt_eval* eval = nullptr;
  ok_or_die(gasopt_lsmc_evaluate(rp.get(), scenarios.get(), storage.get(), cfg.eval_row_begin,
                                 cfg.eval_row_end, &eval),
            "benchmark evaluation");
  EvalPtr ep(eval);
  double capacity = 0;
  ok_or_die(gasopt_storage_info(storage.get(), nullptr, &capacity, nullptr), "storage info");
  std::string label = cfg.label.empty() ? "lsmc" : cfg.label;
  write_reports(ep, label, capacity, cfg.histogram_bins, dir, label);
  print_stats(label, ep);
  return 0;
}

int cmd_evaluate(const AppConfig& cfg) {
  if (cfg.checkpoint.empty()) die("evaluate requires evaluate.checkpoint in the config");
  auto storage = build_storage(cfg);
  auto scenarios = build_scenarios(cfg, storage, cfg.model == "sfmod");
  std::filesystem::create_directories(cfg.out_dir);
  auto dir = std::filesystem::path(cfg.out_dir);
  double capacity = 0;
  ok_or_die(gasopt_storage_info(storage.get(), nullptr, &capacity, nullptr), "storage info");

  EvalPtr ep;
  if (cfg.model == "lsmc") {
    gasopt_lsmc* rule = nullptr;
    ok_or_die(gasopt_lsmc_load(cfg.checkpoint.c_str(), &rule), "rule load");
    LsmcPtr rp(rule);
    gasopt_eval* eval = nullptr;
    ok_or_die(gasopt_lsmc_evaluate(rp.get(), scenarios.get(), storage.get(), cfg.eval_row_begin,
                                   cfg.eval_row_end, &eval),
              "evaluation");
    ep.reset(eval);
  } else {
    gasopt_policy* policy = nullptr;
    ok_or_die(gasopt_policy_load(cfg.checkpoint.c_str(), &policy), "checkpoint load");
    PolicyPtr pp(policy);
    gasopt_eval* eval = nullptr;
    ok_or_die(gasopt_policy_evaluate(pp.get(), scenarios.get(), storage.get(), cfg.eval_row_begin,
                                     cfg.eval_row_end, &eval),
              "evaluation");
    ep.reset(eval);
  }
  std::string label = cfg.label.empty() ? cfg.model : cfg.label;
  write_reports(ep, label, capacity, cfg.histogram_bins, dir, label);
  print_stats(label, ep);
  return 0;
}

int cmd_compare(const AppConfig& cfg) {
  if (cfg.runs.empty()) die("compare requires compare.runs in the config");
  auto storage = build_storage(cfg);
  bool any_policy = false;
  for (const auto& r : cfg.runs) any_policy |= !r.policy_path.empty();
  auto scenarios = build_scenarios(cfg, storage, any_policy && cfg.model == "sfmod");
  std::filesystem::create_directories(cfg.out_dir);
  auto dir = std::filesystem::path(cfg.out_dir);
  double capacity = 0;
  ok_or_die(gasopt_storage_info(storage.get(), nullptr, &capacity, nullptr), "storage info");

  std::vector<EvalPtr> evals;
  std::vector<std::string> labels;
  for (const auto& run : cfg.runs) {
    gasopt_eval* eval = nullptr;
    if (!run.policy_path.empty()) {
      gasopt_policy* policy = nullptr;
      ok_or_die(gasopt_policy_load(run.policy_path.c_str(), &policy),
                "checkpoint load " + run.policy_path);
      PolicyPtr pp(policy);
      gasopt_model model = GASOPT_MODEL_SPOT;
      ok_or_die(gasopt_policy_info(pp.get(), &model, nullptr, nullptr), "policy info");
      if (model == GASOPT_MODEL_SPOT_FORWARD) {
        int32_t has = 0;
        ok_or_die(gasopt_scenarios_info(scenarios.get(), nullptr, nullptr, nullptr, &has), "info");
        if (!has)
          ok_or_die(gasopt_scenarios_build_forwards(scenarios.get(), &cfg.scenarios.market),
                    "forward curve construction");
      }
      ok_or_die(gasopt_policy_evaluate(pp.get(), scenarios.get(), storage.get(),
                                       cfg.eval_row_begin, cfg.eval_row_end, &eval),
                "evaluation " + run.label);
    } else {
      gasopt_lsmc* rule = nullptr;
      ok_or_die(gasopt_lsmc_load(run.lsmc_path.c_str(), &rule), "rule load " + run.lsmc_path);
      LsmcPtr rp(rule);
      ok_or_die(gasopt_lsmc_evaluate(rp.get(), scenarios.get(), storage.get(), cfg.eval_row_begin,
                                     cfg.eval_row_end, &eval),
                "evaluation " + run.label);
    }
    evals.emplace_back(eval);
    labels.push_back(run.label);
  }

  for (std::size_t i = 0; i < evals.size(); ++i) {
    write_reports(evals[i], labels[i], capacity, cfg.histogram_bins, dir, labels[i]);
    print_stats(labels[i], evals[i]);
  }
  std::vector<const gasopt_eval*> raw;
  std::vector<const char*> raw_labels;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    raw.push_back(evals[i].get());
    raw_labels.push_back(labels[i].c_str());
  }
  ok_or_die(gasopt_compare_write(raw.data(), raw_labels.data(), static_cast<int32_t>(raw.size()),
                                 capacity, cfg.histogram_bins,
                                 (dir / "compare.csv").string().c_str(),
                                 (dir / "compare.json").string().c_str()),
            "comparison table");
  return 0;
}

// ---- option layering ------------------------------------------------------

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string model;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master RNG seed (overrides config)");
  cmd->add_option("--out", o.out_dir, "output directory (overrides config)");
  cmd->add_option("--model", o.model, "smod | sfmod | lsmc (overrides config)")
      ->check(CLI::IsMember({"smod", "sfmod", "lsmc"}));
  cmd->add_option("--alpha", o.alpha, "forward liquidity fraction (overrides config)");
  cmd->add_option("--preset", o.preset, "reference-smod | reference-sfmod quick-start configuration")
      ->check(CLI::IsMember({"reference-smod", "reference-sfmod"}));
}

AppConfig assemble_config(const CliOverrides& o) {
  AppConfig cfg;
  // Defaults first, then preset, then the config file, then flags.
  gasopt_market_params_init(&cfg.scenarios.market);
  gasopt_train_config_init(GASOPT_MODEL_SPOT, &cfg.train);
  gasopt_lsmc_config_init(&cfg.lsmc);

  if (!o.preset.empty()) {
    cfg.model = o.preset == "reference-sfmod" ? "sfmod" : "smod";
    cfg.storage.preset = true;
    cfg.storage.alpha = cfg.model == "sfmod" ? 0.1 : 0.0;
    cfg.scenarios.count = 1000;
  }

  std::vector<std::string> errors;
  json j;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in.good()) die("cannot open config: " + o.config_path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      die("config is not valid JSON: " + std::string(e.what()));
    }
    // Model first; the training defaults depend on it.
    std::string model = cfg.model;
    read_field(j, "", "model", model, errors);
    if (!o.model.empty()) model = o.model;
    if (model == "sfmod") gasopt_train_config_init(GASOPT_MODEL_SPOT_FORWARD, &cfg.train);
    parse_config_json(j, cfg, errors);
    cfg.model = model;
  } else if (!o.model.empty() && o.model == "sfmod") {
    gasopt_train_config_init(GASOPT_MODEL_SPOT_FORWARD, &cfg.train);
  }

  if (!o.model.empty()) cfg.model = o.model;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.alpha) {
    cfg.storage.alpha = *o.alpha;
    cfg.train.alpha = *o.alpha;
  } else {
    // An explicit storage.alpha is the facility's cap; training follows it
    // unless train.alpha is itself explicit.
    if (cfg.storage.alpha_set && !cfg.train_alpha_set) cfg.train.alpha = cfg.storage.alpha;
    if (!cfg.storage.alpha_set && cfg.model == "sfmod" && cfg.storage.preset &&
        cfg.storage.alpha == 0.0)
      cfg.storage.alpha = cfg.train.alpha;
  }

  validate_config(cfg, errors);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    std::exit(2);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gas storage trading policies: simulate, train, benchmark, report"};
  app.require_subcommand(1);

  CliOverrides o;
  auto* simulate = app.add_subcommand("simulate", "Generate scenarios and write them as CSV");
  auto* train = app.add_subcommand("train", "Fit a network policy; write checkpoint and log");
  auto* benchmark = app.add_subcommand("benchmark", "Fit the regression benchmark");
  auto* evaluate = app.add_subcommand("evaluate", "Report P&L for a saved checkpoint");
  auto* compare = app.add_subcommand("compare", "Side-by-side reports for several checkpoints");
  for (auto* cmd : {simulate, train, benchmark, evaluate, compare}) add_common_options(cmd, o);

  CLI11_PARSE(app, argc, argv);

  AppConfig cfg = assemble_config(o);
  if (simulate->parsed()) return cmd_simulate(cfg);
  if (train->parsed()) return cmd_train(cfg);
  if (benchmark->parsed()) return cmd_benchmark(cfg);
  if (evaluate->parsed()) return cmd_evaluate(cfg);
  return cmd_compare(cfg);
}
