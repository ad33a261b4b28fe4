#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("GASOPT_CLI");
  REQUIRE_MESSAGE(p != nullptr, "GASOPT_CLI must point at the gasopt binary");
  return p;
}

fs::path repo_root() {
  const char* p = std::getenv("GASOPT_CONFIG_DIR");
  REQUIRE_MESSAGE(p != nullptr, "GASOPT_CONFIG_DIR must point at the configs directory");
  return fs::path(p).parent_path();
}

int run(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path dir;
  explicit TempDir(const char* name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("running without a subcommand fails with usage text") {
  TempDir tmp("gasopt_cli_usage");
  auto err = (tmp.dir / "err.txt").string();
  CHECK(run(cli_path() + " > /dev/null 2> " + err) != 0);
  auto text = slurp(err);
  CHECK(text.find("help") != std::string::npos);

  CHECK(run(cli_path() + " --help > /dev/null 2>&1") == 0);
  CHECK(run(cli_path() + " train --help > /dev/null 2>&1") == 0);
  CHECK(run(cli_path() + " no-such-command > /dev/null 2>&1") != 0);
}

TEST_CASE("config errors list every offending field and exit with 2") {
  TempDir tmp("gasopt_cli_badcfg");
  auto cfg = tmp.dir / "bad.json";
  std::ofstream(cfg) << R"({
    "model": "smod",
    "scenarios": {"generate": {"count": -5}},
    "train": {"epochs": -1, "batch_size": 0}
  })";
  auto err = (tmp.dir / "err.txt").string();
  int rc = run(cli_path() + " train --config " + cfg.string() + " > /dev/null 2> " + err);
  CHECK(rc == 2);
  auto text = slurp(err);
  CHECK(text.find("count") != std::string::npos);
  CHECK(text.find("epochs") != std::string::npos);
  CHECK(text.find("batch_size") != std::string::npos);

  // Unparseable JSON is rejected before any work happens.
  std::ofstream(cfg) << "{nope";
  CHECK(run(cli_path() + " train --config " + cfg.string() + " > /dev/null 2>&1") == 1);

  // A missing config file is caught by option validation.
  CHECK(run(cli_path() + " train --config " + (tmp.dir / "absent.json").string() +
            " > /dev/null 2>&1") != 0);
}

TEST_CASE("the shipped tiny config trains, evaluates and reruns bytewise") {
  TempDir tmp("gasopt_cli_tiny");
  auto root = repo_root();
  auto cli = cli_path();
  auto cfg = (root / "configs" / "tiny_smod.json").string();
  // The tiny config's csv path is relative to the repository root.
  std::string cd = "cd " + root.string() + " && ";

  auto out1 = tmp.dir / "run1";
  int rc = run(cd + cli + " train --config " + cfg + " --out " + out1.string() +
               " > /dev/null 2>&1");
  REQUIRE(rc == 0);
  CHECK(fs::exists(out1 / "checkpoint.json"));
  CHECK(fs::exists(out1 / "train_log.jsonl"));
  CHECK(fs::exists(out1 / "smod_report.json"));
  CHECK(fs::exists(out1 / "smod_pnl.csv"));
  CHECK(fs::exists(out1 / "smod_fill.csv"));
  CHECK(fs::exists(out1 / "smod_hist.csv"));

  // Same seed, same config: training is reproducible byte for byte.
  auto out2 = tmp.dir / "run2";
  REQUIRE(run(cd + cli + " train --config " + cfg + " --out " + out2.string() +
              " > /dev/null 2>&1") == 0);
  CHECK(slurp(out1 / "checkpoint.json") == slurp(out2 / "checkpoint.json"));
  CHECK(slurp(out1 / "smod_report.json") == slurp(out2 / "smod_report.json"));

  // Evaluating the checkpoint on the same prices lands the same report.
  auto eval_cfg = tmp.dir / "eval.json";
  std::ofstream(eval_cfg) << R"({
    "model": "smod",
    "seed": 1,
    "scenarios": { "csv": { "path": ")" << (root / "configs" / "tiny_prices.csv").string()
                          << R"(", "has_header": false } },
    "storage": {
      "days": 3, "capacity": 10,
      "withdrawal_max": -10, "injection_max": 10,
      "month_starts": [0, 1, 2]
    },
    "evaluate": { "checkpoint": ")" << (out1 / "checkpoint.json").string() << R"(" }
  })";
  auto eval1 = tmp.dir / "eval1";
  auto eval2 = tmp.dir / "eval2";
  std::string eval_cmd = cli + " evaluate --config " + eval_cfg.string();
  REQUIRE(run(eval_cmd + " --out " + eval1.string() + " > /dev/null 2>&1") == 0);
  REQUIRE(run(eval_cmd + " --out " + eval2.string() + " > /dev/null 2>&1") == 0);
  CHECK(fs::exists(eval1 / "smod_report.json"));
  CHECK(slurp(eval1 / "smod_report.json") == slurp(eval2 / "smod_report.json"));

  // The evaluation of the trained policy matches the post-training report.
  CHECK(slurp(eval1 / "smod_pnl.csv") == slurp(out1 / "smod_pnl.csv"));
}

TEST_CASE("an explicit storage alpha flows into sfmod training") {
  TempDir tmp("gasopt_cli_alpha");
  auto cfg = tmp.dir / "sf.json";
  auto out = (tmp.dir / "run").string();
  auto log = (tmp.dir / "out.txt").string();
  const char* base = R"({
    "model": "sfmod",
    "seed": 3,
    "scenarios": {"generate": {"count": 6}},
    "storage": {
      "days": 8, "capacity": 40.0, "alpha": 0.25,
      "withdrawal_max": -10.0, "injection_max": 10.0,
      "month_starts": [0, 4]
    },
    "train": {"epochs": 2, "batch_size": 2, "train_count": 5, "validation_count": 1%s}
  })";
  char buf[1024];

  std::snprintf(buf, sizeof buf, base, "");
  std::ofstream(cfg) << buf;
  REQUIRE(run(cli_path() + " train --config " + cfg.string() + " --out " + out + " > " + log +
              " 2>&1") == 0);
  CHECK(slurp(log).find("alpha=0.25") != std::string::npos);

  // An explicit train.alpha still wins over the storage cap.
  std::snprintf(buf, sizeof buf, base, ", \"alpha\": 0.5");
  std::ofstream(cfg) << buf;
  REQUIRE(run(cli_path() + " train --config " + cfg.string() + " --out " + out + " > " + log +
              " 2>&1") == 0);
  CHECK(slurp(log).find("alpha=0.5") != std::string::npos);
}
