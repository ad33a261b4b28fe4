#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "../src/core/episode.hpp"
#include "../src/core/rng.hpp"

using namespace gasopt;

namespace {

StorageSpec flat_spec(int days, double capacity, double lo, double hi, std::vector<int> months,
                      double alpha = 0.0, double kappa = 0.0) {
  return make_storage_spec(days, capacity, kappa, 0.0, alpha,
                           std::vector<double>(static_cast<std::size_t>(days), lo),
                           std::vector<double>(static_cast<std::size_t>(days), hi),
                           std::move(months));
}

ScenarioSet single_path(std::vector<double> prices, std::vector<int> months) {
  ScenarioSet s(1, static_cast<std::int64_t>(prices.size()), std::move(months));
  auto row = s.spot_row(0);
  for (std::size_t k = 0; k < prices.size(); ++k) row[k] = prices[k];
  return s;
}

NormStats unit_norm(int dim) {
  NormStats n;
  n.shift.assign(static_cast<std::size_t>(dim), 0.0);
  n.scale.assign(static_cast<std::size_t>(dim), 1.0);
  return n;
}

MarketModelParams flat_market(double level) {
  MarketModelParams p;
  p.seasonal_level = level;
  p.seasonal_amplitude = 0.0;
  p.volatility = 0.0;
  return p;
}

}  // namespace

TEST_CASE("no raw series beats the dynamic programming optimum on 5,2,8") {
  auto spec = flat_spec(3, 10.0, -10.0, 10.0, {0, 1, 2});
  auto s = single_path({5.0, 2.0, 8.0}, {0, 1, 2});
  auto norm = unit_norm(3);

  // Buy 10 at 2, forced sell at 8: the enumerated optimum is 60.
  double best = -1e300;
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; b <= 8; ++b)
      for (int c = 0; c <= 8; ++c) {
        std::vector<double> raw{a / 8.0, b / 8.0, c / 8.0};
        RawSeriesProvider prov{raw, {}};
        auto out = run_episode<double>(ModelKind::smod, spec, s, 0, norm, prov);
        CHECK(out.violation == 0.0);
        CHECK(out.wealth <= 60.0 + 1e-9);
        best = std::max(best, out.wealth);
      }
  CHECK(best == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("random walks stay feasible and land the terminal level on zero") {
  MarketModelParams mkt;
  for (ModelKind model : {ModelKind::smod, ModelKind::sfmod}) {
    auto spec = reference_preset_spec(model == ModelKind::sfmod ? 0.4 : 0.0);
    auto s = gen_spot_paths(mkt, 3, spec.days, spec.month_starts, 2024);
    if (model == ModelKind::sfmod) gen_forward_curves(s, mkt);
    auto norm = unit_norm(model == ModelKind::sfmod ? 4 : 3);

    for (std::int64_t i = 0; i < s.count(); ++i) {
      Rng rng(substream_seed(77, static_cast<std::uint64_t>(i)));
      std::vector<double> spot_raw(spec.days), fwd_raw(spec.days);
      for (int k = 0; k < spec.days; ++k) {
        spot_raw[k] = rng.uniform(0.0, 1.0);
        fwd_raw[k] = rng.uniform(0.0, 1.0);
      }
      RawSeriesProvider prov{spot_raw, model == ModelKind::sfmod ? fwd_raw : std::span<const double>{}};
      EpisodeLedger led;
      auto out = run_episode<double>(model, spec, s, i, norm, prov, &led);

      CHECK(out.violation == 0.0);
      CHECK_FALSE(out.forced);
      CHECK(std::isfinite(out.wealth));
      CHECK(led.level.back() == 0.0);  // exact, via the degenerate final interval

      double slack = 1e-9 * spec.capacity;
      bool level_ok = true, action_ok = true, bounds_ok = true;
      for (int k = 0; k < spec.days; ++k) {
        level_ok &= led.level[k] >= -slack && led.level[k] <= spec.capacity + slack;
        bounds_ok &= led.bound_lo[k] <= led.bound_hi[k] + 1e-12;
        action_ok &= led.spot_action[k] >= led.bound_lo[k] - 1e-12 &&
                     led.spot_action[k] <= led.bound_hi[k] + 1e-12;
      }
      CHECK(level_ok);
      CHECK(bounds_ok);
      CHECK(action_ok);

      double cash_sum = 0.0;
      for (double d : led.cash_delta) cash_sum += d;
      CHECK(cash_sum == doctest::Approx(led.wealth).epsilon(1e-10));
    }
  }
}

TEST_CASE("forward trades settle cash at quote time and deliver next month") {
  auto mkt = flat_market(3.0);
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.15);
  auto s = gen_spot_paths(mkt, 1, 9, spec.month_starts, 5);
  gen_forward_curves(s, mkt);
  REQUIRE(s.spot(0, 4) == doctest::Approx(3.0));

  std::vector<double> spot_actions(9, 0.0);
  std::vector<double> fwd_actions(9, 0.0);
  fwd_actions[0] = 1.0;   // within the +-5 cap
  fwd_actions[1] = 99.0;  // clamped to the cap
  fwd_actions[7] = 4.0;   // front month is the last contract: ignored

  DirectActionProvider prov{spot_actions, fwd_actions};
  EpisodeLedger led;
  auto out = run_episode<double>(ModelKind::sfmod, spec, s, 0, unit_norm(4), prov, &led);

  CHECK(led.fwd_action[0] == 1.0);
  CHECK(led.fwd_action[1] == 5.0);  // alpha*c/len = 0.15*100/3
  CHECK(led.fwd_action[7] == 0.0);
  CHECK(led.delivery[2] == 0.0);
  CHECK(led.delivery[3] == doctest::Approx(6.0));
  CHECK(led.delivery[5] == doctest::Approx(6.0));
  CHECK(led.delivery[6] == 0.0);

  // Premium leaves on the trade day: 1 MWh/day for 3 days at price 3.
  CHECK(led.cash_delta[0] == doctest::Approx(-9.0));
  CHECK(led.cash_delta[1] == doctest::Approx(-45.0));

  // The drain cap forces the bought gas back out by maturity.
  CHECK(led.level[6] == doctest::Approx(18.0));
  CHECK(led.level[9] == 0.0);
  CHECK(out.violation == 0.0);
  // Flat prices make every round trip a wash.
  CHECK(out.wealth == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("proportional cost is charged on both legs") {
  auto mkt = flat_market(3.0);
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.0, 0.01);
  auto s = gen_spot_paths(mkt, 1, 9, spec.month_starts, 5);

  std::vector<double> spot_actions(9, 0.0);
  spot_actions[0] = 2.0;
  DirectActionProvider prov{spot_actions, {}};
  EpisodeLedger led;
  auto out = run_episode<double>(ModelKind::smod, spec, s, 0, unit_norm(3), prov, &led);

  CHECK(led.cash_delta[0] == doctest::Approx(-6.06));
  CHECK(led.spot_action[8] == doctest::Approx(-2.0));
  CHECK(led.cash_delta[8] == doctest::Approx(6.0 - 0.06));
  CHECK(out.wealth == doctest::Approx(-0.12).epsilon(1e-12));
}

TEST_CASE("flat prices make every strategy wealth-neutral") {
  auto mkt = flat_market(7.5);
  auto spec = flat_spec(30, 200.0, -20.0, 25.0, {0, 10, 20}, 0.3);
  auto s = gen_spot_paths(mkt, 2, 30, spec.month_starts, 9);
  gen_forward_curves(s, mkt);

  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(substream_seed(5150, static_cast<std::uint64_t>(trial)));
    std::vector<double> spot_raw(30), fwd_raw(30);
    for (int k = 0; k < 30; ++k) {
      spot_raw[k] = rng.uniform(0.0, 1.0);
      fwd_raw[k] = rng.uniform(0.0, 1.0);
    }
    RawSeriesProvider prov{spot_raw, fwd_raw};
    auto out = run_episode<double>(ModelKind::sfmod, spec, s, trial % 2, unit_norm(4), prov);
    CHECK(out.wealth == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(out.violation == 0.0);
  }
}

TEST_CASE("deliveries depend on forward trades only, never on spot actions") {
  MarketModelParams mkt;
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.3);
  auto s = gen_spot_paths(mkt, 1, 9, spec.month_starts, 31);
  gen_forward_curves(s, mkt);
  auto norm = unit_norm(4);

  std::vector<double> fwd_raw(9, 0.8);
  std::vector<double> lo_spot(9, 0.3), hi_spot(9, 0.7);

  RawSeriesProvider pa{lo_spot, fwd_raw};
  RawSeriesProvider pb{hi_spot, fwd_raw};
  EpisodeLedger la, lb;
  run_episode<double>(ModelKind::sfmod, spec, s, 0, norm, pa, &la);
  run_episode<double>(ModelKind::sfmod, spec, s, 0, norm, pb, &lb);

  CHECK(la.delivery == lb.delivery);
  CHECK(la.fwd_action == lb.fwd_action);
  CHECK(la.spot_action != lb.spot_action);
}

TEST_CASE("a forward perturbation reaches spot bounds only from delivery start") {
  MarketModelParams mkt;
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.3);
  auto s = gen_spot_paths(mkt, 1, 9, spec.month_starts, 31);
  gen_forward_curves(s, mkt);
  auto norm = unit_norm(4);

  std::vector<double> spot_raw(9, 0.4);
  std::vector<double> base_fwd(9, 0.5);  // raw 0.5 means zero net trade
  std::vector<double> bumped_fwd = base_fwd;
  bumped_fwd[1] = 0.9;  // day 1 sits in month 0, trading delivery month 1

  RawSeriesProvider pa{spot_raw, base_fwd};
  RawSeriesProvider pb{spot_raw, bumped_fwd};
  EpisodeLedger la, lb;
  run_episode<double>(ModelKind::sfmod, spec, s, 0, norm, pa, &la);
  run_episode<double>(ModelKind::sfmod, spec, s, 0, norm, pb, &lb);

  int delivery_start = spec.month_begin(1);
  bool prefix_identical = true;
  for (int k = 0; k < delivery_start; ++k) {
    prefix_identical &= la.bound_lo[k] == lb.bound_lo[k];
    prefix_identical &= la.bound_hi[k] == lb.bound_hi[k];
    prefix_identical &= la.spot_action[k] == lb.spot_action[k];
    prefix_identical &= la.level[k] == lb.level[k];
  }
  CHECK(prefix_identical);
  CHECK(la.bound_lo[delivery_start] != lb.bound_lo[delivery_start]);
  CHECK(la.cash_delta[1] != lb.cash_delta[1]);  // premium hits on the trade day
  CHECK(la.cash_delta[0] == lb.cash_delta[0]);
}

TEST_CASE("replaying a ledger's actions reproduces the episode exactly") {
  MarketModelParams mkt;
  auto spec = reference_preset_spec(0.25);
  auto s = gen_spot_paths(mkt, 2, spec.days, spec.month_starts, 404);
  gen_forward_curves(s, mkt);

  auto policy = init_policy(ModelKind::sfmod, spec, {8}, 6);
  policy.norm = fit_norm_stats(s, spec, ModelKind::sfmod, 2);

  EpisodeLedger led;
  auto out = simulate_episode(policy, spec, s, 1, &led);

  DirectActionProvider replay{led.spot_action, led.fwd_action};
  EpisodeLedger led2;
  auto out2 = run_episode<double>(ModelKind::sfmod, spec, s, 1, policy.norm, replay, &led2);

  CHECK(out2.wealth == out.wealth);
  CHECK(led2.level == led.level);
  CHECK(led2.spot_action == led.spot_action);
  CHECK(led2.fwd_action == led.fwd_action);
  CHECK(led2.cash_delta == led.cash_delta);
}

TEST_CASE("with a zero forward cap the two-head model collapses onto the spot model") {
  MarketModelParams mkt;
  auto spec_f = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.0);  // alpha = 0
  auto s = gen_spot_paths(mkt, 2, 9, spec_f.month_starts, 12);
  gen_forward_curves(s, mkt);

  auto ps = init_policy(ModelKind::smod, spec_f, {4}, 3);
  ps.norm = fit_norm_stats(s, spec_f, ModelKind::smod, 2);

  // Embed the 3-input single-head net into the 4-input two-head layout:
  // the extra feature column gets zero weight, the extra head zeros.
  auto pf = init_policy(ModelKind::sfmod, spec_f, {4}, 0);
  pf.norm = fit_norm_stats(s, spec_f, ModelKind::sfmod, 2);
  int pps3 = ps.params_per_subnet();
  int pps4 = pf.params_per_subnet();
  REQUIRE(pps3 == 4 * 4 + 1 * 5);
  REQUIRE(pps4 == 4 * 5 + 2 * 5);
  std::fill(pf.values.begin(), pf.values.end(), 0.0);
  for (int sn = 0; sn < ps.subnet_count; ++sn) {
    const double* src = ps.values.data() + static_cast<std::size_t>(sn) * pps3;
    double* dst = pf.values.data() + static_cast<std::size_t>(sn) * pps4;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 3; ++c) dst[r * 4 + c] = src[r * 3 + c];
      dst[16 + r] = src[12 + r];  // hidden biases
    }
    for (int c = 0; c < 4; ++c) dst[20 + c] = src[16 + c];  // spot head weights
    dst[28] = src[20];                                      // spot head bias
  }

  for (std::int64_t i = 0; i < 2; ++i) {
    EpisodeLedger lsd, lfd;
    auto os = simulate_episode(ps, spec_f, s, i, &lsd);
    auto of = simulate_episode(pf, spec_f, s, i, &lfd);
    CHECK(of.wealth == os.wealth);
    CHECK(lfd.spot_action == lsd.spot_action);
    CHECK(lfd.level == lsd.level);
    bool no_fwd = true;
    for (double f : lfd.fwd_action) no_fwd &= f == 0.0;
    CHECK(no_fwd);
  }
}

TEST_CASE("the taped episode evaluates to the double-path wealth") {
  MarketModelParams mkt;
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6}, 0.2);
  auto s = gen_spot_paths(mkt, 1, 9, spec.month_starts, 21);
  gen_forward_curves(s, mkt);

  auto policy = init_policy(ModelKind::sfmod, spec, {6}, 2);
  policy.norm = fit_norm_stats(s, spec, ModelKind::sfmod, 1);

  auto od = simulate_episode(policy, spec, s, 0);

  ad::Tape tape;
  std::vector<ad::Rev> leaves;
  leaves.reserve(policy.values.size());
  for (double v : policy.values) leaves.push_back(ad::Rev::leaf(tape, v));
  NetworkProvider<ad::Rev> prov{&policy, leaves, {}};
  auto orev = run_episode<ad::Rev>(ModelKind::sfmod, spec, s, 0, policy.norm, prov);

  CHECK(orev.wealth.v == od.wealth);
  REQUIRE(orev.wealth.id >= 0);
  tape.backward(orev.wealth.id);
  double grad_mass = 0.0;
  for (const auto& leaf : leaves) grad_mass += std::abs(tape.adjoint(leaf.id));
  CHECK(grad_mass > 0.0);
}

TEST_CASE("episode rejects mismatched horizons") {
  MarketModelParams mkt;
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6});
  auto s = gen_spot_paths(mkt, 1, 12, {0, 3, 6}, 1);
  auto policy = init_policy(ModelKind::smod, spec, {4}, 1);
  policy.norm = unit_norm(3);
  CHECK_THROWS_AS(simulate_episode(policy, spec, s, 0), Error);
}
