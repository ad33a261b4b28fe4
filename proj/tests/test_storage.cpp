#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "../src/core/storage.hpp"

using namespace gasopt;

namespace {

StorageSpec flat_spec(int days, double capacity, double lo, double hi,
                      std::vector<int> months = {0}) {
  return make_storage_spec(days, capacity, 0.0, 0.0, 0.0,
                           std::vector<double>(static_cast<std::size_t>(days), lo),
                           std::vector<double>(static_cast<std::size_t>(days), hi),
                           std::move(months));
}

}  // namespace

TEST_CASE("effective bounds merge contract, inventory and delivery") {
  auto spec = flat_spec(5, 100.0, -30.0, 50.0);
  auto b = effective_bounds(spec, 95.0, 2, 10.0);
  CHECK(b.lo == doctest::Approx(-40.0));
  CHECK(b.hi == doctest::Approx(-5.0));
  CHECK(feasible(b));

  b = effective_bounds(spec, 0.0, 0);
  CHECK(b.lo == 0.0);
  CHECK(b.hi == 50.0);

  b = effective_bounds(spec, 100.0, 0);
  CHECK(b.lo == -30.0);
  CHECK(b.hi == 0.0);

  // Inventory outside [0, c] inverts the interval instead of throwing.
  b = effective_bounds(spec, 140.0, 0);
  CHECK_FALSE(feasible(b));
}

TEST_CASE("reference preset reproduces the two-regime bounds") {
  auto spec = reference_preset_spec(0.1);
  CHECK(spec.days == 351);
  CHECK(spec.capacity == 250000.0);
  CHECK(spec.alpha == 0.1);
  CHECK(spec.withdrawal_max[170] == -600.0);
  CHECK(spec.withdrawal_max[171] == -3072.0);
  CHECK(spec.injection_max[200] == 2808.0);
  CHECK(spec.injection_max[201] == 408.0);
  REQUIRE(spec.month_starts.size() == 12);
  CHECK(spec.month_starts.front() == 0);
  CHECK(spec.month_starts.back() == 330);
  CHECK(spec.month_end(11) == 351);
}

TEST_CASE("drain ledger accumulates remaining withdrawal capacity") {
  auto spec = reference_preset_spec(0.0);
  CHECK(spec.drain_after[351] == 0.0);
  CHECK(spec.drain_after[350] == 3072.0);
  bool recursion_holds = true;
  for (int k = 0; k < spec.days; ++k)
    recursion_holds &=
        spec.drain_after[k] == spec.drain_after[k + 1] - spec.withdrawal_max[k];
  CHECK(recursion_holds);
  CHECK(spec.drain_after[270] == doctest::Approx(81.0 * 3072.0));
  CHECK(spec.drain_after[269] == doctest::Approx(82.0 * 3072.0));
}

TEST_CASE("crossing day equals an independent scan") {
  auto spec = reference_preset_spec(0.0);

  // Oracle: accumulate |withdrawal| from the end and scan forward.
  std::vector<double> remaining(static_cast<std::size_t>(spec.days) + 1, 0.0);
  for (int k = spec.days - 1; k >= 0; --k)
    remaining[k] = remaining[k + 1] + std::abs(spec.withdrawal_max[k]);
  int oracle = -1;
  for (int k = 0; k < spec.days; ++k)
    if (remaining[k] < spec.capacity) {
      oracle = k;
      break;
    }

  CHECK(reachability_crossing_day(spec) == oracle);
  CHECK(oracle == 270);

  // A drain line that never dips below capacity has no crossing day; that
  // needs the final day's withdrawal alone to cover the whole store.
  auto small = flat_spec(10, 50.0, -60.0, 10.0);
  CHECK(reachability_crossing_day(small) == -1);
  CHECK(reachability_crossing_day(flat_spec(10, 50.0, -10.0, 10.0)) == 6);
}

TEST_CASE("terminal reachability is the drain comparison with slack") {
  auto spec = reference_preset_spec(0.0);
  CHECK(terminal_reachable(spec, 3072.0, 350));
  CHECK_FALSE(terminal_reachable(spec, 3072.1, 350));
  CHECK(terminal_reachable(spec, 3072.0 + 1e-10 * spec.capacity, 350));
  CHECK(terminal_reachable(spec, 0.0, 351));
  CHECK(terminal_reachable(spec, spec.capacity, 0));
  CHECK_FALSE(terminal_reachable(spec, spec.capacity, 300));
}

TEST_CASE("forced withdrawal collapses the interval onto its lower end") {
  Bounds b{-5.0, 12.0};
  auto forced = apply_forced_withdrawal(b, false);
  CHECK(forced.lo == -5.0);
  CHECK(forced.hi == -5.0);
  auto kept = apply_forced_withdrawal(b, true);
  CHECK(kept.hi == 12.0);
}

TEST_CASE("cash step prices the action and the proportional cost") {
  auto spec = make_storage_spec(1, 100.0, 0.01, 0.0, 0.0, {-10.0}, {10.0}, {0});
  CHECK(step_cash(spec, -10.0, 3.0) == doctest::Approx(30.0 - 0.3));
  CHECK(step_cash(spec, 10.0, 3.0) == doctest::Approx(-30.0 - 0.3));
  CHECK(step_cash(spec, 0.0, 3.0) == 0.0);
}

TEST_CASE("forward actions aggregate into next-month delivery rates") {
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6});
  std::vector<double> fwd{1, 2, 3, 4, 5, 6, 0, 0, 0};
  auto d = delivery_quantities(fwd, spec);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == doctest::Approx(6.0));
  CHECK(d[2] == doctest::Approx(15.0));
}

TEST_CASE("storage level recombines spot actions and deliveries") {
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6});
  std::vector<double> spot{1, 1, 1, -2, 0, 0, 1, 0, 0};
  std::vector<double> delivery{0.0, 2.0, 1.0};
  CHECK(storage_level(spot, delivery, spec, 0) == 0.0);
  CHECK(storage_level(spot, delivery, spec, 3) == doctest::Approx(3.0));
  // Day 4: spot 1+1+1-2 = 1, one delivered day of month 1.
  CHECK(storage_level(spot, delivery, spec, 4) == doctest::Approx(1.0 + 2.0));
  // Day 9: spot sums to 2, month 1 delivers 3 x 2, month 2 delivers 3 x 1.
  CHECK(storage_level(spot, delivery, spec, 9) == doctest::Approx(2.0 + 6.0 + 3.0));
  CHECK_THROWS_AS(storage_level(spot, delivery, spec, 10), Error);
}

TEST_CASE("constructor rejects malformed contracts") {
  CHECK_THROWS_AS(flat_spec(3, -1.0, -10.0, 10.0), Error);
  CHECK_THROWS_AS(flat_spec(3, 10.0, 0.0, 10.0), Error);    // withdrawal must be < 0
  CHECK_THROWS_AS(flat_spec(3, 10.0, -10.0, 0.0), Error);   // injection must be > 0
  CHECK_THROWS_AS(flat_spec(3, 10.0, -10.0, 10.0, {1}), Error);
  CHECK_THROWS_AS(flat_spec(3, 10.0, -10.0, 10.0, {0, 2, 2}), Error);
  CHECK_THROWS_AS(flat_spec(3, 10.0, -10.0, 10.0, {0, 5}), Error);
  CHECK_THROWS_AS(make_storage_spec(3, 10.0, -0.1, 0.0, 0.0, {-1, -1, -1}, {1, 1, 1}, {0}),
                  Error);
  CHECK_THROWS_AS(make_storage_spec(3, 10.0, 0.0, 0.0, 1.5, {-1, -1, -1}, {1, 1, 1}, {0}),
                  Error);
}

TEST_CASE("calendar lookup maps days onto months") {
  auto spec = flat_spec(9, 100.0, -10.0, 10.0, {0, 3, 6});
  CHECK(spec.month_of(0) == 0);
  CHECK(spec.month_of(2) == 0);
  CHECK(spec.month_of(3) == 1);
  CHECK(spec.month_of(8) == 2);
  CHECK(spec.month_begin(1) == 3);
  CHECK(spec.month_end(1) == 6);
  CHECK(spec.month_end(2) == 9);
}
