#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "../src/core/optimizer.hpp"
#include "../src/core/tape.hpp"

using namespace gasopt;
using namespace gasopt::ad;

namespace {

// Runs f once on tape leaves and once per input on plain doubles, comparing
// every adjoint against a central difference.
template <class F>
void check_gradient(F f, const std::vector<double>& x, double tol = 1e-6) {
  Tape tape;
  std::vector<Rev> leaves;
  leaves.reserve(x.size());
  for (double xi : x) leaves.push_back(Rev::leaf(tape, xi));
  Rev out = f(std::span<const Rev>(leaves));
  REQUIRE(out.id >= 0);
  tape.backward(out.id);

  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    std::vector<double> lo = x, hi = x;
    lo[i] -= h;
    hi[i] += h;
    double fd = (f(std::span<const double>(hi)) - f(std::span<const double>(lo))) / (2.0 * h);
    double ad_grad = tape.adjoint(leaves[i].id);
    INFO("input ", i, " ad=", ad_grad, " fd=", fd);
    CHECK(std::abs(ad_grad - fd) <= tol * std::max(1.0, std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("adjoints of composite expressions match central differences") {
  auto polynomial = [](auto in) {
    auto x = in[0], y = in[1], z = in[2];
    return x * y + y * z * z - x * x * 3.0 + (2.0 - z);
  };
  check_gradient(polynomial, {1.3, -0.7, 2.1});

  auto nested = [](auto in) {
    auto x = in[0], y = in[1];
    auto inner = sigmoid(x * y + x * 0.5);
    return exp_clamped(inner * y - x) + sabs(y * 0.25);
  };
  check_gradient(nested, {0.8, -1.6});
  check_gradient(nested, {-2.0, 3.0});

  auto selected = [](auto in) {
    auto x = in[0], y = in[1];
    return smax(x * 2.0, y + 1.0) * smin(x, y * y);
  };
  check_gradient(selected, {1.0, 2.5});
  check_gradient(selected, {-1.5, 0.25});
}

TEST_CASE("sigmoid is centered and saturates symmetrically") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  Tape tape;
  auto x = Rev::leaf(tape, 0.0);
  auto s = sigmoid(x);
  tape.backward(s.id);
  CHECK(tape.adjoint(x.id) == doctest::Approx(0.25));
  CHECK(sigmoid(5.0) + sigmoid(-5.0) == doctest::Approx(1.0));
  CHECK(sigmoid(40.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-40.0) == doctest::Approx(0.0));
}

TEST_CASE("selection ops route the gradient to one argument, ties to the second") {
  Tape tape;
  auto x = Rev::leaf(tape, 2.0);
  auto y = Rev::leaf(tape, 2.0);

  // Make distinct nodes with equal values so the tie is observable.
  auto a = x * 1.0;
  auto b = y * 1.0;

  auto m = smax(a, b);
  CHECK(m.id == b.id);
  tape.backward(m.id);
  CHECK(tape.adjoint(x.id) == 0.0);
  CHECK(tape.adjoint(y.id) == 1.0);

  auto n = smin(a, b);
  CHECK(n.id == b.id);

  // Scalar-first overloads keep the same convention on ties.
  auto p = smax(2.0, b);
  CHECK(p.id == b.id);
  auto q = smin(2.0, b);
  CHECK(q.id == b.id);
  CHECK(smax(2.0, Rev::constant(1.0)).v == 2.0);
  CHECK(smin(3.0, 7.0) == 3.0);
}

TEST_CASE("absolute value uses sign as slope and zero at the kink") {
  Tape tape;
  auto x = Rev::leaf(tape, -3.0);
  auto y = Rev::leaf(tape, 0.0);
  auto z = Rev::leaf(tape, 4.0);
  auto out = sabs(x) + sabs(y) + sabs(z);
  tape.backward(out.id);
  CHECK(tape.adjoint(x.id) == -1.0);
  CHECK(tape.adjoint(y.id) == 0.0);
  CHECK(tape.adjoint(z.id) == 1.0);
  CHECK(out.v == doctest::Approx(7.0));
}

TEST_CASE("clamped exponential switches to linear tails continuously") {
  CHECK(exp_clamped(0.0) == doctest::Approx(1.0));
  CHECK(exp_clamped(1.5) == doctest::Approx(std::exp(1.5)));

  // Tail values follow exp(c) * (x - (c-1)) above and exp(-c) * (x + c + 1)
  // below, matching value and slope at the seams.
  CHECK(exp_clamped(21.0) == doctest::Approx(2.0 * std::exp(20.0)));
  CHECK(exp_clamped(-20.5) == doctest::Approx(0.5 * std::exp(-20.0)));
  double eps = 1e-9;
  CHECK(exp_clamped(20.0 + eps) ==
        doctest::Approx(exp_clamped(20.0 - eps)).epsilon(1e-6));
  CHECK(exp_clamped(-20.0 - eps) ==
        doctest::Approx(exp_clamped(-20.0 + eps)).epsilon(1e-6));
  CHECK(exp_clamped_slope(25.0) == std::exp(20.0));
  CHECK(exp_clamped_slope(-25.0) == std::exp(-20.0));

  // Strictly increasing across both seams.
  double prev = exp_clamped(-30.0);
  bool increasing = true;
  for (double t = -29.5; t <= 30.0; t += 0.5) {
    double cur = exp_clamped(t);
    increasing &= cur > prev;
    prev = cur;
  }
  CHECK(increasing);

  Tape tape;
  auto x = Rev::leaf(tape, 24.0);
  auto e = exp_clamped(x);
  tape.backward(e.id);
  CHECK(tape.adjoint(x.id) == std::exp(20.0));
}

TEST_CASE("constant folding keeps constants off the tape") {
  Tape tape;
  auto x = Rev::leaf(tape, 2.0);
  int nodes = tape.size();

  auto shifted = x + 3.0;
  CHECK(shifted.id == x.id);  // shift by a constant reuses the node
  CHECK(shifted.v == doctest::Approx(5.0));
  CHECK(tape.size() == nodes);

  auto c = Rev::constant(4.0) * Rev::constant(0.5) + Rev::constant(1.0);
  CHECK(c.is_const());
  CHECK(c.v == doctest::Approx(3.0));
  CHECK(tape.size() == nodes);

  auto mixed = c * x - 1.0;
  CHECK(mixed.id >= 0);
  tape.backward(mixed.id);
  CHECK(tape.adjoint(x.id) == doctest::Approx(3.0));
  CHECK(sigmoid(Rev::constant(0.0)).is_const());
  CHECK(exp_clamped(Rev::constant(0.0)).is_const());
  CHECK(sabs(Rev::constant(-2.0)).is_const());
  CHECK((-Rev::constant(2.0)).v == -2.0);
}

TEST_CASE("fused affine row equals the unrolled sum in value and gradient") {
  std::vector<double> wv{0.3, -1.2, 2.0};
  std::vector<double> xv{1.5, 0.25, -0.75};
  double bv = 0.4;

  Tape fused_tape;
  std::vector<Rev> w;
  for (double v : wv) w.push_back(Rev::leaf(fused_tape, v));
  std::vector<Rev> feats;
  for (double v : xv) feats.push_back(Rev::constant(v));
  auto b = Rev::leaf(fused_tape, bv);
  auto fused = affine_row(w, feats, b);

  Tape manual_tape;
  std::vector<Rev> w2;
  for (double v : wv) w2.push_back(Rev::leaf(manual_tape, v));
  auto b2 = Rev::leaf(manual_tape, bv);
  auto manual = w2[0] * xv[0] + w2[1] * xv[1] + w2[2] * xv[2] + b2;

  CHECK(fused.v == doctest::Approx(manual.v).epsilon(1e-15));
  CHECK(fused.v == doctest::Approx(affine_row(wv, xv, bv)).epsilon(1e-15));

  fused_tape.backward(fused.id);
  manual_tape.backward(manual.id);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(fused_tape.adjoint(w[i].id) == doctest::Approx(manual_tape.adjoint(w2[i].id)));
  CHECK(fused_tape.adjoint(b.id) == 1.0);

  // Live features receive the weight values as gradients.
  Tape live_tape;
  std::vector<Rev> w3, x3;
  for (double v : wv) w3.push_back(Rev::leaf(live_tape, v));
  for (double v : xv) x3.push_back(Rev::leaf(live_tape, v));
  auto b3 = Rev::leaf(live_tape, bv);
  auto live = affine_row(w3, x3, b3);
  live_tape.backward(live.id);
  for (std::size_t i = 0; i < x3.size(); ++i) {
    CHECK(live_tape.adjoint(x3[i].id) == doctest::Approx(wv[i]));
    CHECK(live_tape.adjoint(w3[i].id) == doctest::Approx(xv[i]));
  }
}

TEST_CASE("backward is repeatable and respects fan-out") {
  Tape tape;
  auto x = Rev::leaf(tape, 1.5);
  auto shared = x * x;           // reused twice below
  auto out = shared * 2.0 + shared * shared;
  tape.backward(out.id);
  double first = tape.adjoint(x.id);
  // d/dx (2x^2 + x^4) = 4x + 4x^3 = 6 + 13.5
  CHECK(first == doctest::Approx(4.0 * 1.5 + 4.0 * std::pow(1.5, 3)));
  tape.backward(out.id);
  CHECK(tape.adjoint(x.id) == first);

  tape.backward(x.id);  // seeding a leaf gives it adjoint 1
  CHECK(tape.adjoint(x.id) == 1.0);

  tape.reset();
  CHECK(tape.size() == 0);
}

TEST_CASE("first Adam step moves by learning rate in the gradient direction") {
  AdamConfig cfg;
  std::vector<double> params{1.0, -2.0};
  std::vector<double> grad{0.5, -4.0};
  AdamState state(params.size());
  REQUIRE(adam_step(params, grad, state, cfg));
  CHECK(state.step == 1);
  // With zero moments the bias-corrected update is lr * g / (|g| + eps).
  CHECK(params[0] == doctest::Approx(1.0 - 0.05).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(-2.0 + 0.05).epsilon(1e-6));
}

TEST_CASE("non-finite gradients skip the update untouched") {
  AdamConfig cfg;
  std::vector<double> params{3.0, 4.0};
  AdamState state(2);
  state.m = {0.1, 0.2};
  state.v = {0.3, 0.4};
  state.step = 7;

  std::vector<double> bad{1.0, std::nan("")};
  CHECK_FALSE(adam_step(params, bad, state, cfg));
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(adam_step(params, bad, state, cfg));

  CHECK(params[0] == 3.0);
  CHECK(params[1] == 4.0);
  CHECK(state.m[0] == 0.1);
  CHECK(state.v[1] == 0.4);
  CHECK(state.step == 7);
}

TEST_CASE("Adam drives a quadratic to its minimum deterministically") {
  AdamConfig cfg;
  auto run = [&] {
    std::vector<double> p{10.0};
    AdamState state(1);
    for (int t = 0; t < 3000; ++t) {
      std::vector<double> g{2.0 * (p[0] - 3.0)};
      adam_step(p, g, state, cfg);
    }
    return p[0];
  };
  double a = run();
  CHECK(a == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(run() == a);  // bitwise repeatable
}
