#include "tape.hpp"

namespace gasopt::ad {

Rev affine_row(std::span<const Rev> w, std::span<const Rev> x, const Rev& b) {
  require(w.size() == x.size(), errc::invalid_argument, "affine_row: size mismatch");
  Tape* tape = b.tape;
  for (const auto& wi : w)
    if (!wi.is_const()) tape = wi.tape;
  double acc = b.v;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i].v * x[i].v;
  if (!tape) return Rev::constant(acc);

  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i].is_const()) tape->push_edge(w[i].id, x[i].v);
    if (!x[i].is_const()) tape->push_edge(x[i].id, w[i].v);
  }
  if (!b.is_const()) tape->push_edge(b.id, 1.0);
  return Rev(tape, tape->commit(), acc);
}

double affine_row(std::span<const double> w, std::span<const double> x, double b) {
  double acc = b;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
  return acc;
}

}  // namespace gasopt::ad
