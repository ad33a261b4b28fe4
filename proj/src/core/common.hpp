#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gasopt {

// Error codes shared between the core and the C API surface.
enum class errc {
  invalid_argument = 1,
  io,
  parse,
  infeasible,
  numeric,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

// Worker count for parallel sections. Reads GASOPT_THREADS on every call so
// tests can vary it within one process; falls back to hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results
// must be written to per-index slots so the outcome is independent of the
// thread count. Rethrows the first worker exception.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

template <class F>
void parallel_for_each(std::size_t n, F&& fn) {
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

// Shortest round-trip decimal formatting (used by the CSV writers).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace gasopt
