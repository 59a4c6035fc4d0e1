#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace rflect {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod integration of `f` over [a, b], refined
/// until the error estimate drops below `rel_tol` times the L1 norm. Bisection
/// stops at `max_depth` levels: below the attainable tolerance the error
/// estimate is roundoff-limited and deeper recursion grows exponentially.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                    double b, double rel_tol = 1e-8,
                                    unsigned max_depth = 20);

struct MinimizeResult {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a minimum of a unimodal `f` on [lo, hi].
MinimizeResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                       double hi, double x_tol);

// Deterministic random streams. Uniform deviates are built from raw
// mt19937_64 output rather than std distributions so that spectra are
// bit-reproducible across standard library implementations.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1).
  double uniform();
  /// Exponential with unit mean.
  double exponential();
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Seed for a sweep point keyed by (global seed, parameter name, value), so
/// that reordering a grid cannot change the noise drawn for a given value.
std::uint64_t keyed_seed(std::uint64_t global_seed, std::string_view parameter, double value);

/// Evaluates fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Results are stored by index, so ordering is deterministic.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, Fn&& fn, unsigned threads = 0) {
  std::vector<Result> out(n);
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace rflect
