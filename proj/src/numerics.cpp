#include "rflect/numerics.hpp"

#include <cmath>
#include <cstring>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rflect/error.hpp"

namespace rflect {

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                    double b, double rel_tol, unsigned max_depth) {
  if (!(rel_tol > 0.0)) throw DomainError("integrate_adaptive: rel_tol must be positive");
  if (a == b) return {};
  // Integrate over the unit interval: Boost's recursion compares an unscaled
  // local error with scaled estimates, which forces full-depth refinement on
  // very short intervals.
  const double width = b - a;
  auto g = [&](double x) { return f(a + width * x); };
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      g, 0.0, 1.0, max_depth, rel_tol, &error, &l1);
  return {value * width, error * std::abs(width)};
}

MinimizeResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                       double hi, double x_tol) {
  if (!(lo < hi)) throw DomainError("golden_section_minimize: empty interval");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > x_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

double NoiseStream::uniform() {
  // 53 random mantissa bits, offset by half an ulp so 0 is never returned.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double NoiseStream::exponential() { return -std::log(uniform()); }

double NoiseStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

std::uint64_t keyed_seed(std::uint64_t global_seed, std::string_view parameter, double value) {
  // Normalise -0.0 so that it keys the same stream as +0.0.
  if (value == 0.0) value = 0.0;
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  return mix_seed(mix_seed(global_seed, fnv1a(parameter)), bits);
}

}  // namespace rflect
