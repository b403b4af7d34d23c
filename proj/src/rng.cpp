#include "pews/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace pews {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t make_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (std::uint64_t p : parts) h = mix64(h ^ p);
  return h;
}

void ByteDigest::add_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h_ ^= (v >> (8 * i)) & 0xffu;
    h_ *= 0x100000001b3ull;
  }
}

void ByteDigest::add_f64(double v) { add_u64(std::bit_cast<std::uint64_t>(v)); }

std::string ByteDigest::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = digits[(h_ >> (4 * i)) & 0xf];
  return out;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  // Threshold rejection keeps the modulo unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double RngStream::next_gamma(double shape) {
  // Marsaglia-Tsang squeeze; shape < 1 is boosted through G(a) = G(a+1) U^(1/a).
  if (shape < 1.0) {
    const double u = 1.0 - next_double();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> RngStream::next_dirichlet(double alpha, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& g : out) {
    g = next_gamma(alpha);
    sum += g;
  }
  if (sum <= 0.0) {  // only reachable through underflow at tiny alpha
    for (double& g : out) g = 1.0 / n;
    return out;
  }
  for (double& g : out) g /= sum;
  return out;
}

}  // namespace pews
