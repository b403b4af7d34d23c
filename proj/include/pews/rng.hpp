#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace pews {

// 64-bit FNV-1a over a string, used for stream purpose tags.
constexpr std::uint64_t tag(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Collapses (seed, tag, ids...) into one well-mixed stream key.
std::uint64_t make_key(std::initializer_list<std::uint64_t> parts);

// Running FNV-1a digest over raw little-endian bytes; used to fingerprint
// parameter vectors.
class ByteDigest {
 public:
  void add_f64(double v);
  void add_u64(std::uint64_t v);
  std::uint64_t value() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

// Deterministic, replayable random stream. Every consumer constructs its own
// stream from an explicit key; no generator state is shared. All derived
// draws (uniform, gaussian, gamma) are built on the raw engine output so the
// sequences are identical on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : engine_(mix64(key)) {}

  std::uint64_t next_u64() { return engine_(); }
  std::uint64_t next_below(std::uint64_t n);  // unbiased draw from [0, n)
  double next_double();                       // [0, 1)
  double next_gaussian();                     // standard normal
  double next_gamma(double shape);            // unit scale, shape > 0
  std::vector<double> next_dirichlet(double alpha, int n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pews
