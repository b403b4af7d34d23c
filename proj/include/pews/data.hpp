#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pews/linalg.hpp"
#include "pews/types.hpp"

namespace pews {

struct Dataset {
  Matrix features;          // n x 5
  std::vector<int> labels;  // values in [0, class_count)
  int class_count = 4;

  std::size_t size() const { return labels.size(); }
};

struct Shard {
  int owner = 0;
  std::vector<std::uint32_t> indices;
};

// 2-D point -> [x, y, x^2, y^2, xy].
std::array<double, 5> feature_lift(double x, double y);

// Interleaved-Gaussian classification problem: 16 isotropic clusters centered
// on the {-3,-1,1,3}^2 grid, grid cell (r, c) labeled (r + c) mod 4 so every
// neighboring cluster belongs to a different class. n_total must be divisible
// by 16; classes come out exactly balanced. Sample order is shuffled by seed.
Dataset gen_synthetic(std::size_t n_total, std::uint64_t seed,
                      double cluster_std = 0.35);

// Shard i receives exactly the samples whose class maps to i.
// class_to_participant must cover every class present.
std::vector<Shard> split_by_class(const Dataset& data,
                                  const std::vector<int>& class_to_participant,
                                  int participants);

// Per class, proportions drawn from Dirichlet(alpha) and realized exactly by
// largest-remainder quotas; the shards always partition the dataset.
std::vector<Shard> dirichlet_partition(const Dataset& data, int participants,
                                       double alpha, std::uint64_t seed);

// Seeded epoch-shuffled mini-batch cycle over one shard. The last partial
// batch of an epoch is kept. Single consumer; successive next() calls run
// through epoch after epoch.
class BatchIterator {
 public:
  struct Batch {
    Matrix features;
    std::vector<int> labels;
  };

  BatchIterator() = default;
  BatchIterator(const Dataset* data, std::vector<std::uint32_t> indices,
                std::uint64_t stream_key, int batch_size);

  Batch next();

 private:
  void reshuffle();

  const Dataset* data_ = nullptr;
  std::vector<std::uint32_t> indices_;
  std::uint64_t key_ = 0;
  int batch_size_ = 1;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
};

// Flat binary dataset file: magic "PEWS", u16 version, u64 sample count,
// u16 feature dim, u16 class count, then per sample 5 little-endian f64
// features and one u16 label. Round-trips bit-exactly.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace pews
