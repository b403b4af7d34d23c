#include "pews/data.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pews/quota.hpp"
#include "pews/rng.hpp"

namespace pews {

std::array<double, 5> feature_lift(double x, double y) {
  return {x, y, x * x, y * y, x * y};
}

Dataset gen_synthetic(std::size_t n_total, std::uint64_t seed, double cluster_std) {
  if (n_total == 0 || n_total % 16 != 0)
    throw std::invalid_argument("gen_synthetic: n_total must be divisible by 16");
  if (!(cluster_std > 0.0))
    throw std::invalid_argument("gen_synthetic: cluster_std must be positive");

  const std::size_t per_cluster = n_total / 16;
  static constexpr double kGrid[4] = {-3.0, -1.0, 1.0, 3.0};

  std::vector<std::array<double, 5>> points;
  std::vector<int> labels;
  points.reserve(n_total);
  labels.reserve(n_total);

  RngStream gen(make_key({seed, tag("synthetic")}));
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int label = (r + c) % 4;
      for (std::size_t i = 0; i < per_cluster; ++i) {
        const double x = kGrid[c] + cluster_std * gen.next_gaussian();
        const double y = kGrid[r] + cluster_std * gen.next_gaussian();
        points.push_back(feature_lift(x, y));
        labels.push_back(label);
      }
    }
  }

  std::vector<std::uint32_t> order(n_total);
  std::iota(order.begin(), order.end(), 0);
  RngStream shuf(make_key({seed, tag("synthetic-shuffle")}));
  shuf.shuffle(order);

  Dataset data;
  data.class_count = 4;
  data.features = Matrix(n_total, 5);
  data.labels.resize(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    const auto& p = points[order[i]];
    std::copy(p.begin(), p.end(), data.features.row(i));
    data.labels[i] = labels[order[i]];
  }
  return data;
}

std::vector<Shard> split_by_class(const Dataset& data,
                                  const std::vector<int>& class_to_participant,
                                  int participants) {
  std::vector<Shard> shards(static_cast<std::size_t>(participants));
  for (int p = 0; p < participants; ++p) shards[static_cast<std::size_t>(p)].owner = p;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int cls = data.labels[i];
    if (cls < 0 || static_cast<std::size_t>(cls) >= class_to_participant.size())
      throw std::invalid_argument("split_by_class: class " + std::to_string(cls) +
                                  " has no participant assignment");
    const int owner = class_to_participant[static_cast<std::size_t>(cls)];
    if (owner < 0 || owner >= participants)
      throw std::invalid_argument("split_by_class: assignment out of range");
    shards[static_cast<std::size_t>(owner)].indices.push_back(
        static_cast<std::uint32_t>(i));
  }
  return shards;
}

std::vector<Shard> dirichlet_partition(const Dataset& data, int participants,
                                       double alpha, std::uint64_t seed) {
  if (participants < 1)
    throw std::invalid_argument("dirichlet_partition: participants must be >= 1");
  if (!(alpha > 0.0))
    throw std::invalid_argument("dirichlet_partition: alpha must be positive");

  std::vector<std::vector<std::uint32_t>> by_class(
      static_cast<std::size_t>(data.class_count));
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(
        static_cast<std::uint32_t>(i));

  std::vector<Shard> shards(static_cast<std::size_t>(participants));
  for (int p = 0; p < participants; ++p) shards[static_cast<std::size_t>(p)].owner = p;

  for (int cls = 0; cls < data.class_count; ++cls) {
    const auto& idx = by_class[static_cast<std::size_t>(cls)];
    if (idx.empty()) continue;
    RngStream stream(make_key({seed, tag("dirichlet"), static_cast<std::uint64_t>(cls)}));
    const std::vector<double> p = stream.next_dirichlet(alpha, participants);
    const auto counts = quota_counts(p, idx.size());
    std::size_t begin = 0;
    for (int owner = 0; owner < participants; ++owner) {
      const std::size_t count = counts[static_cast<std::size_t>(owner)];
      auto& dst = shards[static_cast<std::size_t>(owner)].indices;
      dst.insert(dst.end(), idx.begin() + begin, idx.begin() + begin + count);
      begin += count;
    }
  }
  return shards;
}

BatchIterator::BatchIterator(const Dataset* data, std::vector<std::uint32_t> indices,
                             std::uint64_t stream_key, int batch_size)
    : data_(data), indices_(std::move(indices)), key_(stream_key),
      batch_size_(batch_size) {
  if (indices_.empty()) throw std::invalid_argument("BatchIterator: empty shard");
  if (batch_size_ < 1) throw std::invalid_argument("BatchIterator: bad batch size");
  reshuffle();
}

void BatchIterator::reshuffle() {
  RngStream stream(make_key({key_, tag("epoch"), epoch_}));
  stream.shuffle(indices_);
  pos_ = 0;
}

BatchIterator::Batch BatchIterator::next() {
  if (pos_ >= indices_.size()) {
    ++epoch_;
    reshuffle();
  }
  const std::size_t count = std::min<std::size_t>(batch_size_, indices_.size() - pos_);
  const std::size_t dim = data_->features.cols;
  Batch batch;
  batch.features = Matrix(count, dim);
  batch.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint32_t src = indices_[pos_ + r];
    const double* row = data_->features.row(src);
    std::copy(row, row + dim, batch.features.row(r));
    batch.labels[r] = data_->labels[src];
  }
  pos_ += count;
  return batch;
}

namespace {

constexpr char kMagic[4] = {'P', 'E', 'W', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_dataset(const Dataset& data, const std::string& path) {
  std::string buf;
  buf.reserve(16 + data.size() * 42);
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u64(buf, data.size());
  put_u16(buf, static_cast<std::uint16_t>(data.features.cols));
  put_u16(buf, static_cast<std::uint16_t>(data.class_count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* row = data.features.row(i);
    for (std::size_t j = 0; j < data.features.cols; ++j) put_f64(buf, row[j]);
    put_u16(buf, static_cast<std::uint16_t>(data.labels[i]));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 18 || std::memcmp(p, kMagic, 4) != 0)
    throw IoError("not a dataset file: " + path);
  if (get_u16(p + 4) != kVersion) throw IoError("unsupported dataset version: " + path);
  const std::uint64_t n = get_u64(p + 6);
  const std::uint16_t dim = get_u16(p + 14);
  const std::uint16_t classes = get_u16(p + 16);
  const std::size_t record = 8u * dim + 2u;
  if (buf.size() != 18 + n * record) throw IoError("truncated dataset file: " + path);

  Dataset data;
  data.class_count = classes;
  data.features = Matrix(n, dim);
  data.labels.resize(n);
  const unsigned char* cur = p + 18;
  for (std::uint64_t i = 0; i < n; ++i) {
    double* row = data.features.row(i);
    for (std::uint16_t j = 0; j < dim; ++j) {
      row[j] = std::bit_cast<double>(get_u64(cur));
      cur += 8;
    }
    data.labels[i] = get_u16(cur);
    cur += 2;
  }
  return data;
}

}  // namespace pews
