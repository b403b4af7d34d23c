#include "pews/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "pews/rng.hpp"

namespace pews {

std::optional<int> rounds_to_target(const std::vector<RoundRecord>& records,
                                    double target_pct) {
  for (const RoundRecord& rec : records)
    if (rec.accuracy_pct >= target_pct) return rec.round;
  return std::nullopt;
}

std::optional<int> rounds_to_target(const RunLog& log, double target_pct) {
  return rounds_to_target(log.records, target_pct);
}

namespace {

struct MeanStd {
  double mean = 0.0;
  std::optional<double> std;  // sample std, needs >= 2 values
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

}  // namespace

SeedSummary summarize_seeds(const std::vector<RunLog>& logs, double target_pct) {
  if (logs.empty()) throw std::invalid_argument("summarize_seeds: no logs");
  SeedSummary summary;
  summary.seeds_total = static_cast<int>(logs.size());

  std::vector<double> reached;
  std::vector<double> finals;
  for (const RunLog& log : logs) {
    if (const auto r = rounds_to_target(log, target_pct))
      reached.push_back(static_cast<double>(*r));
    if (!log.records.empty()) finals.push_back(log.records.back().accuracy_pct);
  }
  summary.seeds_reached = static_cast<int>(reached.size());
  if (!reached.empty()) {
    const MeanStd ms = mean_std(reached);
    summary.rounds_mean = ms.mean;
    summary.rounds_std = ms.std;
  }
  if (!finals.empty()) {
    const MeanStd ms = mean_std(finals);
    summary.final_acc_mean = ms.mean;
    summary.final_acc_std = ms.std;
  }
  return summary;
}

std::vector<double> activation_profile(const ModelSpec& spec,
                                       const ParamVector& params,
                                       const NeuronMask& mask,
                                       const Matrix& batch) {
  const ForwardTrace trace = forward(spec, params, mask, batch);
  std::vector<double> profile(spec.hidden_count(), 0.0);
  for (std::size_t l = 0; l + 1 < spec.layer_count(); ++l) {
    const Matrix& post = trace.activations[l + 1];
    double* dst = profile.data() + spec.hidden_offset(l);
    for (std::size_t r = 0; r < post.rows; ++r) {
      const double* row = post.row(r);
      for (std::size_t k = 0; k < post.cols; ++k) dst[k] += row[k];
    }
  }
  return profile;
}

std::string param_digest(const ParamVector& params) {
  ByteDigest digest;
  for (double v : params) digest.add_f64(v);
  return digest.hex();
}

}  // namespace pews
