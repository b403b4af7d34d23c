#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pews/linalg.hpp"
#include "pews/model.hpp"
#include "pews/types.hpp"

namespace pews {

struct RoundRecord {
  int round = 0;
  double accuracy_pct = 0.0;  // global test accuracy, percent
  double loss = 0.0;          // global test mean loss
  double elapsed_ms = 0.0;    // local training + aggregation wall clock
  bool warmup = false;
  // Mean fraction of active parameters across the round's uploads. 1.0 for
  // every post-warmup round; not serialized to CSV.
  double uploaded_mask_density = 1.0;
};

struct RunLog {
  std::map<std::string, std::string> config;  // key/value snapshot
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;           // one per round
  std::string model_digest;                   // hex hash of final global params
};

// Smallest round whose accuracy reaches the target; empty if never reached.
std::optional<int> rounds_to_target(const std::vector<RoundRecord>& records,
                                    double target_pct);
std::optional<int> rounds_to_target(const RunLog& log, double target_pct);

struct SeedSummary {
  int seeds_total = 0;
  int seeds_reached = 0;
  std::optional<double> rounds_mean;   // over seeds that reached the target
  std::optional<double> rounds_std;    // sample std; absent when < 2 reached
  double final_acc_mean = 0.0;         // over all seeds
  std::optional<double> final_acc_std; // sample std; absent when < 2 seeds
};

SeedSummary summarize_seeds(const std::vector<RunLog>& logs, double target_pct);

// Per hidden neuron, the sum of post-mask ReLU activations over a batch.
std::vector<double> activation_profile(const ModelSpec& spec,
                                       const ParamVector& params,
                                       const NeuronMask& mask,
                                       const Matrix& batch);

// Hex FNV-1a fingerprint of a parameter vector's little-endian bytes.
std::string param_digest(const ParamVector& params);

}  // namespace pews
