#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pews/data.hpp"
#include "pews/masking.hpp"
#include "pews/metrics.hpp"
#include "pews/model.hpp"
#include "pews/types.hpp"

namespace pews {

enum class Algorithm { FedAvg, FedProx, FedPews, FedPewsFixed };
enum class BaseOptimizer { FedAvg, FedProx };
enum class DatasetMode { Synthetic32k, Synthetic3_2k, File };
enum class PartitionMode { EvenOdd, PerClass, Dirichlet };

std::string to_string(Algorithm a);
std::string to_string(BaseOptimizer b);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::FedAvg;
  // Post-warmup optimizer for the fedpews variants; fedavg/fedprox ignore it.
  BaseOptimizer base_optimizer = BaseOptimizer::FedAvg;

  int rounds = 200;        // T
  int warmup_rounds = 0;   // W
  int local_steps = 10;    // K
  double local_lr = 0.01;
  double global_lr = 1.0;
  double mask_lr = 0.1;
  double diversity_weight = 0.0;  // lambda
  double prox_mu = 0.0;
  int batch_size = 8;
  int participants = 2;    // N
  double participation_rate = 1.0;
  std::vector<double> fixed_fractions;  // fedpews_fixed; empty = equal split
  double target_accuracy = 99.0;
  std::uint64_t seed = 1;

  DatasetMode dataset = DatasetMode::Synthetic3_2k;
  std::string dataset_path;  // DatasetMode::File
  PartitionMode partition = PartitionMode::EvenOdd;
  double dirichlet_alpha = 0.5;
  double cluster_std = 0.35;
  std::size_t test_size = 4000;
  std::vector<int> model_dims = {5, 32, 64, 128, 32, 4};

  int eval_every = 1;
  bool parallel_clients = false;

  void validate() const;  // throws ConfigError
  std::map<std::string, std::string> snapshot() const;
};

struct ClientState {
  int id = 0;
  Shard shard;
  ParamVector params;
  MaskScores scores;      // fedpews only
  NeuronMask fixed_mask;  // fedpews_fixed only
  BatchIterator batches;
};

struct ServerState {
  ParamVector global_params;
  MaskProbabilities global_theta;                // fedpews only
  std::vector<MaskProbabilities> client_theta;   // last upload per client
  int round = 0;
};

struct ClientUpdate {
  ParamVector params;
  ParamMask mask;
};

// theta_{g \ i} = (N * theta_g - theta_i) / (N - 1), clamped into
// [1e-6, 1 - 1e-6]. Exact algebra when theta_g is the mean over N clients.
MaskProbabilities exclusion_prob(const MaskProbabilities& global_theta,
                                 const MaskProbabilities& theta_i,
                                 int participants);

// theta_g <- mean of the uploaded thetas; stored per-client thetas of
// non-participants are left untouched. No-op on an empty upload set.
void update_global_theta(ServerState& server,
                         const std::vector<std::pair<int, MaskProbabilities>>& uploads);

// Coordinate-wise masked mean pulled toward the previous global model:
//   x_g(l) <- x_g(l) - eta * (x_g(l) - sum_i x_i(l) m_i(l) / sum_i m_i(l))
// Coordinates nobody covered keep their previous value.
ParamVector aggregate_masked(const ParamVector& global,
                             const std::vector<ClientUpdate>& updates,
                             double global_lr);

// max(1, ceil(rate * N)) distinct clients, uniform, deterministic per
// (seed, round). Returned sorted.
std::vector<int> sample_participants(int participants, double rate,
                                     std::uint64_t seed, int round);

// Stream keys used by the round machinery. Mask phases: 0 = Procedure I,
// 1 = Procedure II, 2 = upload sample.
std::uint64_t mask_stream_key(std::uint64_t seed, int client, int round,
                              int step, int phase);
std::uint64_t batch_stream_key(std::uint64_t seed, int client);

struct PewsRoundResult {
  ParamVector params;
  ParamMask mask;
  MaskProbabilities theta;
};

// Warmup round of the mask-learning variant: per local step, Procedure I
// steps the mask scores on one batch at frozen weights, then Procedure II
// steps the weights on the same batch under a fresh mask from the updated
// scores. Returns the trained weights, a freshly sampled upload mask and
// sigmoid(final scores).
PewsRoundResult local_round_pews(const ModelSpec& spec, const ExperimentConfig& cfg,
                                 ClientState& client, const ParamVector& global,
                                 const MaskProbabilities& theta_excl, int round);

// K SGD steps on grad f_i (+ mu * (x - x_g) when mu != 0), all neurons active.
ParamVector local_round_standard(const ModelSpec& spec, const ExperimentConfig& cfg,
                                 ClientState& client, const ParamVector& global,
                                 double mu);

// Warmup round of the fixed-partition variant: Procedure II only, under the
// server-assigned constant neuron mask.
PewsRoundResult local_round_fixed(const ModelSpec& spec, const ExperimentConfig& cfg,
                                  ClientState& client, const ParamVector& global,
                                  double mu);

// One seeded federated run: owns the data, the server and the clients.
class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg);

  RoundRecord run_round(int round);
  RunLog run_all();

  const ExperimentConfig& config() const { return cfg_; }
  const ModelSpec& model() const { return spec_; }
  const ServerState& server() const { return server_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  const Dataset& train_data() const { return train_; }
  const Dataset& test_data() const { return test_; }

 private:
  ExperimentConfig cfg_;
  ModelSpec spec_;
  Dataset train_;
  Dataset test_;
  ServerState server_;
  std::vector<ClientState> clients_;
  NeuronMask eval_mask_;
  ParamMask ones_param_mask_;
  double last_acc_pct_ = 0.0;
  double last_loss_ = 0.0;
};

RunLog run_experiment(const ExperimentConfig& cfg);

}  // namespace pews
