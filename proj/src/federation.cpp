#include "pews/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pews/rng.hpp"

namespace pews {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FedAvg: return "fedavg";
    case Algorithm::FedProx: return "fedprox";
    case Algorithm::FedPews: return "fedpews";
    case Algorithm::FedPewsFixed: return "fedpews_fixed";
  }
  return "?";
}

std::string to_string(BaseOptimizer b) {
  return b == BaseOptimizer::FedAvg ? "fedavg" : "fedprox";
}

void ExperimentConfig::validate() const {
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (warmup_rounds < 0 || warmup_rounds > rounds)
    throw ConfigError("warmup_rounds must lie in [0, rounds]");
  if (local_steps < 1) throw ConfigError("local_steps must be >= 1");
  if (!(local_lr > 0.0)) throw ConfigError("local_lr must be positive");
  if (!(global_lr > 0.0)) throw ConfigError("global_lr must be positive");
  if (!(mask_lr > 0.0)) throw ConfigError("mask_lr must be positive");
  if (diversity_weight < 0.0) throw ConfigError("lambda must be >= 0");
  if (prox_mu < 0.0) throw ConfigError("mu must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (participants < 1) throw ConfigError("participants must be >= 1");
  if (!(participation_rate > 0.0) || participation_rate > 1.0)
    throw ConfigError("participation_rate must lie in (0, 1]");
  if (!(target_accuracy > 0.0) || target_accuracy > 100.0)
    throw ConfigError("target_accuracy must lie in (0, 100]");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (model_dims.size() < 2) throw ConfigError("model_dims needs >= 2 entries");
  for (int d : model_dims)
    if (d < 1) throw ConfigError("model_dims entries must be >= 1");
  if (partition == PartitionMode::EvenOdd && participants != 2)
    throw ConfigError("partition even-odd requires participants = 2");
  if (partition == PartitionMode::Dirichlet && !(dirichlet_alpha > 0.0))
    throw ConfigError("partition dirichlet:alpha requires alpha > 0");
  if (!(cluster_std > 0.0)) throw ConfigError("cluster_std must be positive");
  if (dataset == DatasetMode::File && dataset_path.empty())
    throw ConfigError("dataset file path is empty");
  if (!fixed_fractions.empty()) {
    if (fixed_fractions.size() != static_cast<std::size_t>(participants))
      throw ConfigError("fixed_fractions must list one value per participant");
    double sum = 0.0;
    for (double f : fixed_fractions) {
      if (!(f > 0.0)) throw ConfigError("fixed_fractions must be positive");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("fixed_fractions must sum to 1");
  }
}

std::map<std::string, std::string> ExperimentConfig::snapshot() const {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  std::map<std::string, std::string> kv;
  kv["algorithm"] = to_string(algorithm);
  kv["base_optimizer"] = to_string(base_optimizer);
  kv["rounds"] = std::to_string(rounds);
  kv["warmup_rounds"] = std::to_string(warmup_rounds);
  kv["local_steps"] = std::to_string(local_steps);
  kv["local_lr"] = fmt(local_lr);
  kv["global_lr"] = fmt(global_lr);
  kv["mask_lr"] = fmt(mask_lr);
  kv["lambda"] = fmt(diversity_weight);
  kv["mu"] = fmt(prox_mu);
  kv["batch_size"] = std::to_string(batch_size);
  kv["participants"] = std::to_string(participants);
  kv["participation_rate"] = fmt(participation_rate);
  kv["target_accuracy"] = fmt(target_accuracy);
  kv["seed"] = std::to_string(seed);
  switch (dataset) {
    case DatasetMode::Synthetic32k: kv["dataset"] = "synthetic-32k"; break;
    case DatasetMode::Synthetic3_2k: kv["dataset"] = "synthetic-3.2k"; break;
    case DatasetMode::File: kv["dataset"] = dataset_path; break;
  }
  switch (partition) {
    case PartitionMode::EvenOdd: kv["partition"] = "even-odd"; break;
    case PartitionMode::PerClass: kv["partition"] = "per-class"; break;
    case PartitionMode::Dirichlet:
      kv["partition"] = "dirichlet:" + fmt(dirichlet_alpha);
      break;
  }
  return kv;
}

MaskProbabilities exclusion_prob(const MaskProbabilities& global_theta,
                                 const MaskProbabilities& theta_i,
                                 int participants) {
  if (participants < 2)
    throw std::invalid_argument("exclusion_prob: needs >= 2 participants");
  if (global_theta.values.size() != theta_i.values.size())
    throw std::invalid_argument("exclusion_prob: length mismatch");
  const double n = static_cast<double>(participants);
  MaskProbabilities out;
  out.values.resize(global_theta.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double v = (n * global_theta.values[i] - theta_i.values[i]) / (n - 1.0);
    out.values[i] = std::clamp(v, 1e-6, 1.0 - 1e-6);
  }
  return out;
}

void update_global_theta(ServerState& server,
                         const std::vector<std::pair<int, MaskProbabilities>>& uploads) {
  if (uploads.empty()) return;
  const std::size_t h = server.global_theta.values.size();
  std::vector<double> acc(h, 0.0);
  for (const auto& [id, theta] : uploads) {
    if (theta.values.size() != h)
      throw std::invalid_argument("update_global_theta: length mismatch");
    server.client_theta[static_cast<std::size_t>(id)] = theta;
    for (std::size_t i = 0; i < h; ++i) acc[i] += theta.values[i];
  }
  const double inv = 1.0 / static_cast<double>(uploads.size());
  for (std::size_t i = 0; i < h; ++i) server.global_theta.values[i] = acc[i] * inv;
}

ParamVector aggregate_masked(const ParamVector& global,
                             const std::vector<ClientUpdate>& updates,
                             double global_lr) {
  if (updates.empty())
    throw std::invalid_argument("aggregate_masked: no updates");
  for (const ClientUpdate& u : updates)
    if (u.params.size() != global.size() || u.mask.values.size() != global.size())
      throw std::invalid_argument("aggregate_masked: length mismatch");

  ParamVector out(global.size());
  for (std::size_t l = 0; l < global.size(); ++l) {
    double sum = 0.0;
    int coverage = 0;
    for (const ClientUpdate& u : updates) {
      if (u.mask.values[l]) {
        sum += u.params[l];
        ++coverage;
      }
    }
    out[l] = coverage > 0
                 ? global[l] - global_lr * (global[l] - sum / coverage)
                 : global[l];
  }
  return out;
}

std::vector<int> sample_participants(int participants, double rate,
                                     std::uint64_t seed, int round) {
  if (!(rate > 0.0) || rate > 1.0)
    throw std::invalid_argument("sample_participants: rate must lie in (0, 1]");
  const int count = std::min(
      participants,
      std::max(1, static_cast<int>(std::ceil(rate * participants))));
  std::vector<int> pool(static_cast<std::size_t>(participants));
  std::iota(pool.begin(), pool.end(), 0);
  if (count == participants) return pool;

  RngStream stream(make_key({seed, tag("participation"),
                             static_cast<std::uint64_t>(round)}));
  for (int i = 0; i < count; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        stream.next_below(static_cast<std::uint64_t>(participants - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::uint64_t mask_stream_key(std::uint64_t seed, int client, int round,
                              int step, int phase) {
  return make_key({seed, tag("mask"), static_cast<std::uint64_t>(client),
                   static_cast<std::uint64_t>(round),
                   static_cast<std::uint64_t>(step),
                   static_cast<std::uint64_t>(phase)});
}

std::uint64_t batch_stream_key(std::uint64_t seed, int client) {
  return make_key({seed, tag("batches"), static_cast<std::uint64_t>(client)});
}

namespace {

RngStream mask_stream(const ExperimentConfig& cfg, int client, int round, int step,
                      int phase) {
  return RngStream(mask_stream_key(cfg.seed, client, round, step, phase));
}

void add_prox_term(ParamVector& grad, const ParamVector& x, const ParamVector& anchor,
                   double mu) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += mu * (x[i] - anchor[i]);
}

}  // namespace

PewsRoundResult local_round_pews(const ModelSpec& spec, const ExperimentConfig& cfg,
                                 ClientState& client, const ParamVector& global,
                                 const MaskProbabilities& theta_excl, int round) {
  ParamVector x = global;
  const double lambda = cfg.participants >= 2 ? cfg.diversity_weight : 0.0;
  const double mu =
      cfg.base_optimizer == BaseOptimizer::FedProx ? cfg.prox_mu : 0.0;

  for (int k = 1; k <= cfg.local_steps; ++k) {
    const BatchIterator::Batch batch = client.batches.next();

    // Procedure I: freeze x, step the mask scores.
    const MaskProbabilities theta = sigmoid_probs(client.scores);
    RngStream s1 = mask_stream(cfg, client.id, round, k, 0);
    const NeuronMask mask1 = sample_neuron_mask(theta, s1);
    const ForwardTrace trace1 = forward(spec, x, mask1, batch.features);
    const Gradients g1 = backward(spec, x, mask1, trace1, batch.labels);
    client.scores =
        ste_score_update(client.scores, g1.mask, theta, theta_excl, lambda, cfg.mask_lr);

    // Procedure II: freeze the scores, step the weights on the same batch.
    const MaskProbabilities theta2 = sigmoid_probs(client.scores);
    RngStream s2 = mask_stream(cfg, client.id, round, k, 1);
    const NeuronMask mask2 = sample_neuron_mask(theta2, s2);
    const ForwardTrace trace2 = forward(spec, x, mask2, batch.features);
    Gradients g2 = backward(spec, x, mask2, trace2, batch.labels);
    if (mu != 0.0) add_prox_term(g2.params, x, global, mu);
    x = sgd_step(x, g2.params, cfg.local_lr);
  }

  const MaskProbabilities theta_up = sigmoid_probs(client.scores);
  RngStream su = mask_stream(cfg, client.id, round, cfg.local_steps, 2);
  const NeuronMask upload = sample_neuron_mask(theta_up, su);
  client.params = x;
  return {std::move(x), expand_to_param_mask(upload, spec), theta_up};
}

ParamVector local_round_standard(const ModelSpec& spec, const ExperimentConfig& cfg,
                                 ClientState& client, const ParamVector& global,
                                 double mu) {
  ParamVector x = global;
  const NeuronMask ones = all_ones_mask(spec);
  for (int k = 1; k <= cfg.local_steps; ++k) {
    const BatchIterator::Batch batch = client.batches.next();
    const ForwardTrace trace = forward(spec, x, ones, batch.features);
    Gradients g = backward(spec, x, ones, trace, batch.labels);
    if (mu != 0.0) add_prox_term(g.params, x, global, mu);
    x = sgd_step(x, g.params, cfg.local_lr);
  }
  client.params = x;
  return x;
}

PewsRoundResult local_round_fixed(const ModelSpec& spec, const ExperimentConfig& cfg,
                                  ClientState& client, const ParamVector& global,
                                  double mu) {
  ParamVector x = global;
  for (int k = 1; k <= cfg.local_steps; ++k) {
    const BatchIterator::Batch batch = client.batches.next();
    const ForwardTrace trace = forward(spec, x, client.fixed_mask, batch.features);
    Gradients g = backward(spec, x, client.fixed_mask, trace, batch.labels);
    if (mu != 0.0) add_prox_term(g.params, x, global, mu);
    x = sgd_step(x, g.params, cfg.local_lr);
  }
  client.params = x;
  return {std::move(x), expand_to_param_mask(client.fixed_mask, spec), {}};
}

Experiment::Experiment(const ExperimentConfig& cfg)
    : cfg_(cfg), spec_(ModelSpec::mlp(cfg.model_dims)) {
  cfg_.validate();

  switch (cfg_.dataset) {
    case DatasetMode::Synthetic32k:
      train_ = gen_synthetic(32000, make_key({cfg_.seed, tag("train-data")}),
                             cfg_.cluster_std);
      break;
    case DatasetMode::Synthetic3_2k:
      train_ = gen_synthetic(3200, make_key({cfg_.seed, tag("train-data")}),
                             cfg_.cluster_std);
      break;
    case DatasetMode::File:
      train_ = load_dataset(cfg_.dataset_path);
      break;
  }
  test_ = gen_synthetic(cfg_.test_size, make_key({cfg_.seed, tag("test-data")}),
                        cfg_.cluster_std);
  if (train_.features.cols != static_cast<std::size_t>(spec_.input_dim()))
    throw ConfigError("model_dims input does not match the dataset feature dim");
  if (train_.class_count != spec_.class_count())
    throw ConfigError("model_dims output does not match the dataset class count");

  std::vector<Shard> shards;
  switch (cfg_.partition) {
    case PartitionMode::EvenOdd: {
      std::vector<int> assignment(static_cast<std::size_t>(train_.class_count));
      for (int c = 0; c < train_.class_count; ++c)
        assignment[static_cast<std::size_t>(c)] = c % 2;
      shards = split_by_class(train_, assignment, cfg_.participants);
      break;
    }
    case PartitionMode::PerClass: {
      if (cfg_.participants != train_.class_count)
        throw ConfigError("partition per-class requires participants = class count");
      std::vector<int> assignment(static_cast<std::size_t>(train_.class_count));
      for (int c = 0; c < train_.class_count; ++c)
        assignment[static_cast<std::size_t>(c)] = c;
      shards = split_by_class(train_, assignment, cfg_.participants);
      break;
    }
    case PartitionMode::Dirichlet:
      shards = dirichlet_partition(train_, cfg_.participants, cfg_.dirichlet_alpha,
                                   make_key({cfg_.seed, tag("partition")}));
      break;
  }

  server_.global_params = init_params(spec_, cfg_.seed);
  const bool pews = cfg_.algorithm == Algorithm::FedPews;
  const std::size_t h = spec_.hidden_count();
  if (pews) {
    // s_g^0 = 0, so theta_g^0 = 0.5 per neuron.
    server_.global_theta.values.assign(h, 0.5);
    server_.client_theta.assign(static_cast<std::size_t>(cfg_.participants),
                                MaskProbabilities{std::vector<double>(h, 0.5)});
  }

  std::vector<NeuronMask> fixed;
  if (cfg_.algorithm == Algorithm::FedPewsFixed)
    fixed = fixed_partition_masks(spec_, cfg_.participants, cfg_.fixed_fractions);

  clients_.reserve(static_cast<std::size_t>(cfg_.participants));
  for (int i = 0; i < cfg_.participants; ++i) {
    ClientState c;
    c.id = i;
    c.shard = shards[static_cast<std::size_t>(i)];
    if (c.shard.indices.empty())
      throw ConfigError("participant " + std::to_string(i) +
                        " received an empty shard");
    c.params = server_.global_params;
    if (pews) c.scores.values.assign(h, 0.0);  // s_i^{1,0} <- s_g^0
    if (!fixed.empty()) c.fixed_mask = fixed[static_cast<std::size_t>(i)];
    c.batches = BatchIterator(&train_, c.shard.indices,
                              batch_stream_key(cfg_.seed, i), cfg_.batch_size);
    clients_.push_back(std::move(c));
  }

  eval_mask_ = all_ones_mask(spec_);
  ones_param_mask_ = all_ones_param_mask(spec_);
}

RoundRecord Experiment::run_round(int round) {
  if (round < 1 || round > cfg_.rounds)
    throw std::invalid_argument("run_round: round out of range");
  const bool pews_alg = cfg_.algorithm == Algorithm::FedPews ||
                        cfg_.algorithm == Algorithm::FedPewsFixed;
  const bool warmup = pews_alg && round <= cfg_.warmup_rounds;

  const std::vector<int> parts =
      cfg_.participation_rate >= 1.0
          ? sample_participants(cfg_.participants, 1.0, cfg_.seed, round)
          : sample_participants(cfg_.participants, cfg_.participation_rate,
                                cfg_.seed, round);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ClientUpdate> updates(parts.size());
  std::vector<MaskProbabilities> thetas(parts.size());

  auto run_one = [&](std::size_t idx) {
    ClientState& client = clients_[static_cast<std::size_t>(parts[idx])];
    if (warmup && cfg_.algorithm == Algorithm::FedPews) {
      const MaskProbabilities excl =
          cfg_.participants >= 2
              ? exclusion_prob(server_.global_theta,
                               server_.client_theta[static_cast<std::size_t>(client.id)],
                               cfg_.participants)
              : server_.client_theta[static_cast<std::size_t>(client.id)];
      PewsRoundResult r =
          local_round_pews(spec_, cfg_, client, server_.global_params, excl, round);
      updates[idx] = {std::move(r.params), std::move(r.mask)};
      thetas[idx] = std::move(r.theta);
    } else if (warmup) {
      const double mu =
          cfg_.base_optimizer == BaseOptimizer::FedProx ? cfg_.prox_mu : 0.0;
      PewsRoundResult r =
          local_round_fixed(spec_, cfg_, client, server_.global_params, mu);
      updates[idx] = {std::move(r.params), std::move(r.mask)};
    } else {
      double mu = 0.0;
      if (cfg_.algorithm == Algorithm::FedProx) mu = cfg_.prox_mu;
      if (pews_alg && cfg_.base_optimizer == BaseOptimizer::FedProx)
        mu = cfg_.prox_mu;
      ParamVector p =
          local_round_standard(spec_, cfg_, client, server_.global_params, mu);
      updates[idx] = {std::move(p), ones_param_mask_};
    }
  };

  if (cfg_.parallel_clients && parts.size() > 1) {
    std::vector<std::thread> pool;
    pool.reserve(parts.size());
    for (std::size_t idx = 0; idx < parts.size(); ++idx)
      pool.emplace_back(run_one, idx);
    for (std::thread& t : pool) t.join();
  } else {
    for (std::size_t idx = 0; idx < parts.size(); ++idx) run_one(idx);
  }

  server_.global_params = aggregate_masked(server_.global_params, updates,
                                           cfg_.global_lr);
  if (warmup && cfg_.algorithm == Algorithm::FedPews) {
    std::vector<std::pair<int, MaskProbabilities>> uploads;
    uploads.reserve(parts.size());
    for (std::size_t idx = 0; idx < parts.size(); ++idx)
      uploads.emplace_back(parts[idx], std::move(thetas[idx]));
    update_global_theta(server_, uploads);
  }
  server_.round = round;
  const auto t1 = std::chrono::steady_clock::now();

  double density = 0.0;
  for (const ClientUpdate& u : updates) {
    std::size_t on = 0;
    for (std::uint8_t b : u.mask.values) on += b;
    density += static_cast<double>(on) / static_cast<double>(u.mask.values.size());
  }
  density /= static_cast<double>(updates.size());

  if (round % cfg_.eval_every == 0 || round == cfg_.rounds) {
    const EvalResult ev = evaluate(spec_, server_.global_params, eval_mask_, test_);
    last_acc_pct_ = ev.accuracy * 100.0;
    last_loss_ = ev.mean_loss;
  }

  RoundRecord rec;
  rec.round = round;
  rec.accuracy_pct = last_acc_pct_;
  rec.loss = last_loss_;
  rec.elapsed_ms =
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count() / 1e6;
  rec.warmup = warmup;
  rec.uploaded_mask_density = density;
  return rec;
}

RunLog Experiment::run_all() {
  RunLog log;
  log.config = cfg_.snapshot();
  log.seed = cfg_.seed;
  log.records.reserve(static_cast<std::size_t>(cfg_.rounds));
  for (int t = 1; t <= cfg_.rounds; ++t) log.records.push_back(run_round(t));
  log.model_digest = param_digest(server_.global_params);
  return log;
}

RunLog run_experiment(const ExperimentConfig& cfg) {
  Experiment experiment(cfg);
  return experiment.run_all();
}

}  // namespace pews
