// Acceptance suite: one pass/fail line per criterion. Run with no arguments
// for the full battery or with a criterion number (1-10) for a single one.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>

#include "pews/cli.hpp"
#include "pews/config.hpp"
#include "pews/data.hpp"
#include "pews/federation.hpp"
#include "pews/masking.hpp"
#include "pews/metrics.hpp"
#include "pews/model.hpp"
#include "pews/report.hpp"
#include "pews/rng.hpp"
#include "oracles.hpp"

using namespace pews;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

ExperimentConfig n2_base() {
  ExperimentConfig cfg;
  cfg.dataset = DatasetMode::Synthetic3_2k;
  cfg.partition = PartitionMode::EvenOdd;
  cfg.participants = 2;
  cfg.batch_size = 8;
  cfg.local_lr = 0.01;
  cfg.local_steps = 10;
  cfg.rounds = 400;
  cfg.global_lr = 0.1;
  cfg.mask_lr = 0.1;
  cfg.target_accuracy = 99.0;
  return cfg;
}

std::vector<RunLog> battery(const ExperimentConfig& cfg) {
  ConfigFile cf;
  cf.base = cfg;
  cf.seeds = kSeeds;
  return run_battery(cf, /*parallel_seeds=*/true);
}

// Rounds-to-target mean with non-reaching seeds censored at T+1, so the
// cross-algorithm ordering is defined even when some seeds never reach.
double censored_mean_rounds(const std::vector<RunLog>& logs, double target, int rounds) {
  double sum = 0.0;
  for (const RunLog& log : logs) {
    const auto r = rounds_to_target(log, target);
    sum += r ? static_cast<double>(*r) : static_cast<double>(rounds + 1);
  }
  return sum / static_cast<double>(logs.size());
}

double mean_final_acc(const std::vector<RunLog>& logs) {
  double sum = 0.0;
  for (const RunLog& log : logs) sum += log.records.back().accuracy_pct;
  return sum / static_cast<double>(logs.size());
}

std::string describe(const char* name, const std::vector<RunLog>& logs,
                     double target, int rounds) {
  const SeedSummary s = summarize_seeds(logs, target);
  std::ostringstream os;
  os << name << ": reached " << s.seeds_reached << "/" << s.seeds_total;
  if (s.rounds_mean) os << ", rounds " << *s.rounds_mean;
  os << ", censored " << censored_mean_rounds(logs, target, rounds);
  os << ", final " << s.final_acc_mean << "%";
  return os.str();
}

bool bitwise_equal(const RunLog& a, const RunLog& b) {
  if (a.records.size() != b.records.size() || a.model_digest != b.model_digest)
    return false;
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].accuracy_pct != b.records[i].accuracy_pct ||
        a.records[i].loss != b.records[i].loss)
      return false;
  return true;
}

// ---- criterion 1: direction of effect, N=2 even/odd -------------------

Outcome criterion1() {
  ExperimentConfig pews = n2_base();
  pews.algorithm = Algorithm::FedPews;
  pews.warmup_rounds = 40;  // tau = 0.1
  pews.diversity_weight = 2.0;
  ExperimentConfig avg = n2_base();
  avg.algorithm = Algorithm::FedAvg;

  const auto pews_logs = battery(pews);
  const auto avg_logs = battery(avg);

  const double pews_rounds = censored_mean_rounds(pews_logs, 99.0, pews.rounds);
  const double avg_rounds = censored_mean_rounds(avg_logs, 99.0, avg.rounds);
  const double pews_final = mean_final_acc(pews_logs);
  const double avg_final = mean_final_acc(avg_logs);

  Outcome out;
  out.pass = pews_rounds < avg_rounds && pews_final >= avg_final - 0.1;
  out.detail = describe("fedpews", pews_logs, 99.0, pews.rounds) + " | " +
               describe("fedavg", avg_logs, 99.0, avg.rounds);
  return out;
}

// ---- criterion 2: extreme heterogeneity, N=4 per-class ----------------

Outcome criterion2() {
  ExperimentConfig base = n2_base();
  base.partition = PartitionMode::PerClass;
  base.participants = 4;
  base.rounds = 250;
  base.global_lr = 1.0;
  base.diversity_weight = 0.0;

  ExperimentConfig pews = base;
  pews.algorithm = Algorithm::FedPews;
  pews.warmup_rounds = 50;  // tau = 0.2
  ExperimentConfig avg = base;
  avg.algorithm = Algorithm::FedAvg;

  const auto pews_logs = battery(pews);
  const auto avg_logs = battery(avg);
  const double gain = mean_final_acc(pews_logs) - mean_final_acc(avg_logs);

  Outcome out;
  out.pass = gain >= 15.0;
  std::ostringstream os;
  os << "final fedpews " << mean_final_acc(pews_logs) << "% vs fedavg "
     << mean_final_acc(avg_logs) << "% (gain " << gain << " pts, need >= 15)";
  out.detail = os.str();
  return out;
}

// ---- criterion 3: fedprox base optimizer -------------------------------

Outcome criterion3() {
  ExperimentConfig prox = n2_base();
  prox.algorithm = Algorithm::FedProx;
  prox.prox_mu = 0.01;

  ExperimentConfig pews = n2_base();
  pews.algorithm = Algorithm::FedPews;
  pews.base_optimizer = BaseOptimizer::FedProx;
  pews.prox_mu = 0.01;
  pews.warmup_rounds = 40;
  pews.diversity_weight = 2.0;

  const auto prox_logs = battery(prox);
  const auto pews_logs = battery(pews);
  const double prox_rounds = censored_mean_rounds(prox_logs, 99.0, prox.rounds);
  const double pews_rounds = censored_mean_rounds(pews_logs, 99.0, pews.rounds);

  Outcome out;
  out.pass = pews_rounds <= prox_rounds;
  out.detail = describe("fedpews+prox", pews_logs, 99.0, pews.rounds) + " | " +
               describe("fedprox", prox_logs, 99.0, prox.rounds);
  return out;
}

// ---- criterion 4: exact reduction equivalences --------------------------

Outcome criterion4() {
  ExperimentConfig avg = n2_base();
  avg.rounds = 20;

  ExperimentConfig pews = avg;
  pews.algorithm = Algorithm::FedPews;
  pews.warmup_rounds = 0;
  pews.diversity_weight = 2.0;

  ExperimentConfig prox = avg;
  prox.algorithm = Algorithm::FedProx;
  prox.prox_mu = 0.0;

  bool pass_a = true;
  bool pass_b = true;
  for (std::uint64_t seed : kSeeds) {
    ExperimentConfig a = avg, p = pews, x = prox;
    a.seed = p.seed = x.seed = seed;
    const RunLog la = run_experiment(a);
    if (!bitwise_equal(la, run_experiment(p))) pass_a = false;
    if (!bitwise_equal(la, run_experiment(x))) pass_b = false;
  }

  // all-ones aggregation with eta 1 vs the plain mean
  RngStream stream(tag("c4"));
  bool pass_c = true;
  double worst = 0.0;
  for (int it = 0; it < 20; ++it) {
    const std::size_t d = 512;
    ParamVector global(d);
    for (double& v : global) v = 4.0 * stream.next_double() - 2.0;
    std::vector<ClientUpdate> ups(3);
    for (ClientUpdate& u : ups) {
      u.params.resize(d);
      for (double& v : u.params) v = 4.0 * stream.next_double() - 2.0;
      u.mask.values.assign(d, 1);
    }
    const ParamVector agg = aggregate_masked(global, ups, 1.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double mean = (ups[0].params[i] + ups[1].params[i] + ups[2].params[i]) / 3;
      worst = std::max(worst, std::abs(agg[i] - mean));
    }
  }
  pass_c = worst < 1e-12;

  Outcome out;
  out.pass = pass_a && pass_b && pass_c;
  std::ostringstream os;
  os << "W=0 fedpews==fedavg: " << (pass_a ? "ok" : "MISMATCH")
     << "; mu=0 fedprox==fedavg: " << (pass_b ? "ok" : "MISMATCH")
     << "; all-ones eta=1 aggregation vs mean: max |diff| = " << worst;
  out.detail = os.str();
  return out;
}

// ---- criterion 5: gradient oracle on random tiny nets -------------------

Outcome criterion5() {
  RngStream stream(tag("c5"));
  double worst_x = 0.0;
  double worst_m = 0.0;
  for (int net = 0; net < 50; ++net) {
    std::vector<int> dims;
    const int layers = 2 + static_cast<int>(stream.next_below(2));  // 2..3
    for (int i = 0; i <= layers; ++i)
      dims.push_back(2 + static_cast<int>(stream.next_below(7)));  // 2..8
    const ModelSpec spec = ModelSpec::mlp(dims);

    ParamVector params(spec.param_count());
    for (double& v : params) v = 2.0 * stream.next_double() - 1.0;
    const std::size_t batch_rows = 3 + stream.next_below(4);
    Matrix batch(batch_rows, static_cast<std::size_t>(dims.front()));
    for (double& v : batch.data) v = 4.0 * stream.next_double() - 2.0;
    std::vector<int> labels(batch_rows);
    for (int& y : labels)
      y = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(dims.back())));
    NeuronMask mask;
    mask.values.resize(spec.hidden_count());
    std::vector<double> mask_real(spec.hidden_count());
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
      mask.values[i] = stream.next_below(2) ? 1 : 0;
      mask_real[i] = mask.values[i];
    }

    const ForwardTrace trace = forward(spec, params, mask, batch);
    const Gradients g = backward(spec, params, mask, trace, labels);

    const double h = 1e-5;
    for (std::size_t i = 0; i < spec.param_count(); ++i) {
      ParamVector up = params, dn = params;
      up[i] += h;
      dn[i] -= h;
      const double fd = (oracle::mlp_loss(spec, up, mask_real, batch, labels) -
                         oracle::mlp_loss(spec, dn, mask_real, batch, labels)) /
                        (2.0 * h);
      worst_x = std::max(worst_x, oracle::rel_err(g.params[i], fd));
    }
    for (std::size_t i = 0; i < spec.hidden_count(); ++i) {
      auto up = mask_real, dn = mask_real;
      up[i] += h;
      dn[i] -= h;
      const double fd = (oracle::mlp_loss(spec, params, up, batch, labels) -
                         oracle::mlp_loss(spec, params, dn, batch, labels)) /
                        (2.0 * h);
      worst_m = std::max(worst_m, oracle::rel_err(g.mask[i], fd));
    }
  }

  Outcome out;
  out.pass = worst_x < 1e-4 && worst_m < 1e-4;
  std::ostringstream os;
  os << "50 nets: max rel err grad_x " << worst_x << ", grad_mask " << worst_m
     << " (need < 1e-4)";
  out.detail = os.str();
  return out;
}

// ---- criterion 6: diversity bound and STE sign property -----------------

Outcome criterion6() {
  RngStream stream(tag("c6"));
  const std::size_t h = 64;
  bool bound_ok = true;
  for (int it = 0; it < 1000; ++it) {
    MaskProbabilities a{std::vector<double>(h)};
    MaskProbabilities b{std::vector<double>(h)};
    for (std::size_t i = 0; i < h; ++i) {
      a.values[i] = stream.next_double();
      b.values[i] = stream.next_double();
    }
    if (diversity_penalty(a, b).value > static_cast<double>(h)) bound_ok = false;
  }

  bool sign_ok = true;
  for (int it = 0; it < 1000; ++it) {
    MaskScores s{std::vector<double>(h)};
    std::vector<double> grad(h);
    for (std::size_t i = 0; i < h; ++i) {
      s.values[i] = 8.0 * stream.next_double() - 4.0;
      grad[i] = 2.0 * stream.next_double() - 1.0;
    }
    const MaskProbabilities theta = sigmoid_probs(s);
    const MaskScores next = ste_score_update(s, grad, theta, theta, 0.0, 0.1);
    for (std::size_t i = 0; i < h; ++i) {
      const double move = next.values[i] - s.values[i];
      if (grad[i] > 0.0 && !(move < 0.0)) sign_ok = false;
      if (grad[i] < 0.0 && !(move > 0.0)) sign_ok = false;
      if (grad[i] == 0.0 && move != 0.0) sign_ok = false;
    }
  }

  Outcome out;
  out.pass = bound_ok && sign_ok;
  out.detail = std::string("1000 pairs bound <= h: ") + (bound_ok ? "ok" : "FAIL") +
               "; lambda=0 update sign: " + (sign_ok ? "ok" : "FAIL");
  return out;
}

// ---- criterion 7: exhaustive mask expansion + forward equivalence -------

Outcome criterion7() {
  const ModelSpec spec = ModelSpec::mlp({2, 3, 3, 2});
  const std::size_t h = spec.hidden_count();  // 6
  RngStream stream(tag("c7"));

  bool expansion_ok = true;
  double worst = 0.0;
  for (std::uint32_t bits = 0; bits < (1u << h); ++bits) {
    NeuronMask mask;
    mask.values.resize(h);
    for (std::size_t i = 0; i < h; ++i) mask.values[i] = (bits >> i) & 1u;

    const ParamMask expanded = expand_to_param_mask(mask, spec);
    if (expanded.values != oracle::brute_param_mask(spec, mask).values)
      expansion_ok = false;

    ParamVector params(spec.param_count());
    for (double& v : params) v = 2.0 * stream.next_double() - 1.0;
    Matrix batch(4, 2);
    for (double& v : batch.data) v = 4.0 * stream.next_double() - 2.0;

    ParamVector masked = params;
    for (std::size_t i = 0; i < masked.size(); ++i) masked[i] *= expanded.values[i];
    const ForwardTrace a = forward(spec, params, mask, batch);
    const ForwardTrace b = forward(spec, masked, all_ones_mask(spec), batch);
    for (std::size_t i = 0; i < a.logits().data.size(); ++i)
      worst = std::max(worst, std::abs(a.logits().data[i] - b.logits().data[i]));
  }

  Outcome out;
  out.pass = expansion_ok && worst < 1e-12;
  std::ostringstream os;
  os << "64 masks: expansion " << (expansion_ok ? "exact" : "MISMATCH")
     << ", masked-forward max |diff| = " << worst;
  out.detail = os.str();
  return out;
}

// ---- criterion 8: partition properties -----------------------------------

Outcome criterion8() {
  bool ok = true;
  std::ostringstream os;

  auto is_partition = [](const std::vector<Shard>& shards, std::size_t total) {
    std::vector<int> seen(total, 0);
    for (const Shard& s : shards)
      for (std::uint32_t i : s.indices) {
        if (i >= total) return false;
        ++seen[i];
      }
    for (int c : seen)
      if (c != 1) return false;
    return true;
  };

  const Dataset data = gen_synthetic(3200, 5);
  ok &= is_partition(split_by_class(data, {0, 1, 0, 1}, 2), data.size());
  ok &= is_partition(split_by_class(data, {0, 1, 2, 3}, 4), data.size());

  for (double alpha : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const auto shards = dirichlet_partition(data, 6, alpha, 17);
    ok &= is_partition(shards, data.size());
    // quotas per class sum exactly to the class size
    std::array<std::size_t, 4> per_class{};
    for (const Shard& s : shards)
      for (std::uint32_t i : s.indices)
        ++per_class[static_cast<std::size_t>(data.labels[i])];
    for (std::size_t c : per_class) ok &= c == 800;
  }

  const ModelSpec spec = ModelSpec::synthetic();
  for (int n : {2, 4}) {
    const auto masks = fixed_partition_masks(spec, n, {});
    for (std::size_t j = 0; j < spec.hidden_count(); ++j) {
      int owners = 0;
      for (const NeuronMask& m : masks) owners += m.values[j];
      ok &= owners == 1;
    }
  }
  const auto uneq = fixed_partition_masks(spec, 2, {0.25, 0.75});
  for (std::size_t j = 0; j < spec.hidden_count(); ++j)
    ok &= (uneq[0].values[j] + uneq[1].values[j]) == 1;

  os << "split_by_class, dirichlet (5 alphas), fixed partitions (N=2,4, 25/75): "
     << (ok ? "all exact" : "FAIL");
  return {ok, os.str()};
}

// ---- criterion 9: determinism and parallel equivalence -------------------

Outcome criterion9() {
  ExperimentConfig cfg = n2_base();
  cfg.algorithm = Algorithm::FedPews;
  cfg.rounds = 5;
  cfg.warmup_rounds = 3;
  cfg.diversity_weight = 2.0;

  ConfigFile cf;
  cf.base = cfg;
  cf.seeds = kSeeds;

  // sequential vs seed-parallel batteries, byte-for-byte on the CSVs
  const auto seq = run_battery(cf, false);
  const auto par = run_battery(cf, true);
  bool seeds_ok = true;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (format_run_csv(seq[i], false) != format_run_csv(par[i], false))
      seeds_ok = false;
    if (seq[i].model_digest != par[i].model_digest) seeds_ok = false;
  }

  // client-parallel vs client-sequential
  ExperimentConfig pc = cfg;
  pc.parallel_clients = true;
  bool clients_ok = true;
  for (std::uint64_t seed : kSeeds) {
    ExperimentConfig a = cfg, b = pc;
    a.seed = b.seed = seed;
    if (!bitwise_equal(run_experiment(a), run_experiment(b))) clients_ok = false;
  }

  // identical configs through the CLI produce byte-identical files
  const fs::path dir = fs::temp_directory_path() /
                       ("pews-acc9-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path conf = dir / "run.conf";
  {
    std::ofstream out(conf);
    out << "algorithm = fedpews\nrounds = 5\nwarmup_rounds = 3\n"
        << "local_steps = 10\nlocal_lr = 0.01\nglobal_lr = 0.1\nmask_lr = 0.1\n"
        << "lambda = 2.0\nbatch_size = 8\nparticipants = 2\n"
        << "partition = even-odd\ndataset = synthetic-3.2k\nseeds = 1,2,3\n"
        << "output_dir = " << (dir / "out").string() << "\n";
  }
  auto run_once = [&]() {
    std::vector<const char*> argv = {"pews", "run", conf.c_str(), "--no-timing"};
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  bool csv_ok = run_once() == 0;
  std::vector<std::string> first;
  for (std::uint64_t s : kSeeds)
    first.push_back(slurp(dir / "out" / (std::to_string(s) + ".csv")));
  csv_ok = csv_ok && run_once() == 0;
  for (std::size_t i = 0; i < kSeeds.size(); ++i)
    csv_ok = csv_ok &&
             slurp(dir / "out" / (std::to_string(kSeeds[i]) + ".csv")) == first[i];
  fs::remove_all(dir);

  Outcome out;
  out.pass = seeds_ok && clients_ok && csv_ok;
  out.detail = std::string("seed-parallel == sequential: ") +
               (seeds_ok ? "ok" : "FAIL") +
               "; client-parallel == sequential: " + (clients_ok ? "ok" : "FAIL") +
               "; CLI rerun CSVs byte-identical: " + (csv_ok ? "ok" : "FAIL");
  return out;
}

// ---- criterion 10: dataset separability gate ------------------------------

Outcome criterion10() {
  const ModelSpec spec = ModelSpec::synthetic();
  const Dataset train = gen_synthetic(32000, make_key({1, tag("train-data")}));
  const Dataset test = gen_synthetic(4000, make_key({1, tag("test-data")}));

  std::vector<std::uint32_t> all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  BatchIterator batches(&train, all, make_key({1, tag("central")}), 32);

  ParamVector params = init_params(spec, 1);
  const NeuronMask ones = all_ones_mask(spec);
  const double lr = 0.05;
  const int steps_per_epoch = static_cast<int>(train.size()) / 32;

  double best = 0.0;
  int reached_epoch = -1;
  for (int epoch = 1; epoch <= 30; ++epoch) {
    for (int s = 0; s < steps_per_epoch; ++s) {
      const auto batch = batches.next();
      const Gradients g = backward(
          spec, params, ones, forward(spec, params, ones, batch.features),
          batch.labels);
      params = sgd_step(params, g.params, lr);
    }
    const EvalResult ev = evaluate(spec, params, ones, test);
    best = std::max(best, ev.accuracy * 100.0);
    if (ev.accuracy * 100.0 >= 99.0) {
      reached_epoch = epoch;
      break;
    }
  }

  Outcome out;
  out.pass = reached_epoch > 0;
  std::ostringstream os;
  os << "centralized test accuracy " << best << "% (need >= 99 within 30 epochs";
  if (reached_epoch > 0) os << ", reached at epoch " << reached_epoch;
  os << ")";
  out.detail = os.str();
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> fn;
};

const std::vector<Criterion> kCriteria = {
    {1, "direction of effect, N=2 even/odd", criterion1},
    {2, "extreme heterogeneity, N=4 per-class", criterion2},
    {3, "fedprox base optimizer ordering", criterion3},
    {4, "reduction equivalences (exact)", criterion4},
    {5, "gradient oracle vs finite differences", criterion5},
    {6, "diversity bound and STE sign", criterion6},
    {7, "mask expansion oracle + forward equivalence", criterion7},
    {8, "partition properties", criterion8},
    {9, "determinism and parallel equivalence", criterion9},
    {10, "dataset separability gate", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const Outcome out = c.fn();
    std::printf("[%s] criterion %d: %s - %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name, out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
