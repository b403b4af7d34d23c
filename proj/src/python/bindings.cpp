#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "pews/data.hpp"
#include "pews/federation.hpp"
#include "pews/masking.hpp"
#include "pews/metrics.hpp"
#include "pews/model.hpp"
#include "pews/rng.hpp"

namespace py = pybind11;
using namespace pews;

namespace {

MaskScores make_scores(const std::vector<double>& v) { return MaskScores{v}; }
MaskProbabilities make_probs(const std::vector<double>& v) {
  return MaskProbabilities{v};
}
NeuronMask make_mask(const std::vector<std::uint8_t>& v) { return NeuronMask{v}; }

}  // namespace

PYBIND11_MODULE(pewsim, m) {
  m.doc() = "Deterministic cross-silo federated learning simulator with "
            "personalized warmup subnetworks";

  py::enum_<Algorithm>(m, "Algorithm")
      .value("fedavg", Algorithm::FedAvg)
      .value("fedprox", Algorithm::FedProx)
      .value("fedpews", Algorithm::FedPews)
      .value("fedpews_fixed", Algorithm::FedPewsFixed);

  py::enum_<BaseOptimizer>(m, "BaseOptimizer")
      .value("fedavg", BaseOptimizer::FedAvg)
      .value("fedprox", BaseOptimizer::FedProx);

  py::enum_<DatasetMode>(m, "DatasetMode")
      .value("synthetic_32k", DatasetMode::Synthetic32k)
      .value("synthetic_3_2k", DatasetMode::Synthetic3_2k)
      .value("file", DatasetMode::File);

  py::enum_<PartitionMode>(m, "PartitionMode")
      .value("even_odd", PartitionMode::EvenOdd)
      .value("per_class", PartitionMode::PerClass)
      .value("dirichlet", PartitionMode::Dirichlet);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &ExperimentConfig::algorithm)
      .def_readwrite("base_optimizer", &ExperimentConfig::base_optimizer)
      .def_readwrite("rounds", &ExperimentConfig::rounds)
      .def_readwrite("warmup_rounds", &ExperimentConfig::warmup_rounds)
      .def_readwrite("local_steps", &ExperimentConfig::local_steps)
      .def_readwrite("local_lr", &ExperimentConfig::local_lr)
      .def_readwrite("global_lr", &ExperimentConfig::global_lr)
      .def_readwrite("mask_lr", &ExperimentConfig::mask_lr)
      .def_readwrite("diversity_weight", &ExperimentConfig::diversity_weight)
      .def_readwrite("prox_mu", &ExperimentConfig::prox_mu)
      .def_readwrite("batch_size", &ExperimentConfig::batch_size)
      .def_readwrite("participants", &ExperimentConfig::participants)
      .def_readwrite("participation_rate", &ExperimentConfig::participation_rate)
      .def_readwrite("fixed_fractions", &ExperimentConfig::fixed_fractions)
      .def_readwrite("target_accuracy", &ExperimentConfig::target_accuracy)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("dataset", &ExperimentConfig::dataset)
      .def_readwrite("dataset_path", &ExperimentConfig::dataset_path)
      .def_readwrite("partition", &ExperimentConfig::partition)
      .def_readwrite("dirichlet_alpha", &ExperimentConfig::dirichlet_alpha)
      .def_readwrite("cluster_std", &ExperimentConfig::cluster_std)
      .def_readwrite("test_size", &ExperimentConfig::test_size)
      .def_readwrite("model_dims", &ExperimentConfig::model_dims)
      .def_readwrite("eval_every", &ExperimentConfig::eval_every)
      .def_readwrite("parallel_clients", &ExperimentConfig::parallel_clients);

  py::class_<RoundRecord>(m, "RoundRecord")
      .def_readonly("round", &RoundRecord::round)
      .def_readonly("accuracy_pct", &RoundRecord::accuracy_pct)
      .def_readonly("loss", &RoundRecord::loss)
      .def_readonly("elapsed_ms", &RoundRecord::elapsed_ms)
      .def_readonly("warmup", &RoundRecord::warmup)
      .def("__repr__", [](const RoundRecord& r) {
        return "RoundRecord(round=" + std::to_string(r.round) +
               ", accuracy_pct=" + std::to_string(r.accuracy_pct) + ")";
      });

  py::class_<RunLog>(m, "RunLog")
      .def_readonly("config", &RunLog::config)
      .def_readonly("seed", &RunLog::seed)
      .def_readonly("records", &RunLog::records)
      .def_readonly("model_digest", &RunLog::model_digest);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("class_count", &Dataset::class_count)
      .def("features", [](const Dataset& d, std::size_t i) {
        if (i >= d.size()) throw py::index_error();
        const double* row = d.features.row(i);
        return std::vector<double>(row, row + d.features.cols);
      });

  m.def("feature_lift", [](double x, double y) {
    const auto f = feature_lift(x, y);
    return std::vector<double>(f.begin(), f.end());
  });
  m.def("gen_synthetic", &gen_synthetic, py::arg("n_total"), py::arg("seed"),
        py::arg("cluster_std") = 0.35);
  m.def("save_dataset", &save_dataset);
  m.def("load_dataset", &load_dataset);

  m.def("sigmoid_probs", [](const std::vector<double>& scores) {
    return sigmoid_probs(make_scores(scores)).values;
  });
  m.def("sample_neuron_mask",
        [](const std::vector<double>& probs, std::uint64_t key) {
          RngStream stream(key);
          return sample_neuron_mask(make_probs(probs), stream).values;
        });
  m.def("diversity_penalty",
        [](const std::vector<double>& theta_i, const std::vector<double>& theta_excl) {
          const DiversityPenalty p =
              diversity_penalty(make_probs(theta_i), make_probs(theta_excl));
          return py::make_tuple(p.value, p.grad);
        });
  m.def("ste_score_update",
        [](const std::vector<double>& scores, const std::vector<double>& mask_grad,
           const std::vector<double>& theta_i, const std::vector<double>& theta_excl,
           double diversity_weight, double mask_lr) {
          return ste_score_update(make_scores(scores), mask_grad, make_probs(theta_i),
                                  make_probs(theta_excl), diversity_weight, mask_lr)
              .values;
        });
  m.def("expand_to_param_mask",
        [](const std::vector<std::uint8_t>& mask, const std::vector<int>& dims) {
          return expand_to_param_mask(make_mask(mask), ModelSpec::mlp(dims)).values;
        });
  m.def("fixed_partition_masks",
        [](const std::vector<int>& dims, int participants,
           const std::vector<double>& fractions) {
          const auto masks =
              fixed_partition_masks(ModelSpec::mlp(dims), participants, fractions);
          std::vector<std::vector<std::uint8_t>> out;
          out.reserve(masks.size());
          for (const NeuronMask& m2 : masks) out.push_back(m2.values);
          return out;
        },
        py::arg("dims"), py::arg("participants"),
        py::arg("fractions") = std::vector<double>{});

  m.def("run_experiment", &run_experiment,
        py::call_guard<py::gil_scoped_release>());
  m.def("rounds_to_target", [](const RunLog& log, double target) {
    return rounds_to_target(log, target);
  });
  m.def("param_digest", &param_digest);
}
