#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pews {

// Flat model parameters, laid out per ModelSpec (weights row-major, then bias,
// per layer).
using ParamVector = std::vector<double>;

// Real-valued per-hidden-neuron mask scores s (length h).
struct MaskScores {
  std::vector<double> values;
};

// theta = sigmoid(s): per-neuron Bernoulli parameters (length h).
struct MaskProbabilities {
  std::vector<double> values;
};

// Binary per-hidden-neuron mask (length h).
struct NeuronMask {
  std::vector<std::uint8_t> values;
};

// Binary per-parameter mask (length d).
struct ParamMask {
  std::vector<std::uint8_t> values;
};

// Invalid experiment/config input. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failure. Maps to CLI exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pews
