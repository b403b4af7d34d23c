#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pews/linalg.hpp"
#include "pews/types.hpp"

namespace pews {

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
};

// Fully-connected ReLU stack over a flat parameter vector. Per layer the
// vector holds a row-major (out_dim x in_dim) weight block followed by an
// out_dim bias block. Every layer except the last is followed by ReLU and is
// maskable at neuron level; the last layer emits raw logits.
class ModelSpec {
 public:
  explicit ModelSpec(std::vector<LayerSpec> layers);

  static ModelSpec mlp(const std::vector<int>& dims);
  static ModelSpec synthetic();  // 5-32-64-128-32-4

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t param_count() const { return d_; }    // d
  std::size_t hidden_count() const { return h_; }   // h
  int input_dim() const { return layers_.front().in_dim; }
  int class_count() const { return layers_.back().out_dim; }

  std::size_t weight_offset(std::size_t layer) const { return weight_off_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return bias_off_[layer]; }
  // Offset of a hidden layer's neurons inside an h-length mask vector.
  std::size_t hidden_offset(std::size_t layer) const { return hidden_off_[layer]; }

  bool operator==(const ModelSpec& other) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> weight_off_;
  std::vector<std::size_t> bias_off_;
  std::vector<std::size_t> hidden_off_;
  std::size_t d_ = 0;
  std::size_t h_ = 0;
};

struct ForwardTrace {
  // pre[l] holds layer l's pre-activations. activations[0] is the input
  // batch; activations[l+1] is layer l's output after ReLU and masking, the
  // last entry being the raw logits.
  std::vector<Matrix> pre;
  std::vector<Matrix> activations;

  const Matrix& logits() const { return activations.back(); }
};

struct Gradients {
  ParamVector params;        // dL/dx, length d
  std::vector<double> mask;  // dL/dm treating each mask bit as a continuous
                             // multiplier, length h
};

struct EvalResult {
  double accuracy = 0.0;  // fraction in [0, 1]
  double mean_loss = 0.0;
};

struct Dataset;

// Weights i.i.d. uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

NeuronMask all_ones_mask(const ModelSpec& spec);
ParamMask all_ones_param_mask(const ModelSpec& spec);

// Masked batch forward. Hidden activations are ReLU(Wz + b) * mask slice;
// the final layer is neither activated nor masked.
ForwardTrace forward(const ModelSpec& spec, const ParamVector& params,
                     const NeuronMask& mask, const Matrix& batch);

// Mean of -log softmax(logits)[label], log-sum-exp stabilized.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Exact gradients of the cross-entropy under activation masking. `trace`
// must come from forward() with the same params/mask/batch; traces must not
// be reused across parameter updates.
Gradients backward(const ModelSpec& spec, const ParamVector& params,
                   const NeuronMask& mask, const ForwardTrace& trace,
                   const std::vector<int>& labels);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

// Accuracy (argmax, ties to the lowest class index) and mean loss over a
// dataset.
EvalResult evaluate(const ModelSpec& spec, const ParamVector& params,
                    const NeuronMask& mask, const Dataset& data);

}  // namespace pews
