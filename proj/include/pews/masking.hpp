#pragma once

#include <vector>

#include "pews/model.hpp"
#include "pews/rng.hpp"
#include "pews/types.hpp"

namespace pews {

// theta = 1 / (1 + exp(-s)), elementwise.
MaskProbabilities sigmoid_probs(const MaskScores& scores);

// One independent Bernoulli(theta) draw per hidden neuron.
NeuronMask sample_neuron_mask(const MaskProbabilities& probs, RngStream& stream);

// Neuron mask -> parameter mask. A weight survives iff both of its endpoint
// neurons are active; a bias survives iff its neuron is active. Input
// features and output logits are always active.
ParamMask expand_to_param_mask(const NeuronMask& mask, const ModelSpec& spec);

struct DiversityPenalty {
  double value = 0.0;         // ||theta_i - theta_excl||^2
  std::vector<double> grad;   // d value / d theta_i = 2 (theta_i - theta_excl)
};
DiversityPenalty diversity_penalty(const MaskProbabilities& theta_i,
                                   const MaskProbabilities& theta_excl);

// One gradient step on the mask scores. The Bernoulli draw is treated as
// identity (straight-through estimator); the sigmoid is differentiated
// exactly, contributing the theta*(1-theta) factor. The diversity term
// enters with a negative sign (it is maximized):
//   grad_s = (mask_grad - 2*lambda*(theta_i - theta_excl)) * theta_i*(1-theta_i)
MaskScores ste_score_update(const MaskScores& scores,
                            const std::vector<double>& mask_grad,
                            const MaskProbabilities& theta_i,
                            const MaskProbabilities& theta_excl,
                            double diversity_weight, double mask_lr);

// Deterministic disjoint covering masks: within every hidden layer,
// contiguous index ranges sized by largest-remainder apportionment of
// `fractions`. Throws if some participant would get zero neurons in a layer.
std::vector<NeuronMask> fixed_partition_masks(const ModelSpec& spec,
                                              int participants,
                                              const std::vector<double>& fractions);

}  // namespace pews
