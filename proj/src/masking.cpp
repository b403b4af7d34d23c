#include "pews/masking.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pews/quota.hpp"

namespace pews {

MaskProbabilities sigmoid_probs(const MaskScores& scores) {
  MaskProbabilities probs;
  probs.values.resize(scores.values.size());
  for (std::size_t i = 0; i < scores.values.size(); ++i)
    probs.values[i] = 1.0 / (1.0 + std::exp(-scores.values[i]));
  return probs;
}

NeuronMask sample_neuron_mask(const MaskProbabilities& probs, RngStream& stream) {
  NeuronMask mask;
  mask.values.resize(probs.values.size());
  for (std::size_t i = 0; i < probs.values.size(); ++i)
    mask.values[i] = stream.next_double() < probs.values[i] ? 1 : 0;
  return mask;
}

ParamMask expand_to_param_mask(const NeuronMask& mask, const ModelSpec& spec) {
  if (mask.values.size() != spec.hidden_count())
    throw std::invalid_argument("expand_to_param_mask: mask length mismatch");
  ParamMask out{std::vector<std::uint8_t>(spec.param_count(), 0)};
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto in = static_cast<std::size_t>(spec.layers()[l].in_dim);
    const auto out_dim = static_cast<std::size_t>(spec.layers()[l].out_dim);
    const bool first = l == 0;
    const bool last = l + 1 == spec.layer_count();
    const std::uint8_t* src = first ? nullptr : mask.values.data() + spec.hidden_offset(l - 1);
    const std::uint8_t* dst = last ? nullptr : mask.values.data() + spec.hidden_offset(l);
    std::uint8_t* w = out.values.data() + spec.weight_offset(l);
    std::uint8_t* b = out.values.data() + spec.bias_offset(l);
    for (std::size_t k = 0; k < out_dim; ++k) {
      const std::uint8_t active_out = last ? 1 : dst[k];
      b[k] = active_out;
      std::uint8_t* wk = w + k * in;
      for (std::size_t j = 0; j < in; ++j) {
        const std::uint8_t active_in = first ? 1 : src[j];
        wk[j] = active_out & active_in;
      }
    }
  }
  return out;
}

DiversityPenalty diversity_penalty(const MaskProbabilities& theta_i,
                                   const MaskProbabilities& theta_excl) {
  if (theta_i.values.size() != theta_excl.values.size())
    throw std::invalid_argument("diversity_penalty: length mismatch");
  DiversityPenalty p;
  p.grad.resize(theta_i.values.size());
  for (std::size_t i = 0; i < theta_i.values.size(); ++i) {
    const double diff = theta_i.values[i] - theta_excl.values[i];
    p.value += diff * diff;
    p.grad[i] = 2.0 * diff;
  }
  return p;
}

MaskScores ste_score_update(const MaskScores& scores,
                            const std::vector<double>& mask_grad,
                            const MaskProbabilities& theta_i,
                            const MaskProbabilities& theta_excl,
                            double diversity_weight, double mask_lr) {
  const std::size_t h = scores.values.size();
  if (mask_grad.size() != h || theta_i.values.size() != h ||
      theta_excl.values.size() != h)
    throw std::invalid_argument("ste_score_update: length mismatch");
  MaskScores out;
  out.values.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double th = theta_i.values[i];
    const double grad_s =
        (mask_grad[i] - diversity_weight * 2.0 * (th - theta_excl.values[i])) *
        th * (1.0 - th);
    out.values[i] = scores.values[i] - mask_lr * grad_s;
  }
  return out;
}

std::vector<NeuronMask> fixed_partition_masks(const ModelSpec& spec,
                                              int participants,
                                              const std::vector<double>& fractions) {
  if (participants < 1)
    throw std::invalid_argument("fixed_partition_masks: participants must be >= 1");
  std::vector<double> fr = fractions;
  if (fr.empty()) fr.assign(static_cast<std::size_t>(participants), 1.0 / participants);
  if (fr.size() != static_cast<std::size_t>(participants))
    throw std::invalid_argument("fixed_partition_masks: fraction count mismatch");

  std::vector<NeuronMask> masks(static_cast<std::size_t>(participants));
  for (auto& m : masks) m.values.assign(spec.hidden_count(), 0);

  for (std::size_t l = 0; l + 1 < spec.layer_count(); ++l) {
    const auto out = static_cast<std::size_t>(spec.layers()[l].out_dim);
    const auto counts = quota_counts(fr, out);
    std::size_t begin = spec.hidden_offset(l);
    for (int p = 0; p < participants; ++p) {
      if (counts[static_cast<std::size_t>(p)] == 0)
        throw std::invalid_argument(
            "fixed_partition_masks: participant " + std::to_string(p) +
            " gets no neurons in a layer of size " + std::to_string(out));
      for (std::size_t i = 0; i < counts[static_cast<std::size_t>(p)]; ++i)
        masks[static_cast<std::size_t>(p)].values[begin + i] = 1;
      begin += counts[static_cast<std::size_t>(p)];
    }
  }
  return masks;
}

}  // namespace pews
