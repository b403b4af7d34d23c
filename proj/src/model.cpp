#include "pews/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pews/data.hpp"
#include "pews/rng.hpp"

namespace pews {

ModelSpec::ModelSpec(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("ModelSpec: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& ls = layers_[l];
    if (ls.in_dim < 1 || ls.out_dim < 1)
      throw std::invalid_argument("ModelSpec: layer dims must be >= 1");
    if (l + 1 < layers_.size() && ls.out_dim != layers_[l + 1].in_dim)
      throw std::invalid_argument("ModelSpec: layer " + std::to_string(l) +
                                  " out_dim does not chain into layer " +
                                  std::to_string(l + 1));
  }
  weight_off_.resize(layers_.size());
  bias_off_.resize(layers_.size());
  hidden_off_.assign(layers_.size(), 0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto in = static_cast<std::size_t>(layers_[l].in_dim);
    const auto out = static_cast<std::size_t>(layers_[l].out_dim);
    weight_off_[l] = d_;
    bias_off_[l] = d_ + in * out;
    d_ += in * out + out;
    if (l + 1 < layers_.size()) {
      hidden_off_[l] = h_;
      h_ += out;
    }
  }
}

ModelSpec ModelSpec::mlp(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("ModelSpec::mlp: need >= 2 dims");
  std::vector<LayerSpec> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    layers.push_back({dims[i], dims[i + 1]});
  return ModelSpec(std::move(layers));
}

ModelSpec ModelSpec::synthetic() { return mlp({5, 32, 64, 128, 32, 4}); }

bool ModelSpec::operator==(const ModelSpec& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (layers_[l].in_dim != other.layers_[l].in_dim ||
        layers_[l].out_dim != other.layers_[l].out_dim)
      return false;
  return true;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector params(spec.param_count(), 0.0);
  RngStream stream(make_key({seed, tag("init")}));
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto& ls = spec.layers()[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(ls.in_dim));
    double* w = params.data() + spec.weight_offset(l);
    const std::size_t nw = static_cast<std::size_t>(ls.in_dim) * ls.out_dim;
    for (std::size_t i = 0; i < nw; ++i)
      w[i] = bound * (2.0 * stream.next_double() - 1.0);
    // biases stay zero
  }
  return params;
}

NeuronMask all_ones_mask(const ModelSpec& spec) {
  return NeuronMask{std::vector<std::uint8_t>(spec.hidden_count(), 1)};
}

ParamMask all_ones_param_mask(const ModelSpec& spec) {
  return ParamMask{std::vector<std::uint8_t>(spec.param_count(), 1)};
}

ForwardTrace forward(const ModelSpec& spec, const ParamVector& params,
                     const NeuronMask& mask, const Matrix& batch) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("forward: parameter length mismatch");
  if (mask.values.size() != spec.hidden_count())
    throw std::invalid_argument("forward: neuron mask length mismatch");
  if (batch.cols != static_cast<std::size_t>(spec.input_dim()))
    throw std::invalid_argument("forward: batch feature dim mismatch");

  const std::size_t layer_count = spec.layer_count();
  const std::size_t rows = batch.rows;
  ForwardTrace trace;
  trace.pre.reserve(layer_count);
  trace.activations.reserve(layer_count + 1);
  trace.activations.push_back(batch);

  for (std::size_t l = 0; l < layer_count; ++l) {
    const auto in = static_cast<std::size_t>(spec.layers()[l].in_dim);
    const auto out = static_cast<std::size_t>(spec.layers()[l].out_dim);
    const double* w = params.data() + spec.weight_offset(l);
    const double* b = params.data() + spec.bias_offset(l);
    const Matrix& z = trace.activations.back();

    Matrix pre(rows, out);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* zr = z.row(r);
      double* pr = pre.row(r);
      for (std::size_t k = 0; k < out; ++k) {
        const double* wk = w + k * in;
        double acc = b[k];
        for (std::size_t j = 0; j < in; ++j) acc += wk[j] * zr[j];
        pr[k] = acc;
      }
    }

    if (l + 1 < layer_count) {
      const std::uint8_t* ms = mask.values.data() + spec.hidden_offset(l);
      Matrix post(rows, out);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* pr = pre.row(r);
        double* ar = post.row(r);
        for (std::size_t k = 0; k < out; ++k)
          ar[k] = pr[k] > 0.0 ? pr[k] * ms[k] : 0.0;
      }
      trace.pre.push_back(std::move(pre));
      trace.activations.push_back(std::move(post));
    } else {
      trace.activations.push_back(pre);  // logits
      trace.pre.push_back(std::move(pre));
    }
  }
  return trace;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.rows != labels.size())
    throw std::invalid_argument("cross_entropy: label count mismatch");
  const std::size_t classes = logits.cols;
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("cross_entropy: label out of range");
    const double* row = logits.row(r);
    double m = row[0];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - m);
    total += m + std::log(sum) - row[y];
  }
  return total / static_cast<double>(logits.rows);
}

Gradients backward(const ModelSpec& spec, const ParamVector& params,
                   const NeuronMask& mask, const ForwardTrace& trace,
                   const std::vector<int>& labels) {
  const std::size_t layer_count = spec.layer_count();
  if (trace.pre.size() != layer_count ||
      trace.activations.size() != layer_count + 1)
    throw std::invalid_argument("backward: trace shape mismatch");
  const std::size_t rows = trace.logits().rows;
  if (rows != labels.size())
    throw std::invalid_argument("backward: label count mismatch");

  Gradients grads{ParamVector(spec.param_count(), 0.0),
                  std::vector<double>(spec.hidden_count(), 0.0)};

  // dL/dlogits = (softmax - onehot) / batch
  const Matrix& logits = trace.logits();
  const std::size_t classes = logits.cols;
  Matrix delta(rows, classes);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = logits.row(r);
    double* dr = delta.row(r);
    double m = row[0];
    for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      dr[c] = std::exp(row[c] - m);
      sum += dr[c];
    }
    for (std::size_t c = 0; c < classes; ++c) dr[c] /= sum;
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("backward: label out of range");
    dr[y] -= 1.0;
    for (std::size_t c = 0; c < classes; ++c) dr[c] *= inv_rows;
  }

  for (std::size_t l = layer_count; l-- > 0;) {
    const auto in = static_cast<std::size_t>(spec.layers()[l].in_dim);
    const auto out = static_cast<std::size_t>(spec.layers()[l].out_dim);
    const Matrix& z = trace.activations[l];
    const double* w = params.data() + spec.weight_offset(l);
    double* gw = grads.params.data() + spec.weight_offset(l);
    double* gb = grads.params.data() + spec.bias_offset(l);

    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.row(r);
      const double* zr = z.row(r);
      for (std::size_t k = 0; k < out; ++k) {
        const double dk = dr[k];
        gb[k] += dk;
        double* gwk = gw + k * in;
        for (std::size_t j = 0; j < in; ++j) gwk[j] += dk * zr[j];
      }
    }

    if (l == 0) break;

    // Pull the gradient back through W, the mask multiplier and ReLU.
    Matrix next_delta(rows, in);
    const Matrix& pre_prev = trace.pre[l - 1];
    const std::uint8_t* ms = mask.values.data() + spec.hidden_offset(l - 1);
    double* gm = grads.mask.data() + spec.hidden_offset(l - 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.row(r);
      double* nd = next_delta.row(r);
      for (std::size_t k = 0; k < out; ++k) {
        const double dk = dr[k];
        const double* wk = w + k * in;
        for (std::size_t j = 0; j < in; ++j) nd[j] += dk * wk[j];
      }
      const double* pp = pre_prev.row(r);
      for (std::size_t j = 0; j < in; ++j) {
        const double relu = pp[j] > 0.0 ? pp[j] : 0.0;
        gm[j] += nd[j] * relu;
        nd[j] = (ms[j] && pp[j] > 0.0) ? nd[j] : 0.0;
      }
    }
    delta = std::move(next_delta);
  }
  return grads;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  if (params.size() != grad.size())
    throw std::invalid_argument("sgd_step: length mismatch");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

EvalResult evaluate(const ModelSpec& spec, const ParamVector& params,
                    const NeuronMask& mask, const Dataset& data) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty dataset");

  constexpr std::size_t kChunk = 4096;
  const std::size_t dim = data.features.cols;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    Matrix chunk(count, dim);
    std::vector<int> labels(count);
    for (std::size_t r = 0; r < count; ++r) {
      const double* src = data.features.row(start + r);
      std::copy(src, src + dim, chunk.row(r));
      labels[r] = data.labels[start + r];
    }
    const ForwardTrace trace = forward(spec, params, mask, chunk);
    loss_sum += cross_entropy(trace.logits(), labels) * static_cast<double>(count);
    const Matrix& logits = trace.logits();
    for (std::size_t r = 0; r < count; ++r) {
      const double* row = logits.row(r);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.cols; ++c)
        if (row[c] > row[best]) best = c;
      if (static_cast<int>(best) == labels[r]) ++correct;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          loss_sum / static_cast<double>(n)};
}

}  // namespace pews
