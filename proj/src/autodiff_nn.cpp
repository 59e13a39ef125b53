// Copyright 2026 The gbsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbsense/autodiff_nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gbsense/errors.hpp"

namespace gbsense {

std::vector<LayerSpec> reference_hidden_layers() {
  return hidden_layers_from_widths({1024, 512, 128, 64, 32, 16, 8, 4});
}

std::vector<LayerSpec> hidden_layers_from_widths(const std::vector<std::size_t>& widths) {
  std::vector<LayerSpec> specs;
  for (std::size_t w : widths) {
    if (w == 0) throw InvalidArgument("hidden layer width must be positive");
    specs.push_back({w, Activation::Tanh});
  }
  return specs;
}

NetworkParams NetworkParams::zeros(std::size_t input_width, const std::vector<LayerSpec>& specs) {
  if (input_width == 0) throw InvalidArgument("network needs at least one input");
  NetworkParams p;
  p.input_width = input_width;
  std::size_t prev = input_width;
  for (const auto& s : specs) {
    if (s.width == 0) throw InvalidArgument("layer width must be >= 1");
    p.hidden.push_back({Eigen::MatrixXd::Zero(s.width, prev), Eigen::VectorXd::Zero(s.width), s.activation});
    prev = s.width;
  }
  p.head = {Eigen::MatrixXd::Zero(kHeadWidth, prev), Eigen::VectorXd::Zero(kHeadWidth), Activation::Linear};
  return p;
}

NetworkParams NetworkParams::glorot(std::size_t input_width, const std::vector<LayerSpec>& specs,
                                    std::uint64_t seed) {
  NetworkParams p = zeros(input_width, specs);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    Eigen::MatrixXd& w = p.layer(l).weights;
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  }
  return p;
}

NetworkParams NetworkParams::zeros_like() const { return zeros(input_width, specs()); }

std::vector<LayerSpec> NetworkParams::specs() const {
  std::vector<LayerSpec> s;
  for (const auto& l : hidden) s.push_back({static_cast<std::size_t>(l.weights.rows()), l.activation});
  return s;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l)
    n += static_cast<std::size_t>(layer(l).weights.size() + layer(l).bias.size());
  return n;
}

double NetworkParams::flat(std::size_t index) const { return const_cast<NetworkParams*>(this)->flat(index); }

double& NetworkParams::flat(std::size_t index) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    DenseLayer& L = layer(l);
    const auto nw = static_cast<std::size_t>(L.weights.size());
    if (index < nw) return L.weights.data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(L.bias.size());
    if (index < nb) return L.bias[static_cast<Eigen::Index>(index)];
    index -= nb;
  }
  throw InvalidArgument("flat parameter index out of range");
}

bool NetworkParams::all_finite() const {
  for (std::size_t l = 0; l < layer_count(); ++l)
    if (!layer(l).weights.allFinite() || !layer(l).bias.allFinite()) return false;
  return true;
}

void NetworkParams::validate() const {
  Eigen::Index prev = static_cast<Eigen::Index>(input_width);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const DenseLayer& L = layer(l);
    if (L.weights.cols() != prev || L.bias.size() != L.weights.rows() || L.weights.rows() == 0)
      throw InvalidArgument("network layer " + std::to_string(l) + " has inconsistent shape");
    prev = L.weights.rows();
  }
  if (head.weights.rows() != static_cast<Eigen::Index>(kHeadWidth))
    throw InvalidArgument("network head must have 5 units");
}

namespace {

void apply_head_activation(Eigen::MatrixXd& z) {
  z.bottomRows(kHeadWidth - kHeadLinearUnits) = z.bottomRows(kHeadWidth - kHeadLinearUnits).array().tanh();
}

}  // namespace

ForwardResult network_forward(const NetworkParams& params, const Eigen::MatrixXd& inputs, bool keep_tape) {
  if (inputs.rows() != static_cast<Eigen::Index>(params.input_width))
    throw InvalidArgument("network_forward: input width " + std::to_string(inputs.rows()) + " != " +
                          std::to_string(params.input_width));
  if (!inputs.allFinite()) throw NumericError("network_forward: non-finite input");
  ForwardResult out;
  if (keep_tape) {
    out.tape.input = inputs;
    out.tape.activations.reserve(params.layer_count());
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const DenseLayer& L = params.layer(l);
    Eigen::MatrixXd z = L.weights * a;
    z.colwise() += L.bias;
    if (l + 1 == params.layer_count()) {
      apply_head_activation(z);
    } else if (L.activation == Activation::Tanh) {
      z = z.array().tanh();
    }
    if (!z.allFinite()) throw NumericError("network_forward: non-finite activation in layer " + std::to_string(l));
    a = std::move(z);
    if (keep_tape) out.tape.activations.push_back(a);
  }
  out.head = std::move(a);
  return out;
}

NetworkParams backward(const NetworkParams& params, const Tape& tape, const Eigen::MatrixXd& head_gradient) {
  const std::size_t n_layers = params.layer_count();
  if (tape.activations.size() != n_layers) throw InvalidArgument("backward: tape does not match network");
  if (head_gradient.rows() != static_cast<Eigen::Index>(kHeadWidth) ||
      head_gradient.cols() != tape.input.cols())
    throw InvalidArgument("backward: head gradient shape mismatch");

  NetworkParams grads = params.zeros_like();
  Eigen::MatrixXd delta = head_gradient;  // d/d(post-activation) of current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& L = params.layer(l);
    const Eigen::MatrixXd& out = tape.activations[l];
    if (l + 1 == n_layers) {
      const auto n_tanh = static_cast<Eigen::Index>(kHeadWidth - kHeadLinearUnits);
      delta.bottomRows(n_tanh).array() *= 1.0 - out.bottomRows(n_tanh).array().square();
    } else if (L.activation == Activation::Tanh) {
      delta.array() *= 1.0 - out.array().square();
    }
    const Eigen::MatrixXd& in = l == 0 ? tape.input : tape.activations[l - 1];
    grads.layer(l).weights.noalias() = delta * in.transpose();
    grads.layer(l).bias = delta.rowwise().sum();
    if (l > 0) delta = L.weights.transpose() * delta;
  }
  return grads;
}

LossResult log_mse_loss(std::span<const double> predictions, std::span<const double> targets, LossKind kind) {
  if (predictions.empty()) throw InvalidArgument("log_mse_loss: empty batch");
  if (predictions.size() != targets.size()) throw InvalidArgument("log_mse_loss: length mismatch");
  const double n = static_cast<double>(predictions.size());
  LossResult out;
  out.gradient.resize(predictions.size());
  if (kind == LossKind::LogOfMean) {
    double sse = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double d = predictions[i] - targets[i];
      sse += d * d;
    }
    const double denom = sse / n + kLossFloor;
    out.loss = std::log(denom);
    for (std::size_t i = 0; i < predictions.size(); ++i)
      out.gradient[i] = 2.0 * (predictions[i] - targets[i]) / (n * denom);
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double d = predictions[i] - targets[i];
      const double denom = d * d + kLossFloor;
      total += std::log(denom);
      out.gradient[i] = 2.0 * d / (n * denom);
    }
    out.loss = total / n;
  }
  return out;
}

void AdamHyper::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("Adam: learning rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw InvalidArgument("Adam: betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("Adam: epsilon must be > 0");
}

AdamState AdamState::init(const NetworkParams& params, const AdamHyper& hyper) {
  hyper.validate();
  return {params.zeros_like(), params.zeros_like(), 0, hyper};
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state) {
  if (grads.parameter_count() != params.parameter_count() ||
      state.first_moment.parameter_count() != params.parameter_count())
    throw InvalidArgument("adam_step: shape mismatch");
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient, step rejected");
  const AdamHyper& h = state.hyper;
  h.validate();
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);

  auto update = [&](auto& x, const auto& g, auto& m, auto& v) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v.array() + (1.0 - h.beta2) * g.array().square();
    x.array() -= h.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
  };
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    DenseLayer& p = params.layer(l);
    const DenseLayer& g = grads.layer(l);
    update(p.weights, g.weights, state.first_moment.layer(l).weights, state.second_moment.layer(l).weights);
    update(p.bias, g.bias, state.first_moment.layer(l).bias, state.second_moment.layer(l).bias);
  }
}

}  // namespace gbsense
