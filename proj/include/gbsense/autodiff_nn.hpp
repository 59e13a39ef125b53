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

#pragma once

// Dense tanh networks with a fixed 5-unit head (3 linear, 2 tanh), a
// layer-level reverse-mode tape, Adam, and the log-MSE loss. Everything runs
// in double precision; batches are column-major (features x examples).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gbsense {

enum class Activation { Tanh, Linear };

struct LayerSpec {
  std::size_t width = 1;
  Activation activation = Activation::Tanh;
};

inline constexpr std::size_t kHeadWidth = 5;
inline constexpr std::size_t kHeadLinearUnits = 3;

/// Widths used by the reference architecture.
std::vector<LayerSpec> reference_hidden_layers();
std::vector<LayerSpec> hidden_layers_from_widths(const std::vector<std::size_t>& widths);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::Tanh;
};

/// Hidden stack followed by the mixed-activation head. Gradients share this
/// type so Adam can walk both in lockstep.
struct NetworkParams {
  std::size_t input_width = 0;
  std::vector<DenseLayer> hidden;
  DenseLayer head;

  static NetworkParams zeros(std::size_t input_width, const std::vector<LayerSpec>& specs);
  /// Glorot-uniform weights, zero biases.
  static NetworkParams glorot(std::size_t input_width, const std::vector<LayerSpec>& specs, std::uint64_t seed);

  NetworkParams zeros_like() const;
  std::vector<LayerSpec> specs() const;
  std::size_t layer_count() const { return hidden.size() + 1; }
  DenseLayer& layer(std::size_t i) { return i < hidden.size() ? hidden[i] : head; }
  const DenseLayer& layer(std::size_t i) const { return i < hidden.size() ? hidden[i] : head; }

  std::size_t parameter_count() const;
  /// Flat indexing: per layer, weights (column-major) then bias.
  double& flat(std::size_t index);
  double flat(std::size_t index) const;

  bool all_finite() const;
  /// Throws InvalidArgument when shapes do not chain from input_width to the head.
  void validate() const;
};

/// Post-activation outputs of every layer for one forward pass.
struct Tape {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> activations;  // one per layer, head last
};

struct ForwardResult {
  Eigen::MatrixXd head;  // 5 x batch
  Tape tape;
};

/// Throws NumericError on non-finite activations and InvalidArgument on a
/// width mismatch.
ForwardResult network_forward(const NetworkParams& params, const Eigen::MatrixXd& inputs, bool keep_tape = true);

/// Gradient of sum_b head_gradient(:, b) . head(:, b) with respect to every parameter.
NetworkParams backward(const NetworkParams& params, const Tape& tape, const Eigen::MatrixXd& head_gradient);

enum class LossKind {
  LogOfMean,  // ln(mean((p_hat - p)^2) + floor)
  MeanOfLog,  // mean(ln((p_hat - p)^2 + floor))
};

inline constexpr double kLossFloor = 1e-12;

struct LossResult {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d prediction
};

LossResult log_mse_loss(std::span<const double> predictions, std::span<const double> targets,
                        LossKind kind = LossKind::LogOfMean);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::uint64_t step = 0;
  AdamHyper hyper;

  static AdamState init(const NetworkParams& params, const AdamHyper& hyper = {});
};

/// Bias-corrected Adam update in place. Non-finite gradients throw
/// NumericError before anything is modified.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state);

}  // namespace gbsense
