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

// Graybox click-probability model: a dense blackbox maps the pulse settings
// (and external parameters chi) to a parameterized noise operator V_Z, which
// is contracted with the ideal Ramsey state and passed through the readout map.
//
//   settings -> normalize -> network -> (theta1..3, mu1, mu2)
//            -> V = Q diag(mu1, mu2) Q^dagger,  Q = R_Z(theta1) R_Y(theta2) R_Z(theta3)
//   settings -> rho_tilde = U_Ramsey |0><0| U_Ramsey^dagger
//   <Z> = Re tr(V rho_tilde Z),  P_cl = alpha (1 + V_vis <Z>)
//
// Calibration enters only the last step.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbsense/autodiff_nn.hpp"
#include "gbsense/quantum_core.hpp"
#include "gbsense/sensor_sim.hpp"

namespace gbsense {

struct NoiseOperatorParams {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;

  void validate() const;
  static NoiseOperatorParams from_head(const Eigen::Ref<const Eigen::VectorXd>& head);
};

/// Q diag(mu1, mu2) Q^dagger. Hermitian with eigenvalues {mu1, mu2}.
NoiseOperator reconstruct_noise_operator(const NoiseOperatorParams& p);

/// <Z> = Re tr(V rho_tilde Z) and its derivatives with respect to
/// (theta1, theta2, theta3, mu1, mu2).
struct NoiseContraction {
  double z = 0.0;
  std::array<double, 5> grad{};
};
NoiseContraction contract_noise_operator(const NoiseOperatorParams& p, const QubitState& rho_tilde);

struct FeatureScaling {
  double offset = 0.0;
  double scale = 1.0;
};

struct GrayboxParams {
  NetworkParams net;
  std::vector<std::string> feature_layout;
  std::vector<FeatureScaling> normalization;

  void validate() const;
  std::size_t chi_size() const;
};

/// tau_us, phi_rad, fB_MHz, chi0, chi1, ...
std::vector<std::string> default_feature_layout(std::size_t chi_size);

/// Glorot-initialized blackbox with identity input scaling. The tanh head
/// units start biased towards mu = tanh(1.5) so the untrained model sits near
/// the noiseless limit V = I.
GrayboxParams make_graybox(const std::vector<LayerSpec>& hidden, std::size_t chi_size, std::uint64_t seed);

/// Affine map of each feature's observed [min, max] onto [-1, 1].
void fit_normalization(GrayboxParams& gb, std::span<const DatasetRecord> records);

Eigen::VectorXd gb_features(const GrayboxParams& gb, const PulseSettings& settings);

struct GbPrediction {
  double p_cl = 0.0;
  double z_expectation = 0.0;
  NoiseOperatorParams noise;
  Tape tape;
};

GbPrediction gb_forward(const GrayboxParams& gb, const PulseSettings& settings, const ReadoutCalibration& calib);

struct GbLossGradient {
  double loss = 0.0;
  NetworkParams gradient;
};

/// Loss over the batch; throws NumericError naming the offending record when
/// a prediction or the loss is non-finite.
GbLossGradient gb_loss_gradient(const GrayboxParams& gb, std::span<const DatasetRecord> batch,
                                LossKind kind = LossKind::LogOfMean);

/// Loss only, over records selected by index.
double gb_loss(const GrayboxParams& gb, std::span<const DatasetRecord> records,
               std::span<const std::size_t> indices, LossKind kind = LossKind::LogOfMean);
/// Mean squared error of P_cl over records selected by index.
double gb_mse(const GrayboxParams& gb, std::span<const DatasetRecord> records, std::span<const std::size_t> indices);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random partition; the training part holds round(ratio * n) records.
DataSplit split_dataset(std::size_t n, double ratio, std::uint64_t seed);

struct TrainConfig {
  double split_ratio = 0.9;
  std::size_t iterations = 100000;
  AdamHyper adam;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = full batch
  std::size_t eval_every = 1000;
  LossKind loss = LossKind::LogOfMean;
  /// Learning rate multiplies by this factor over the whole run
  /// (geometric schedule); 1 keeps it constant.
  double final_lr_fraction = 1.0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // index 0 = before the first step
  std::vector<std::size_t> test_iterations;
  std::vector<double> test_loss;
  double final_train_mse = 0.0;
  double final_test_mse = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  DataSplit split;
};

struct TrainResult {
  GrayboxParams gb;
  TrainReport report;
};

/// Adam on the log-MSE loss. Input normalization is left untouched. On a
/// non-finite loss the run stops and returns the last parameters that
/// produced a finite loss, with report.diverged set.
TrainResult train(const GrayboxParams& gb, std::span<const DatasetRecord> dataset, const TrainConfig& config);

/// Element-wise gb_forward with fB swept over f_grid (non-empty, ascending).
std::vector<double> gb_predict_grid(const GrayboxParams& gb, double tau_us, double phi_rad,
                                    const ReadoutCalibration& calib, const std::vector<double>& chi,
                                    std::span<const double> f_grid);

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const GrayboxParams& gb, const std::filesystem::path& path);
/// Throws CorruptFile, VersionMismatch, or LayoutMismatch (when
/// expected_layout is given and differs).
GrayboxParams load_checkpoint(const std::filesystem::path& path,
                              const std::optional<std::vector<std::string>>& expected_layout = std::nullopt);

std::string train_report_csv(const TrainReport& report);

}  // namespace gbsense
