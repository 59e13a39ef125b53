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

// Likelihood providers that plug the models into the estimator.

#include <cstdint>
#include <string>
#include <vector>

#include "gbsense/bayes_estimator.hpp"
#include "gbsense/graybox_model.hpp"
#include "gbsense/whitebox_model.hpp"

namespace gbsense {

class WhiteboxProvider final : public LikelihoodProvider {
 public:
  explicit WhiteboxProvider(WhiteboxConfig cfg);
  std::vector<double> predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                   const std::vector<double>& chi, std::span<const double> f_grid) const override;
  std::string name() const override { return "wb"; }

 private:
  WhiteboxConfig cfg_;
};

class GrayboxProvider final : public LikelihoodProvider {
 public:
  explicit GrayboxProvider(GrayboxParams gb);
  std::vector<double> predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                   const std::vector<double>& chi, std::span<const double> f_grid) const override;
  std::string name() const override { return "gb"; }
  const GrayboxParams& params() const { return gb_; }

 private:
  GrayboxParams gb_;
};

/// Click probability from the simulator itself. Deterministic noise settings
/// give the exact likelihood; otherwise every node reuses the same
/// Monte-Carlo stream.
class SimulatorProvider final : public LikelihoodProvider {
 public:
  SimulatorProvider(NoiseConfig config, std::size_t n_shots = 1000, std::uint64_t seed = 0);
  std::vector<double> predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                   const std::vector<double>& chi, std::span<const double> f_grid) const override;
  std::string name() const override { return "sim"; }

 private:
  NoiseConfig config_;
  std::size_t n_shots_;
  std::uint64_t seed_;
};

}  // namespace gbsense
