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

// Analytic Ramsey likelihood with a Gaussian dephasing envelope.

#include <limits>
#include <span>
#include <vector>

#include "gbsense/quantum_core.hpp"

namespace gbsense {

struct WhiteboxConfig {
  /// Infinity disables the envelope.
  double t2_star_us = std::numeric_limits<double>::infinity();

  static WhiteboxConfig infinite() { return {}; }
  void validate() const;
};

/// P(d | f_B) for the measured bit d in {0, 1}.
double wb_likelihood(int d, const PulseSettings& settings, const WhiteboxConfig& cfg);

double wb_click_probability(const PulseSettings& settings, const WhiteboxConfig& cfg,
                            const ReadoutCalibration& calib);

std::vector<double> wb_predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                    const WhiteboxConfig& cfg, std::span<const double> f_grid);

}  // namespace gbsense
