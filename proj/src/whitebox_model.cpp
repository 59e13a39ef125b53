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

#include "gbsense/whitebox_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbsense/errors.hpp"

namespace gbsense {

namespace {

double envelope(double tau_us, const WhiteboxConfig& cfg) {
  if (std::isinf(cfg.t2_star_us)) return 1.0;
  const double x = tau_us / cfg.t2_star_us;
  return std::exp(-x * x);
}

}  // namespace

void WhiteboxConfig::validate() const {
  if (std::isnan(t2_star_us) || !(t2_star_us > 0.0))
    throw InvalidArgument("WhiteboxConfig: t2_star_us must be > 0 or infinite");
}

double wb_likelihood(int d, const PulseSettings& settings, const WhiteboxConfig& cfg) {
  if (d != 0 && d != 1) throw InvalidArgument("wb_likelihood: d must be 0 or 1, got " + std::to_string(d));
  if (!(settings.tau_us >= 0.0)) throw InvalidArgument("wb_likelihood: tau must be >= 0");
  cfg.validate();
  const double c = envelope(settings.tau_us, cfg) * std::cos(ramsey_phase(settings));
  const double p0 = 0.5 * (1.0 - c);
  // Computing P(1) as the complement keeps the pair summing to one exactly.
  return d == 0 ? p0 : 1.0 - p0;
}

double wb_click_probability(const PulseSettings& settings, const WhiteboxConfig& cfg,
                            const ReadoutCalibration& calib) {
  calib.validate();
  const double p0 = wb_likelihood(0, settings, cfg);
  return calib.pi0 * p0 + calib.pi1 * (1.0 - p0);
}

std::vector<double> wb_predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                    const WhiteboxConfig& cfg, std::span<const double> f_grid) {
  if (f_grid.empty()) throw InvalidArgument("wb_predict_grid: empty frequency grid");
  for (std::size_t i = 1; i < f_grid.size(); ++i)
    if (!(f_grid[i] > f_grid[i - 1])) throw InvalidArgument("wb_predict_grid: grid must be ascending");
  calib.validate();
  cfg.validate();
  const double env = envelope(tau_us, cfg);
  const double lo = std::min(calib.pi0, calib.pi1);
  const double hi = std::max(calib.pi0, calib.pi1);
  std::vector<double> out(f_grid.size());
  for (std::size_t i = 0; i < f_grid.size(); ++i) {
    const double p0 = 0.5 * (1.0 - env * std::cos(2.0 * kPi * f_grid[i] * tau_us + phi_rad));
    out[i] = std::clamp(calib.pi0 * p0 + calib.pi1 * (1.0 - p0), lo, hi);
  }
  return out;
}

}  // namespace gbsense
