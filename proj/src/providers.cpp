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

#include "gbsense/providers.hpp"

#include <algorithm>

#include "gbsense/errors.hpp"
#include "gbsense/random.hpp"

namespace gbsense {

WhiteboxProvider::WhiteboxProvider(WhiteboxConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<double> WhiteboxProvider::predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                                   const std::vector<double>& /*chi*/,
                                                   std::span<const double> f_grid) const {
  return wb_predict_grid(tau_us, phi_rad, calib, cfg_, f_grid);
}

GrayboxProvider::GrayboxProvider(GrayboxParams gb) : gb_(std::move(gb)) { gb_.validate(); }

std::vector<double> GrayboxProvider::predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                                  const std::vector<double>& chi,
                                                  std::span<const double> f_grid) const {
  if (chi.size() != gb_.chi_size())
    throw InvalidArgument("graybox provider: batch carries " + std::to_string(chi.size()) +
                          " chi values, checkpoint expects " + std::to_string(gb_.chi_size()));
  return gb_predict_grid(gb_, tau_us, phi_rad, calib, chi, f_grid);
}

SimulatorProvider::SimulatorProvider(NoiseConfig config, std::size_t n_shots, std::uint64_t seed)
    : config_(config), n_shots_(n_shots), seed_(seed) {
  config_.validate();
}

std::vector<double> SimulatorProvider::predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                                    const std::vector<double>& chi,
                                                    std::span<const double> f_grid) const {
  if (f_grid.empty()) throw InvalidArgument("simulator provider: empty frequency grid");
  calib.validate();
  std::vector<double> out(f_grid.size());
  for (std::size_t i = 0; i < f_grid.size(); ++i) {
    if (i > 0 && !(f_grid[i] > f_grid[i - 1])) throw InvalidArgument("simulator provider: grid must be ascending");
    const PulseSettings s{tau_us, phi_rad, f_grid[i], chi};
    Rng rng = derive_stream(seed_, {0x5117ULL});
    out[i] = click_probability(mc_expectation_z(s, config_, n_shots_, rng).mean, calib);
  }
  return out;
}

}  // namespace gbsense
