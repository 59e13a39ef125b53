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

// Noisy Ramsey simulator standing in for the experiment. Classical noise
// only: preparation bit-flip noise, quasi-static detuning, Ornstein-Uhlenbeck
// dephasing, finite-width pulses with a one-pole low-pass distortion and a
// Rabi amplitude error.
//
// Conventions
//  * Free evolution runs under 2*pi*(fB + df(t)) * Z / 2, so the relative
//    phase accumulated over tau is exactly 2*pi*fB*tau.
//  * The second pulse is driven about (cos phi, -sin phi, 0) and followed by a
//    virtual R_Z(phi) frame change; with ideal impulses the sequence equals
//    u_ramsey() as a unitary.
//  * tau is the effective precession time: finite pulses are separated
//    edge-to-edge by max(tau - 4 t_p / pi, 0), which cancels the first-order
//    detuning phase picked up during two ideal pi/2 pulses of width t_p.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gbsense/quantum_core.hpp"
#include "gbsense/random.hpp"

namespace gbsense {

struct NoiseConfig {
  double prep_epsilon = 0.0;       // bit-flip probability after preparation
  double sigma_f_MHz = 0.0;        // quasi-static detuning std-dev
  double ou_amplitude_MHz = 0.0;   // OU dephasing std-dev
  double ou_tau_c_us = 0.0;        // OU correlation time
  double pulse_width_us = 0.0;     // 0 selects ideal impulse pulses
  double distortion_tau_us = 0.0;  // low-pass time constant on pulse envelopes
  double amp_error = 0.0;          // fractional Rabi amplitude error
  double calib_jitter = 0.0;       // std-dev of per-batch pi0/pi1 drift

  void validate() const;
  /// True when a single realization determines every shot.
  bool is_deterministic() const;

  /// A_p * T_p of white sigma_x noise producing this prep_epsilon.
  double prep_noise_power() const;
  static double epsilon_from_noise_power(double noise_power);
  static double noise_power_from_epsilon(double epsilon);
  /// Gaussian-envelope T2* = sqrt(2) / (2 pi sigma_f).
  static double sigma_f_for_t2_star(double t2_star_us);
};

struct TimeGrid {
  double dt_us = 1.0;
  std::size_t n_steps = 1;

  double duration() const { return dt_us * static_cast<double>(n_steps); }
};

/// Pulse placement for one sequence. All times in microseconds.
struct SequenceTiming {
  double pulse_width = 0.0;
  double first_end = 0.0;      // end of first pulse
  double second_start = 0.0;   // start of second pulse
  double second_end = 0.0;
  double tail = 0.0;           // simulated low-pass tail after each pulse
  double total = 0.0;          // duration covered by the time grid

  static SequenceTiming make(const PulseSettings& settings, const NoiseConfig& config);
};

/// Grid fine enough to resolve envelopes and OU noise for this sequence.
TimeGrid make_time_grid(const PulseSettings& settings, const NoiseConfig& config);

struct NoiseRealization {
  double static_detuning_MHz = 0.0;
  std::vector<double> dephasing_trace_MHz;  // OU value per grid step (midpoint)
  double prep_phase_rad = 0.0;              // integral of beta(t) over the prep window
};

NoiseRealization sample_noise_realization(const NoiseConfig& config, const TimeGrid& grid, Rng& rng);

/// Total-sequence unitary for one realization, including the preparation
/// kick exp(-i prep_phase X) and the final virtual Z frame change.
Operator2 propagate(const PulseSettings& settings, const NoiseConfig& config,
                    const NoiseRealization& realization, const TimeGrid& grid);

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Average of tr(U rho0 U^dagger Z) over n_shots realizations.
McEstimate mc_expectation_z(const PulseSettings& settings, const NoiseConfig& config,
                            std::size_t n_shots, Rng& rng,
                            const QubitState& initial = QubitState::ground());

/// Monte-Carlo estimate of V_Z = Z <U~^dagger Z U~> with U~ = U_total U_Ramsey^dagger.
/// The averaged operator W = <U~^dagger Z U~> is Hermitian, W = w0 I + w.sigma;
/// the sample covariance of (w0, wx, wy, wz) gives standard errors for any
/// contraction tr(V rho Z) = w0 + w.n.
struct NoiseOperatorEstimate {
  NoiseOperator op;
  std::array<double, 4> bloch_mean{};
  std::array<std::array<double, 4>, 4> bloch_covariance{};
  std::size_t n_shots = 0;

  /// Standard error of tr(V rho_tilde Z) for the given ideal final state.
  double contraction_std_err(const QubitState& rho_tilde) const;
};

NoiseOperatorEstimate noise_operator_oracle(const PulseSettings& settings, const NoiseConfig& config,
                                            std::size_t n_shots, Rng& rng);

struct DatasetRecord {
  PulseSettings settings;
  ReadoutCalibration calib;
  std::int64_t R = 1;
  std::int64_t r = 0;
  double p_cl = 0.0;  // r / R
  std::int64_t set_id = 0;
  double truth_fB_MHz = 0.0;

  void validate() const;
};

/// Per-batch calibration with jitter; each coefficient clamped to [0, 1].
ReadoutCalibration jitter_calibration(const ReadoutCalibration& nominal, double jitter, Rng& rng);

/// One averaged-readout batch: P_cl from the Monte-Carlo <Z> under a jittered
/// calibration, then r ~ Binomial(R, P_cl).
DatasetRecord simulate_batch(const PulseSettings& settings, const NoiseConfig& config,
                             const ReadoutCalibration& calib, std::int64_t R, std::size_t n_shots,
                             Rng& rng);

struct DatasetPlan {
  std::size_t n_frequency_sets = 1;
  std::size_t taus_per_set = 32;
  double f_min_MHz = 0.0;
  double f_max_MHz = 1.0;
  double tau_min_us = 0.1;
  double tau_max_us = 10.0;
  std::int64_t R = 100000;
  std::size_t n_shots = 1000;  // Monte-Carlo realizations per record
  ReadoutCalibration calib{0.03, 0.02};
  std::size_t chi_size = 0;

  void validate() const;
};

/// Records grouped by set: one random fB and phi per set, taus drawn by
/// stratified sampling over the range and acquired in shuffled order.
std::vector<DatasetRecord> generate_dataset(const DatasetPlan& plan, const NoiseConfig& config,
                                            std::uint64_t seed);

struct PrepChannelEstimate {
  double epsilon_mc = 0.0;
  double epsilon_std_err = 0.0;
  double gamma_mc = 0.0;
  double gamma_std_err = 0.0;
};

/// Brute-force white sigma_x noise over the prep window, integrated with
/// n_steps independent Gaussian increments of total variance A_p*T_p.
PrepChannelEstimate prep_channel_check(double noise_power, std::size_t n_shots, Rng& rng,
                                       std::size_t n_steps = 16);

}  // namespace gbsense
