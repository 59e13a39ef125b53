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

#include "gbsense/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "gbsense/errors.hpp"

namespace gbsense {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Welford accumulator.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_err() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

double normal(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

// Integral of the low-pass filtered unit rectangular envelope starting at t0.
double envelope_integral(double t, double t0, double width, double tau_d) {
  const double s = t - t0;
  if (s <= 0.0) return 0.0;
  if (tau_d <= 0.0) return std::min(s, width);
  if (s <= width) return s + tau_d * std::expm1(-s / tau_d);
  const double at_edge = -std::expm1(-width / tau_d);
  return width + tau_d * std::expm1(-width / tau_d) + at_edge * tau_d * -std::expm1(-(s - width) / tau_d);
}

double z_expectation(const Operator2& u, const QubitState& initial) {
  const Operator2 rho = u * initial.rho() * u.adjoint();
  return (rho(0, 0) - rho(1, 1)).real();
}

void require_shots(const NoiseConfig& config, std::size_t n_shots, std::size_t minimum, const char* who) {
  if (!config.is_deterministic() && n_shots < minimum)
    throw InvalidArgument(std::string(who) + ": need at least " + std::to_string(minimum) + " shots");
}

}  // namespace

void NoiseConfig::validate() const {
  const double fields[] = {prep_epsilon,     sigma_f_MHz,       ou_amplitude_MHz, ou_tau_c_us,
                           pulse_width_us,   distortion_tau_us, amp_error,        calib_jitter};
  for (double f : fields)
    if (!finite_nonneg(f)) throw InvalidArgument("NoiseConfig: fields must be finite and non-negative");
  if (prep_epsilon >= 0.5) throw InvalidArgument("NoiseConfig: prep_epsilon must be < 1/2");
  if (ou_amplitude_MHz > 0.0 && ou_tau_c_us <= 0.0)
    throw InvalidArgument("NoiseConfig: OU noise needs a positive correlation time");
}

bool NoiseConfig::is_deterministic() const {
  return sigma_f_MHz == 0.0 && ou_amplitude_MHz == 0.0 && prep_epsilon == 0.0;
}

double NoiseConfig::prep_noise_power() const { return noise_power_from_epsilon(prep_epsilon); }

// rho(T_p) = diag((1 + Gamma)/2, (1 - Gamma)/2) with Gamma = exp(-2 A_p T_p).
double NoiseConfig::epsilon_from_noise_power(double noise_power) {
  return -0.5 * std::expm1(-2.0 * noise_power);
}

double NoiseConfig::noise_power_from_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InvalidArgument("prep epsilon must lie in [0, 1/2)");
  return -0.5 * std::log1p(-2.0 * epsilon);
}

double NoiseConfig::sigma_f_for_t2_star(double t2_star_us) {
  if (!(t2_star_us > 0.0)) throw InvalidArgument("T2* must be positive");
  return std::sqrt(2.0) / (2.0 * kPi * t2_star_us);
}

SequenceTiming SequenceTiming::make(const PulseSettings& settings, const NoiseConfig& config) {
  SequenceTiming t;
  const double tp = config.pulse_width_us;
  t.pulse_width = tp;
  if (tp == 0.0) {
    t.second_start = settings.tau_us;
    t.second_end = settings.tau_us;
    t.total = settings.tau_us;
    return t;
  }
  const double gap = std::max(settings.tau_us - 4.0 * tp / kPi, 0.0);
  t.first_end = tp;
  t.second_start = tp + gap;
  t.second_end = 2.0 * tp + gap;
  t.tail = config.distortion_tau_us > 0.0 ? 8.0 * config.distortion_tau_us : 0.0;
  t.total = t.second_end + t.tail;
  return t;
}

TimeGrid make_time_grid(const PulseSettings& settings, const NoiseConfig& config) {
  const SequenceTiming timing = SequenceTiming::make(settings, config);
  double dt_max = 0.0;
  auto consider = [&](double dt) { dt_max = dt_max == 0.0 ? dt : std::min(dt_max, dt); };
  if (config.pulse_width_us > 0.0) {
    consider(config.pulse_width_us / 10.0);
    if (config.distortion_tau_us > 0.0) consider(config.distortion_tau_us / 4.0);
  }
  if (config.ou_amplitude_MHz > 0.0) consider(config.ou_tau_c_us / 10.0);

  TimeGrid grid;
  if (dt_max == 0.0) {
    grid.n_steps = 1;
    grid.dt_us = timing.total > 0.0 ? timing.total : 1.0;
    return grid;
  }
  grid.n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(timing.total / dt_max - 1e-9)));
  grid.dt_us = timing.total > 0.0 ? timing.total / static_cast<double>(grid.n_steps) : dt_max;
  return grid;
}

NoiseRealization sample_noise_realization(const NoiseConfig& config, const TimeGrid& grid, Rng& rng) {
  NoiseRealization out;
  out.static_detuning_MHz = normal(rng, config.sigma_f_MHz);
  out.prep_phase_rad = normal(rng, std::sqrt(config.prep_noise_power()));
  out.dephasing_trace_MHz.assign(grid.n_steps, 0.0);
  if (config.ou_amplitude_MHz > 0.0) {
    const double a = config.ou_amplitude_MHz;
    const double rho = std::exp(-grid.dt_us / config.ou_tau_c_us);
    const double kick = a * std::sqrt(-std::expm1(-2.0 * grid.dt_us / config.ou_tau_c_us));
    double x = normal(rng, a);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      out.dephasing_trace_MHz[k] = x;
      x = rho * x + normal(rng, kick);
    }
  }
  return out;
}

Operator2 propagate(const PulseSettings& settings, const NoiseConfig& config,
                    const NoiseRealization& realization, const TimeGrid& grid) {
  const SequenceTiming timing = SequenceTiming::make(settings, config);
  const double tp = timing.pulse_width;
  if (tp > 0.0 && grid.dt_us > tp / 10.0 * (1.0 + 1e-9))
    throw ResolutionError("propagate: time step exceeds pulse_width / 10");
  if (timing.total > 0.0 && grid.duration() < timing.total * (1.0 - 1e-12))
    throw InvalidArgument("propagate: time grid shorter than the pulse sequence");
  const bool ou = config.ou_amplitude_MHz > 0.0;
  if (ou && realization.dephasing_trace_MHz.size() != grid.n_steps)
    throw InvalidArgument("propagate: dephasing trace does not match the time grid");

  const double two_pi = 2.0 * kPi;
  const double drift = two_pi * (settings.fB_MHz + realization.static_detuning_MHz);
  const double rotation = 0.5 * kPi * (1.0 + config.amp_error);
  const double cphi = std::cos(settings.phi_rad);
  const double sphi = std::sin(settings.phi_rad);
  auto ou_value = [&](std::size_t k) { return ou ? realization.dephasing_trace_MHz[k] : 0.0; };

  Operator2 u = Operator2::Identity();
  if (realization.prep_phase_rad != 0.0) u = axis_rotation(Axis::X, 2.0 * realization.prep_phase_rad);

  if (tp == 0.0) {
    u = bloch_propagator(rotation, 0.0, 0.0, 1.0) * u;
    if (timing.total > 0.0) {
      if (ou) {
        for (std::size_t k = 0; k < grid.n_steps; ++k)
          u = bloch_propagator(0.0, 0.0, drift + two_pi * ou_value(k), grid.dt_us) * u;
      } else {
        u = bloch_propagator(0.0, 0.0, drift, timing.total) * u;
      }
    }
    u = bloch_propagator(rotation * cphi, -rotation * sphi, 0.0, 1.0) * u;
  } else {
    const double rabi = rotation / tp;
    const double tau_d = config.distortion_tau_us;
    const double dt = grid.dt_us;
    // Steps strictly between the first pulse's tail and the second pulse see a
    // constant Hamiltonian and collapse into one exact step.
    std::size_t quiet_begin = grid.n_steps;
    std::size_t quiet_end = grid.n_steps;
    if (!ou) {
      const auto qb = static_cast<std::size_t>(std::ceil((timing.first_end + timing.tail) / dt - 1e-9));
      const auto qe = static_cast<std::size_t>(std::floor(timing.second_start / dt + 1e-9));
      if (qe > qb) {
        quiet_begin = qb;
        quiet_end = qe;
      }
    }
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      if (k == quiet_begin) {
        u = bloch_propagator(0.0, 0.0, drift, dt * static_cast<double>(quiet_end - quiet_begin)) * u;
        k = quiet_end - 1;
        continue;
      }
      const double t0 = dt * static_cast<double>(k);
      const double t1 = t0 + dt;
      const double e1 = (envelope_integral(t1, 0.0, tp, tau_d) - envelope_integral(t0, 0.0, tp, tau_d)) / dt;
      const double e2 = (envelope_integral(t1, timing.second_start, tp, tau_d) -
                         envelope_integral(t0, timing.second_start, tp, tau_d)) / dt;
      const double hx = rabi * (e1 + e2 * cphi);
      const double hy = -rabi * e2 * sphi;
      u = bloch_propagator(hx, hy, drift + two_pi * ou_value(k), dt) * u;
    }
  }
  return axis_rotation(Axis::Z, settings.phi_rad) * u;
}

McEstimate mc_expectation_z(const PulseSettings& settings, const NoiseConfig& config, std::size_t n_shots,
                            Rng& rng, const QubitState& initial) {
  settings.validate();
  config.validate();
  require_shots(config, n_shots, 100, "mc_expectation_z");
  const TimeGrid grid = make_time_grid(settings, config);
  if (config.is_deterministic()) {
    const NoiseRealization none = sample_noise_realization(config, grid, rng);
    return {z_expectation(propagate(settings, config, none, grid), initial), 0.0};
  }
  RunningStats stats;
  for (std::size_t i = 0; i < n_shots; ++i) {
    const NoiseRealization real = sample_noise_realization(config, grid, rng);
    stats.add(z_expectation(propagate(settings, config, real, grid), initial));
  }
  return {stats.mean, stats.std_err()};
}

double NoiseOperatorEstimate::contraction_std_err(const QubitState& rho_tilde) const {
  const Operator2& r = rho_tilde.rho();
  const std::array<double, 4> c{1.0, 2.0 * r(0, 1).real(), -2.0 * r(0, 1).imag(), (r(0, 0) - r(1, 1)).real()};
  double var = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) var += c[i] * bloch_covariance[i][j] * c[j];
  return n_shots > 0 ? std::sqrt(std::max(var, 0.0) / static_cast<double>(n_shots)) : 0.0;
}

NoiseOperatorEstimate noise_operator_oracle(const PulseSettings& settings, const NoiseConfig& config,
                                            std::size_t n_shots, Rng& rng) {
  settings.validate();
  config.validate();
  require_shots(config, n_shots, 1000, "noise_operator_oracle");
  const TimeGrid grid = make_time_grid(settings, config);
  const Operator2 ideal_adj = u_ramsey(settings).adjoint();
  const Operator2 z = pauli(Axis::Z);
  const std::size_t shots = config.is_deterministic() ? 1 : n_shots;

  std::array<double, 4> mean{};
  std::array<std::array<double, 4>, 4> comoment{};
  for (std::size_t i = 0; i < shots; ++i) {
    const NoiseRealization real = sample_noise_realization(config, grid, rng);
    const Operator2 u_tilde = propagate(settings, config, real, grid) * ideal_adj;
    const Operator2 w = u_tilde.adjoint() * z * u_tilde;
    const std::array<double, 4> b{0.5 * (w(0, 0) + w(1, 1)).real(), w(0, 1).real(), -w(0, 1).imag(),
                                  0.5 * (w(0, 0) - w(1, 1)).real()};
    // Welford update of mean and co-moment.
    const double n = static_cast<double>(i + 1);
    std::array<double, 4> delta{};
    for (int a = 0; a < 4; ++a) {
      delta[a] = b[a] - mean[a];
      mean[a] += delta[a] / n;
    }
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c) comoment[a][c] += delta[a] * (b[c] - mean[c]);
  }

  NoiseOperatorEstimate est;
  est.n_shots = shots;
  est.bloch_mean = mean;
  if (shots > 1)
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c) est.bloch_covariance[a][c] = comoment[a][c] / static_cast<double>(shots - 1);
  const Operator2 w_mean = mean[0] * identity2() + mean[1] * pauli(Axis::X) + mean[2] * pauli(Axis::Y) +
                           mean[3] * pauli(Axis::Z);
  est.op.matrix = z * w_mean;
  return est;
}

void DatasetRecord::validate() const {
  settings.validate();
  calib.validate();
  if (R < 1) throw InvalidArgument("DatasetRecord: R must be >= 1");
  if (r < 0 || r > R) throw InvalidArgument("DatasetRecord: r must lie in [0, R]");
  if (std::abs(p_cl - static_cast<double>(r) / static_cast<double>(R)) > 1e-15)
    throw InvalidArgument("DatasetRecord: p_cl != r / R");
}

ReadoutCalibration jitter_calibration(const ReadoutCalibration& nominal, double jitter, Rng& rng) {
  if (jitter == 0.0) return nominal;
  ReadoutCalibration c{nominal.pi0 + normal(rng, jitter), nominal.pi1 + normal(rng, jitter)};
  if (c.pi0 < 0.0 || c.pi0 > 1.0 || c.pi1 < 0.0 || c.pi1 > 1.0) {
    std::cerr << "warning: jittered calibration (" << c.pi0 << ", " << c.pi1 << ") clamped to [0, 1]\n";
    c.pi0 = std::clamp(c.pi0, 0.0, 1.0);
    c.pi1 = std::clamp(c.pi1, 0.0, 1.0);
  }
  if (c.pi0 + c.pi1 <= 0.0) return nominal;
  return c;
}

DatasetRecord simulate_batch(const PulseSettings& settings, const NoiseConfig& config,
                             const ReadoutCalibration& calib, std::int64_t R, std::size_t n_shots, Rng& rng) {
  if (R < 1) throw InvalidArgument("simulate_batch: R must be >= 1");
  calib.validate();
  const McEstimate z = mc_expectation_z(settings, config, n_shots, rng);
  DatasetRecord rec;
  rec.settings = settings;
  rec.calib = jitter_calibration(calib, config.calib_jitter, rng);
  const double p = click_probability(std::clamp(z.mean, -1.0, 1.0), rec.calib);
  rec.R = R;
  if (p <= 0.0) {
    rec.r = 0;
  } else if (p >= 1.0) {
    rec.r = R;
  } else {
    rec.r = std::binomial_distribution<std::int64_t>(R, p)(rng);
  }
  rec.p_cl = static_cast<double>(rec.r) / static_cast<double>(R);
  rec.truth_fB_MHz = settings.fB_MHz;
  return rec;
}

void DatasetPlan::validate() const {
  if (n_frequency_sets == 0) throw InvalidArgument("DatasetPlan: need at least one frequency set");
  if (taus_per_set == 0) throw InvalidArgument("DatasetPlan: need at least one tau per set");
  if (!(f_max_MHz > f_min_MHz) || !std::isfinite(f_min_MHz) || !std::isfinite(f_max_MHz))
    throw InvalidArgument("DatasetPlan: empty frequency range");
  if (!(tau_max_us > tau_min_us) || !(tau_min_us >= 0.0) || !std::isfinite(tau_max_us))
    throw InvalidArgument("DatasetPlan: empty tau range");
  if (R < 1) throw InvalidArgument("DatasetPlan: R must be >= 1");
  calib.validate();
}

std::vector<DatasetRecord> generate_dataset(const DatasetPlan& plan, const NoiseConfig& config,
                                            std::uint64_t seed) {
  plan.validate();
  config.validate();
  std::vector<DatasetRecord> out;
  out.reserve(plan.n_frequency_sets * plan.taus_per_set);
  const double n_tau = static_cast<double>(plan.taus_per_set);
  for (std::size_t s = 0; s < plan.n_frequency_sets; ++s) {
    Rng set_rng = derive_stream(seed, {s});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double fB = plan.f_min_MHz + (plan.f_max_MHz - plan.f_min_MHz) * unit(set_rng);
    const double phi = 2.0 * kPi * unit(set_rng);
    std::vector<double> chi(plan.chi_size);
    for (double& c : chi) c = unit(set_rng);
    std::vector<double> taus(plan.taus_per_set);
    for (std::size_t k = 0; k < taus.size(); ++k)
      taus[k] = plan.tau_min_us +
                (plan.tau_max_us - plan.tau_min_us) * (static_cast<double>(k) + unit(set_rng)) / n_tau;
    std::shuffle(taus.begin(), taus.end(), set_rng);

    for (std::size_t k = 0; k < taus.size(); ++k) {
      Rng rec_rng = derive_stream(seed, {s, k + 1});
      PulseSettings settings{taus[k], phi, fB, chi};
      DatasetRecord rec = simulate_batch(settings, config, plan.calib, plan.R, plan.n_shots, rec_rng);
      rec.set_id = static_cast<std::int64_t>(s);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

PrepChannelEstimate prep_channel_check(double noise_power, std::size_t n_shots, Rng& rng, std::size_t n_steps) {
  if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
    throw InvalidArgument("prep_channel_check: noise power must be finite and >= 0");
  if (n_shots == 0 || n_steps == 0) throw InvalidArgument("prep_channel_check: need shots and steps");
  // T_p = 1: beta_k ~ N(0, A_p / dt) on n_steps slices, increments beta_k dt ~ N(0, A_p T_p / n_steps).
  const double dt = 1.0 / static_cast<double>(n_steps);
  const double increment_sigma = std::sqrt(noise_power / static_cast<double>(n_steps));
  RunningStats eps;
  RunningStats gamma;
  const Operator2 rho0 = QubitState::ground().rho();
  for (std::size_t i = 0; i < n_shots; ++i) {
    Operator2 u = Operator2::Identity();
    double phase = 0.0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double dphi = normal(rng, increment_sigma);
      const double beta = dphi / dt;
      phase += dphi;
      // exp(-i beta dt X)
      u = bloch_propagator(2.0 * beta, 0.0, 0.0, dt) * u;
    }
    const Operator2 rho = u * rho0 * u.adjoint();
    eps.add(rho(1, 1).real());
    gamma.add(std::cos(2.0 * phase));
  }
  return {eps.mean, eps.std_err(), gamma.mean, gamma.std_err()};
}

}  // namespace gbsense
