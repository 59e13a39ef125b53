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

#include "gbsense/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbsense/errors.hpp"

namespace gbsense {

namespace {

constexpr Complex kI{0.0, 1.0};

double max_abs(const Operator2& a) { return a.cwiseAbs().maxCoeff(); }

bool all_finite(const Operator2& a) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

}  // namespace

Operator2 identity2() { return Operator2::Identity(); }

Operator2 pauli(Axis axis) {
  Operator2 m;
  switch (axis) {
    case Axis::X:
      m << 0.0, 1.0, 1.0, 0.0;
      break;
    case Axis::Y:
      m << 0.0, -kI, kI, 0.0;
      break;
    case Axis::Z:
      m << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return m;
}

bool is_unitary(const Operator2& u, double tol) {
  return all_finite(u) && max_abs(u.adjoint() * u - Operator2::Identity()) <= tol;
}

bool is_hermitian(const Operator2& a, double tol) {
  return all_finite(a) && max_abs(a - a.adjoint()) <= tol;
}

Operator2 axis_rotation(Axis axis, double angle) {
  if (!std::isfinite(angle)) throw InvalidArgument("axis_rotation: non-finite angle");
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  return c * Operator2::Identity() - kI * s * pauli(axis);
}

Operator2 bloch_propagator(double hx, double hy, double hz, double dt) {
  const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double half = 0.5 * norm * dt;
  if (norm == 0.0 || half == 0.0) return Operator2::Identity();
  const double c = std::cos(half);
  const double s = std::sin(half) / norm;
  Operator2 u;
  // cos(h/2) I - i sin(h/2) n.sigma
  u(0, 0) = Complex(c, -s * hz);
  u(1, 1) = Complex(c, s * hz);
  u(0, 1) = Complex(-s * hy, -s * hx);
  u(1, 0) = Complex(s * hy, -s * hx);
  return u;
}

void PulseSettings::validate() const {
  if (!(tau_us >= 0.0) || !std::isfinite(tau_us))
    throw InvalidArgument("PulseSettings: tau must be finite and >= 0");
  if (!std::isfinite(phi_rad)) throw InvalidArgument("PulseSettings: phi must be finite");
  if (!std::isfinite(fB_MHz)) throw InvalidArgument("PulseSettings: fB must be finite");
  for (double c : chi)
    if (!std::isfinite(c)) throw InvalidArgument("PulseSettings: chi entries must be finite");
}

void ReadoutCalibration::validate() const {
  if (!(pi0 >= 0.0 && pi0 <= 1.0) || !(pi1 >= 0.0 && pi1 <= 1.0))
    throw InvalidArgument("ReadoutCalibration: pi0 and pi1 must lie in [0, 1]");
  if (!(pi0 + pi1 > 0.0)) throw DegenerateCalibration("ReadoutCalibration: pi0 + pi1 must be > 0");
}

double ReadoutCalibration::visibility() const {
  if (!(pi0 + pi1 > 0.0)) throw DegenerateCalibration("ReadoutCalibration: pi0 + pi1 must be > 0");
  return (pi0 - pi1) / (pi0 + pi1);
}

QubitState::QubitState(const Operator2& rho) : rho_(rho) {
  if (!is_hermitian(rho)) throw InvalidArgument("QubitState: density matrix is not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > kMatrixTolerance) throw InvalidArgument("QubitState: trace != 1");
  const double a = rho(0, 0).real();
  const double d = rho(1, 1).real();
  const double disc = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(rho(0, 1)));
  if (0.5 * (a + d) - disc < -kMatrixTolerance)
    throw InvalidArgument("QubitState: density matrix has a negative eigenvalue");
}

QubitState QubitState::ground() {
  Operator2 m = Operator2::Zero();
  m(0, 0) = 1.0;
  return QubitState(m, Unchecked{});
}

QubitState QubitState::excited() {
  Operator2 m = Operator2::Zero();
  m(1, 1) = 1.0;
  return QubitState(m, Unchecked{});
}

QubitState QubitState::plus_x() {
  Operator2 m;
  m << 0.5, 0.5, 0.5, 0.5;
  return QubitState(m, Unchecked{});
}

QubitState QubitState::plus_y() {
  Operator2 m;
  m << 0.5, -0.5 * kI, 0.5 * kI, 0.5;
  return QubitState(m, Unchecked{});
}

QubitState QubitState::maximally_mixed() {
  return QubitState(0.5 * Operator2::Identity(), Unchecked{});
}

double ramsey_phase(const PulseSettings& settings) {
  return 2.0 * kPi * settings.fB_MHz * settings.tau_us + settings.phi_rad;
}

Operator2 u_ramsey(const PulseSettings& settings) {
  const Operator2 half_pi = axis_rotation(Axis::X, 0.5 * kPi);
  return half_pi * axis_rotation(Axis::Z, ramsey_phase(settings)) * half_pi;
}

QubitState evolve(const QubitState& state, const Operator2& u) {
  if (!is_unitary(u)) throw InvalidArgument("evolve: operator is not unitary");
  return QubitState(u * state.rho() * u.adjoint(), QubitState::Unchecked{});
}

Expectation noisy_expectation(const NoiseOperator& v, const QubitState& state_tilde,
                              const Operator2& observable) {
  if (!is_hermitian(observable)) throw InvalidArgument("noisy_expectation: observable is not Hermitian");
  const Complex tr = (v.matrix * state_tilde.rho() * observable).trace();
  return {tr.real(), tr.imag()};
}

double click_probability(double z_expectation, const ReadoutCalibration& calib) {
  if (!(std::abs(z_expectation) <= 1.0 + kExpectationClampTolerance))
    throw InvalidArgument("click_probability: <Z> = " + std::to_string(z_expectation) +
                          " outside [-1, 1]");
  calib.validate();
  const double z = std::clamp(z_expectation, -1.0, 1.0);
  const double p = calib.alpha() * (1.0 + calib.visibility() * z);
  // Rounding can leave p an ulp outside the affine range.
  return std::clamp(p, std::min(calib.pi0, calib.pi1), std::max(calib.pi0, calib.pi1));
}

QubitState prep_error_state(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5))
    throw InvalidArgument("prep_error_state: epsilon must lie in [0, 1/2)");
  Operator2 m = Operator2::Zero();
  m(0, 0) = 1.0 - epsilon;
  m(1, 1) = epsilon;
  return QubitState(m);
}

}  // namespace gbsense
