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

// Exact 2x2 linear algebra for a single qubit: rotations, the ideal Ramsey
// unitary, density-matrix evolution, noise-operator expectations and the
// photon-click map.
//
// Units: time in microseconds, frequency in MHz. Their product is a number of
// cycles, so phases are 2*pi*f*t with no extra scale factors.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace gbsense {

using Complex = std::complex<double>;
using Operator2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMatrixTolerance = 1e-12;
inline constexpr double kExpectationClampTolerance = 1e-9;

enum class Axis { X, Y, Z };

Operator2 identity2();
Operator2 pauli(Axis axis);

bool is_unitary(const Operator2& u, double tol = kMatrixTolerance);
bool is_hermitian(const Operator2& a, double tol = kMatrixTolerance);

/// exp(-i * angle * sigma_axis / 2). Throws InvalidArgument on a non-finite angle.
Operator2 axis_rotation(Axis axis, double angle);

/// exp(-i * dt * (hx*X + hy*Y + hz*Z) / 2) for angular rates hx, hy, hz.
/// Closed form, unitary to machine precision.
Operator2 bloch_propagator(double hx, double hy, double hz, double dt);

/// Ideal Ramsey sequence parameters.
struct PulseSettings {
  double tau_us = 0.0;
  double phi_rad = 0.0;
  double fB_MHz = 0.0;
  std::vector<double> chi;

  void validate() const;
};

/// Per-batch detector click probabilities for the qubit in |0> and |1>.
struct ReadoutCalibration {
  double pi0 = 1.0;
  double pi1 = 0.0;

  void validate() const;
  double alpha() const { return 0.5 * (pi0 + pi1); }
  /// (pi0 - pi1) / (pi0 + pi1); throws DegenerateCalibration when pi0 + pi1 == 0.
  double visibility() const;
};

class QubitState {
 public:
  /// Validates trace, hermiticity and positivity within kMatrixTolerance.
  explicit QubitState(const Operator2& rho);

  static QubitState ground();  // |0><0|
  static QubitState excited();  // |1><1|
  static QubitState plus_x();  // |+><+|
  static QubitState plus_y();  // |+i><+i|
  static QubitState maximally_mixed();

  const Operator2& rho() const { return rho_; }

 private:
  struct Unchecked {};
  QubitState(const Operator2& rho, Unchecked) : rho_(rho) {}
  friend QubitState evolve(const QubitState& state, const Operator2& u);

  Operator2 rho_;
};

/// Correction operator V_Z entering <Z> = tr(V rho_tilde Z).
struct NoiseOperator {
  Operator2 matrix = Operator2::Identity();
};

/// 2*pi*fB*tau + phi.
double ramsey_phase(const PulseSettings& settings);

/// R_X(pi/2) R_Z(theta) R_X(pi/2).
Operator2 u_ramsey(const PulseSettings& settings);

/// u rho u^dagger. Throws InvalidArgument if u is not unitary.
QubitState evolve(const QubitState& state, const Operator2& u);

struct Expectation {
  double value = 0.0;
  /// Im tr(V rho O). Zero for physical expectations; kept for diagnostics
  /// since V need not be Hermitian.
  double imag_residue = 0.0;
};

/// Re tr(V rho_tilde O). The observable must be Hermitian.
Expectation noisy_expectation(const NoiseOperator& v, const QubitState& state_tilde,
                              const Operator2& observable);

/// alpha * (1 + V <Z>). <Z> beyond [-1, 1] by more than
/// kExpectationClampTolerance is rejected; smaller excursions are clamped.
double click_probability(double z_expectation, const ReadoutCalibration& calib);

/// (1 - eps)|0><0| + eps|1><1| for eps in [0, 1/2).
QubitState prep_error_state(double epsilon);

}  // namespace gbsense
