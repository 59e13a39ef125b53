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

// Grid-based Bayesian estimation of the detuning from click-count batches.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbsense/quantum_core.hpp"
#include "gbsense/sensor_sim.hpp"

namespace gbsense {

/// Updates whose evidence falls to or below this are skipped.
inline constexpr double kDegenerateNormalization = 1e-300;
inline constexpr std::int64_t kGaussianModeMinCounts = 25;

/// Density (per MHz) on M + 1 equally spaced nodes spanning [f_min, f_max].
struct PosteriorGrid {
  double f_min_MHz = 0.0;
  double f_max_MHz = 1.0;
  std::size_t m_subintervals = 2;
  std::vector<double> density;

  double spacing() const { return (f_max_MHz - f_min_MHz) / static_cast<double>(m_subintervals); }
  double node(std::size_t i) const;
  std::vector<double> nodes() const;
  void validate() const;
};

PosteriorGrid uniform_prior(double f_min_MHz, double f_max_MHz, std::size_t m_subintervals);

/// Composite trapezoid rule on equally spaced samples.
double trapezoid(std::span<const double> y, double h);
double normalization(const PosteriorGrid& post);

enum class CountMode { Auto, Gaussian, Binomial };
CountMode parse_count_mode(const std::string& s);
std::string to_string(CountMode mode);
/// Auto resolves to Gaussian once both r and R - r reach kGaussianModeMinCounts.
CountMode resolve_count_mode(CountMode mode, std::int64_t r, std::int64_t R);

double log_count_likelihood(std::int64_t r, std::int64_t R, double p_cl, CountMode mode);
double count_likelihood(std::int64_t r, std::int64_t R, double p_cl, CountMode mode);

struct MeasurementBatch {
  double tau_us = 0.0;
  double phi_rad = 0.0;
  std::vector<double> chi;
  ReadoutCalibration calib;
  std::int64_t R = 1;
  std::int64_t r = 0;

  void validate() const;
  static MeasurementBatch from_record(const DatasetRecord& rec);
};

class LikelihoodProvider {
 public:
  virtual ~LikelihoodProvider() = default;
  /// Click probability at every frequency in an ascending grid.
  virtual std::vector<double> predict_grid(double tau_us, double phi_rad, const ReadoutCalibration& calib,
                                           const std::vector<double>& chi, std::span<const double> f_grid) const = 0;
  virtual std::string name() const = 0;
};

/// Log of P(r | f) at every node, checked against the provider contract.
std::vector<double> batch_log_likelihood(const MeasurementBatch& batch, const LikelihoodProvider& provider,
                                         std::span<const double> f_grid, CountMode mode);

struct UpdateResult {
  PosteriorGrid posterior;
  bool skipped = false;
};

UpdateResult update_with_log_likelihood(const PosteriorGrid& post, std::span<const double> log_likelihood);
UpdateResult update(const PosteriorGrid& post, const MeasurementBatch& batch, const LikelihoodProvider& provider,
                    CountMode mode = CountMode::Auto);

double mean_estimate(const PosteriorGrid& post);
double variance(const PosteriorGrid& post, double f_hat);
double squared_error(double f_hat, double f_true);

struct EstimationOptions {
  double f_min_MHz = 0.0;
  double f_max_MHz = 1.0;
  std::size_t m_subintervals = 5000;
  std::size_t orderings = 100;
  std::uint64_t seed = 0;
  CountMode mode = CountMode::Auto;
  std::optional<double> truth_MHz;
  bool keep_final_posteriors = false;

  void validate() const;
};

/// One sequential pass over a permutation of the batches.
struct OrderingRun {
  std::vector<std::size_t> order;
  std::vector<double> fhat_MHz;
  std::vector<double> variance_MHz2;
  std::vector<double> sq_error_MHz2;  // empty without a truth value
  std::vector<bool> skipped;
};

struct EstimationTrace {
  std::vector<double> mean_fhat_MHz;
  std::vector<double> mean_E_MHz2;  // empty without a truth value
  std::vector<double> mean_V_MHz2;
  std::vector<double> skip_rate;
  std::vector<OrderingRun> runs;
  std::vector<PosteriorGrid> final_posteriors;

  std::size_t iterations() const { return mean_fhat_MHz.size(); }
  std::vector<double> final_fhat() const;
  std::vector<double> final_E() const;
  std::vector<double> final_V() const;
};

EstimationTrace run_estimation(const std::vector<MeasurementBatch>& batches, const LikelihoodProvider& provider,
                               const EstimationOptions& options);

std::string estimation_trace_csv(const EstimationTrace& trace);

struct DistributionSummary {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles by linear interpolation between order statistics.
DistributionSummary summarize(std::span<const double> values);
double quantile(std::span<const double> values, double q);

}  // namespace gbsense
