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

#include "gbsense/bayes_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gbsense/dataset_io.hpp"
#include "gbsense/errors.hpp"
#include "gbsense/random.hpp"

namespace gbsense {

namespace {

const double kLogDegenerate = std::log(kDegenerateNormalization);
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_binomial(std::int64_t r, std::int64_t R, double p) {
  const auto rd = static_cast<double>(r);
  const auto Rd = static_cast<double>(R);
  if (p <= 0.0) return r == 0 ? 0.0 : kNegInf;
  if (p >= 1.0) return r == R ? 0.0 : kNegInf;
  return std::lgamma(Rd + 1.0) - std::lgamma(rd + 1.0) - std::lgamma(Rd - rd + 1.0) + rd * std::log(p) +
         (Rd - rd) * std::log1p(-p);
}

double log_gaussian(std::int64_t r, std::int64_t R, double p) {
  const auto rd = static_cast<double>(r);
  const auto Rd = static_cast<double>(R);
  const double p_hat = std::clamp(rd / Rd, 1.0 / Rd, 1.0 - 1.0 / Rd);
  const double floor = std::max(1.0, Rd * p_hat * (1.0 - p_hat));
  const double var = std::max(rd * (Rd - rd) / Rd, floor);
  const double d = rd - p * Rd;
  return -0.5 * std::log(2.0 * kPi * var) - d * d / (2.0 * var);
}

}  // namespace

double PosteriorGrid::node(std::size_t i) const {
  // Endpoint-exact interpolation.
  const double t = static_cast<double>(i) / static_cast<double>(m_subintervals);
  return i == m_subintervals ? f_max_MHz : f_min_MHz + t * (f_max_MHz - f_min_MHz);
}

std::vector<double> PosteriorGrid::nodes() const {
  std::vector<double> f(m_subintervals + 1);
  for (std::size_t i = 0; i <= m_subintervals; ++i) f[i] = node(i);
  return f;
}

void PosteriorGrid::validate() const {
  if (!std::isfinite(f_min_MHz) || !std::isfinite(f_max_MHz) || !(f_min_MHz < f_max_MHz))
    throw InvalidArgument("PosteriorGrid: need finite f_min < f_max");
  if (m_subintervals < 2) throw InvalidArgument("PosteriorGrid: need at least 2 subintervals");
  if (density.size() != m_subintervals + 1) throw InvalidArgument("PosteriorGrid: density must have M + 1 nodes");
}

PosteriorGrid uniform_prior(double f_min_MHz, double f_max_MHz, std::size_t m_subintervals) {
  PosteriorGrid g{f_min_MHz, f_max_MHz, m_subintervals, {}};
  g.density.assign(m_subintervals + 1, 0.0);
  g.validate();
  std::fill(g.density.begin(), g.density.end(), 1.0 / (f_max_MHz - f_min_MHz));
  return g;
}

double trapezoid(std::span<const double> y, double h) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

double normalization(const PosteriorGrid& post) { return trapezoid(post.density, post.spacing()); }

CountMode parse_count_mode(const std::string& s) {
  if (s == "auto") return CountMode::Auto;
  if (s == "gaussian") return CountMode::Gaussian;
  if (s == "binomial") return CountMode::Binomial;
  throw InvalidArgument("unknown count mode '" + s + "' (expected auto, gaussian or binomial)");
}

std::string to_string(CountMode mode) {
  switch (mode) {
    case CountMode::Gaussian: return "gaussian";
    case CountMode::Binomial: return "binomial";
    default: return "auto";
  }
}

CountMode resolve_count_mode(CountMode mode, std::int64_t r, std::int64_t R) {
  if (mode != CountMode::Auto) return mode;
  return std::min(r, R - r) >= kGaussianModeMinCounts ? CountMode::Gaussian : CountMode::Binomial;
}

double log_count_likelihood(std::int64_t r, std::int64_t R, double p_cl, CountMode mode) {
  if (R < 1) throw InvalidArgument("count likelihood: R must be >= 1");
  if (r < 0 || r > R)
    throw InvalidArgument("count likelihood: need 0 <= r <= R, got r=" + std::to_string(r) +
                          ", R=" + std::to_string(R));
  if (!(p_cl >= 0.0 && p_cl <= 1.0)) throw InvalidArgument("count likelihood: p_cl must lie in [0, 1]");
  return resolve_count_mode(mode, r, R) == CountMode::Gaussian ? log_gaussian(r, R, p_cl) : log_binomial(r, R, p_cl);
}

double count_likelihood(std::int64_t r, std::int64_t R, double p_cl, CountMode mode) {
  return std::exp(log_count_likelihood(r, R, p_cl, mode));
}

void MeasurementBatch::validate() const {
  if (!std::isfinite(tau_us) || tau_us < 0.0) throw InvalidArgument("MeasurementBatch: tau must be finite and >= 0");
  if (!std::isfinite(phi_rad)) throw InvalidArgument("MeasurementBatch: phi must be finite");
  calib.validate();
  if (R < 1 || r < 0 || r > R) throw InvalidArgument("MeasurementBatch: need 0 <= r <= R and R >= 1");
}

MeasurementBatch MeasurementBatch::from_record(const DatasetRecord& rec) {
  MeasurementBatch b{rec.settings.tau_us, rec.settings.phi_rad, rec.settings.chi, rec.calib, rec.R, rec.r};
  b.validate();
  return b;
}

std::vector<double> batch_log_likelihood(const MeasurementBatch& batch, const LikelihoodProvider& provider,
                                         std::span<const double> f_grid, CountMode mode) {
  batch.validate();
  const std::vector<double> p = provider.predict_grid(batch.tau_us, batch.phi_rad, batch.calib, batch.chi, f_grid);
  if (p.size() != f_grid.size())
    throw InvalidArgument("provider '" + provider.name() + "' returned " + std::to_string(p.size()) +
                          " values for a grid of " + std::to_string(f_grid.size()));
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw InvalidArgument("provider '" + provider.name() + "' returned a non-probability at node " +
                            std::to_string(i));
    out[i] = log_count_likelihood(batch.r, batch.R, p[i], mode);
  }
  return out;
}

UpdateResult update_with_log_likelihood(const PosteriorGrid& post, std::span<const double> log_likelihood) {
  if (log_likelihood.size() != post.density.size())
    throw InvalidArgument("update: likelihood length does not match the grid");
  double max_log = kNegInf;
  for (std::size_t i = 0; i < log_likelihood.size(); ++i) {
    if (std::isnan(log_likelihood[i])) throw NumericError("update: NaN log-likelihood");
    if (post.density[i] > 0.0) max_log = std::max(max_log, log_likelihood[i]);
  }
  if (max_log == kNegInf) return {post, true};

  std::vector<double> next(post.density.size());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = post.density[i] * std::exp(log_likelihood[i] - max_log);
  const double shifted = trapezoid(next, post.spacing());
  if (!(shifted > 0.0) || max_log + std::log(shifted) <= kLogDegenerate) return {post, true};

  for (double& d : next) d /= shifted;
  UpdateResult out{post, false};
  out.posterior.density = std::move(next);
  return out;
}

UpdateResult update(const PosteriorGrid& post, const MeasurementBatch& batch, const LikelihoodProvider& provider,
                    CountMode mode) {
  post.validate();
  const std::vector<double> f = post.nodes();
  return update_with_log_likelihood(post, batch_log_likelihood(batch, provider, f, mode));
}

double mean_estimate(const PosteriorGrid& post) {
  std::vector<double> y(post.density.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = post.node(i) * post.density[i];
  return trapezoid(y, post.spacing());
}

double variance(const PosteriorGrid& post, double f_hat) {
  std::vector<double> y(post.density.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = post.node(i) - f_hat;
    y[i] = d * d * post.density[i];
  }
  return std::max(0.0, trapezoid(y, post.spacing()));
}

double squared_error(double f_hat, double f_true) {
  const double d = f_hat - f_true;
  return d * d;
}

void EstimationOptions::validate() const {
  if (!std::isfinite(f_min_MHz) || !std::isfinite(f_max_MHz) || !(f_min_MHz < f_max_MHz))
    throw InvalidArgument("estimation: need finite f_min < f_max");
  if (m_subintervals < 2) throw InvalidArgument("estimation: grid needs at least 2 subintervals");
  if (orderings < 1) throw InvalidArgument("estimation: orderings must be >= 1");
  if (truth_MHz && !std::isfinite(*truth_MHz)) throw InvalidArgument("estimation: truth must be finite");
}

std::vector<double> EstimationTrace::final_fhat() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.fhat_MHz.back());
  return v;
}

std::vector<double> EstimationTrace::final_E() const {
  std::vector<double> v;
  for (const auto& r : runs)
    if (!r.sq_error_MHz2.empty()) v.push_back(r.sq_error_MHz2.back());
  return v;
}

std::vector<double> EstimationTrace::final_V() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.variance_MHz2.back());
  return v;
}

EstimationTrace run_estimation(const std::vector<MeasurementBatch>& batches, const LikelihoodProvider& provider,
                               const EstimationOptions& options) {
  options.validate();
  if (batches.empty()) throw InvalidArgument("estimation: no batches");
  const PosteriorGrid prior = uniform_prior(options.f_min_MHz, options.f_max_MHz, options.m_subintervals);
  const std::vector<double> f = prior.nodes();

  // Likelihoods do not depend on the ordering.
  std::vector<std::vector<double>> log_lik;
  log_lik.reserve(batches.size());
  for (const auto& b : batches) log_lik.push_back(batch_log_likelihood(b, provider, f, options.mode));

  const std::size_t n = batches.size();
  EstimationTrace trace;
  trace.mean_fhat_MHz.assign(n, 0.0);
  trace.mean_V_MHz2.assign(n, 0.0);
  trace.skip_rate.assign(n, 0.0);
  if (options.truth_MHz) trace.mean_E_MHz2.assign(n, 0.0);

  for (std::size_t o = 0; o < options.orderings; ++o) {
    OrderingRun run;
    run.order.resize(n);
    std::iota(run.order.begin(), run.order.end(), 0);
    Rng rng = derive_stream(options.seed, {o});
    std::shuffle(run.order.begin(), run.order.end(), rng);

    PosteriorGrid post = prior;
    for (std::size_t k = 0; k < n; ++k) {
      UpdateResult u = update_with_log_likelihood(post, log_lik[run.order[k]]);
      post = std::move(u.posterior);
      const double fhat = mean_estimate(post);
      const double v = variance(post, fhat);
      if (!std::isfinite(fhat) || !std::isfinite(v)) throw NumericError("estimation: non-finite posterior summary");
      run.fhat_MHz.push_back(fhat);
      run.variance_MHz2.push_back(v);
      run.skipped.push_back(u.skipped);
      trace.mean_fhat_MHz[k] += fhat;
      trace.mean_V_MHz2[k] += v;
      trace.skip_rate[k] += u.skipped ? 1.0 : 0.0;
      if (options.truth_MHz) {
        const double e = squared_error(fhat, *options.truth_MHz);
        run.sq_error_MHz2.push_back(e);
        trace.mean_E_MHz2[k] += e;
      }
    }
    if (options.keep_final_posteriors) trace.final_posteriors.push_back(std::move(post));
    trace.runs.push_back(std::move(run));
  }
  const double inv = 1.0 / static_cast<double>(options.orderings);
  for (auto* v : {&trace.mean_fhat_MHz, &trace.mean_V_MHz2, &trace.skip_rate, &trace.mean_E_MHz2})
    for (double& x : *v) x *= inv;
  return trace;
}

std::string estimation_trace_csv(const EstimationTrace& trace) {
  std::string s = "iteration,mean_fhat_MHz,mean_E_MHz2,mean_V_MHz2,skip_rate\n";
  for (std::size_t k = 0; k < trace.iterations(); ++k) {
    s += std::to_string(k + 1) + "," + format_double(trace.mean_fhat_MHz[k]) + ",";
    if (!trace.mean_E_MHz2.empty()) s += format_double(trace.mean_E_MHz2[k]);
    s += "," + format_double(trace.mean_V_MHz2[k]) + "," + format_double(trace.skip_rate[k]) + "\n";
  }
  return s;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DistributionSummary summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("summary of an empty sample");
  return {values.size(),
          *std::min_element(values.begin(), values.end()),
          quantile(values, 0.25),
          quantile(values, 0.5),
          quantile(values, 0.75),
          *std::max_element(values.begin(), values.end())};
}

}  // namespace gbsense
