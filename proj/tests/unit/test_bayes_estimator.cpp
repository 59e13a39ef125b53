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

#include "doctest.h"

#include <limits>

#include "gbsense/bayes_estimator.hpp"
#include "gbsense/errors.hpp"
#include "gbsense/providers.hpp"
#include "test_util.hpp"

using namespace gbsense;

namespace {

class ConstantProvider final : public LikelihoodProvider {
 public:
  explicit ConstantProvider(double p, std::size_t drop = 0) : p_(p), drop_(drop) {}
  std::vector<double> predict_grid(double, double, const ReadoutCalibration&, const std::vector<double>&,
                                   std::span<const double> f) const override {
    return std::vector<double>(f.size() - drop_, p_);
  }
  std::string name() const override { return "const"; }

 private:
  double p_;
  std::size_t drop_;
};

std::vector<MeasurementBatch> exact_batches(double f_true, std::uint64_t seed, std::size_t n = 32) {
  DatasetPlan plan;
  plan.n_frequency_sets = 1;
  plan.taus_per_set = n;
  plan.f_min_MHz = f_true;
  plan.f_max_MHz = f_true + 1e-12;
  plan.R = 100000;
  plan.calib = {0.3, 0.15};
  std::vector<MeasurementBatch> out;
  for (const auto& r : generate_dataset(plan, NoiseConfig{}, seed)) out.push_back(MeasurementBatch::from_record(r));
  return out;
}

}  // namespace

TEST_CASE("uniform_prior examples") {
  const PosteriorGrid g = uniform_prior(0.0, 2.0, 100);
  for (double d : g.density) CHECK(d == 0.5);
  CHECK(normalization(g) == 1.0);
  CHECK(uniform_prior(0.0, 2.5, 5000).density.size() == 5001);
  CHECK(uniform_prior(0.0, 2.5, 5000).nodes().back() == 2.5);
  CHECK_THROWS_AS(uniform_prior(1.0, 1.0, 10), InvalidArgument);
  CHECK_THROWS_AS(uniform_prior(0.0, 1.0, 1), InvalidArgument);
}

TEST_CASE("trapezoid is exact on wide Gaussians") {
  const double h = 0.001;
  const double sigma = 10.0 * h;
  std::vector<double> y;
  for (int i = -2000; i <= 2000; ++i) {
    const double x = i * h;
    y.push_back(std::exp(-x * x / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * kPi)));
  }
  CHECK(std::abs(trapezoid(y, h) - 1.0) < 1e-8);
}

TEST_CASE("count_likelihood examples") {
  CHECK(count_likelihood(0, 1, 0.3, CountMode::Binomial) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(count_likelihood(1, 1, 0.3, CountMode::Binomial) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(count_likelihood(0, 50, 0.0, CountMode::Binomial) == 1.0);
  CHECK(count_likelihood(3, 50, 0.0, CountMode::Binomial) == 0.0);
  CHECK(count_likelihood(50, 50, 1.0, CountMode::Binomial) == 1.0);
  const double g = count_likelihood(250, 10000, 0.025, CountMode::Gaussian);
  const double b = count_likelihood(250, 10000, 0.025, CountMode::Binomial);
  CHECK(std::abs(g - b) / b < 0.01);
  for (int r = 230; r <= 270; r += 5)
    CHECK(std::abs(count_likelihood(r, 10000, 0.025, CountMode::Gaussian) /
                       count_likelihood(r, 10000, 0.025, CountMode::Binomial) -
                   1.0) < 0.05);
  CHECK_THROWS_AS(count_likelihood(11, 10, 0.5, CountMode::Binomial), InvalidArgument);
  CHECK_THROWS_AS(count_likelihood(-1, 10, 0.5, CountMode::Binomial), InvalidArgument);
  CHECK_THROWS_AS(count_likelihood(1, 10, 1.5, CountMode::Binomial), InvalidArgument);
}

TEST_CASE("binomial log-likelihood equals the brute-force pmf") {
  const std::int64_t R = 40;
  const double p = 0.31;
  for (std::int64_t r = 0; r <= R; ++r) {
    double c = 1.0;
    for (std::int64_t k = 1; k <= r; ++k) c *= static_cast<double>(R - r + k) / static_cast<double>(k);
    const double pmf = c * std::pow(p, r) * std::pow(1 - p, R - r);
    CHECK(count_likelihood(r, R, p, CountMode::Binomial) == doctest::Approx(pmf).epsilon(1e-11));
  }
}

TEST_CASE("count mode resolution and gaussian variance floor") {
  CHECK(resolve_count_mode(CountMode::Auto, 25, 100) == CountMode::Gaussian);
  CHECK(resolve_count_mode(CountMode::Auto, 24, 100) == CountMode::Binomial);
  CHECK(resolve_count_mode(CountMode::Auto, 80, 100) == CountMode::Binomial);
  CHECK(resolve_count_mode(CountMode::Binomial, 50, 100) == CountMode::Binomial);
  CHECK(parse_count_mode("gaussian") == CountMode::Gaussian);
  CHECK_THROWS_AS(parse_count_mode("poisson"), InvalidArgument);
  // r = 0 would make the variance vanish; the floor keeps the density finite.
  const double l = count_likelihood(0, 100, 0.0, CountMode::Gaussian);
  CHECK(std::isfinite(l));
  CHECK(l > 0.0);
}

TEST_CASE("update examples") {
  const PosteriorGrid prior = uniform_prior(0.0, 2.0, 200);
  MeasurementBatch b{1.0, 0.0, {}, {0.3, 0.15}, 1000, 200};
  const UpdateResult flat = update(prior, b, ConstantProvider(0.2));
  CHECK_FALSE(flat.skipped);
  for (std::size_t i = 0; i < prior.density.size(); ++i)
    CHECK(flat.posterior.density[i] == doctest::Approx(prior.density[i]).epsilon(1e-14));

  Rng rng(1);
  std::vector<double> ll(prior.density.size());
  for (double& x : ll) x = testing::uniform(rng, -30.0, 0.0);
  const UpdateResult once = update_with_log_likelihood(update_with_log_likelihood(prior, ll).posterior, ll);
  std::vector<double> ll2(ll.size());
  for (std::size_t i = 0; i < ll.size(); ++i) ll2[i] = 2.0 * ll[i];
  const UpdateResult squared = update_with_log_likelihood(prior, ll2);
  double worst = 0.0;
  for (std::size_t i = 0; i < ll.size(); ++i)
    worst = std::max(worst, std::abs(once.posterior.density[i] - squared.posterior.density[i]));
  CHECK(worst < 1e-12);

  // Every likelihood value underflows: evidence below the threshold.
  std::vector<double> tiny(prior.density.size(), -800.0);
  const UpdateResult skipped = update_with_log_likelihood(once.posterior, tiny);
  CHECK(skipped.skipped);
  CHECK(skipped.posterior.density == once.posterior.density);
  const std::vector<double> ninf(prior.density.size(), -std::numeric_limits<double>::infinity());
  CHECK(update_with_log_likelihood(prior, ninf).skipped);

  CHECK_THROWS_AS(update(prior, b, ConstantProvider(0.2, 1)), InvalidArgument);
  MeasurementBatch bad = b;
  bad.r = 2000;
  CHECK_THROWS_AS(update(prior, bad, ConstantProvider(0.2)), InvalidArgument);
}

TEST_CASE("log-space updates survive likelihoods that underflow in linear space") {
  const PosteriorGrid prior = uniform_prior(0.0, 1.0, 100);
  std::vector<double> ll(prior.density.size());
  for (std::size_t i = 0; i < ll.size(); ++i) ll[i] = -5000.0 + static_cast<double>(i);
  const UpdateResult u = update_with_log_likelihood(prior, ll);
  // Evidence is e^-4900: far below the guard, so the update is skipped.
  CHECK(u.skipped);
  for (std::size_t i = 0; i < ll.size(); ++i) ll[i] = -600.0 + 6.0 * static_cast<double>(i);
  const UpdateResult v = update_with_log_likelihood(prior, ll);
  CHECK_FALSE(v.skipped);
  CHECK(std::abs(normalization(v.posterior) - 1.0) < 1e-12);
}

TEST_CASE("mean, variance and squared error") {
  const PosteriorGrid u = uniform_prior(0.0, 2.0, 5000);
  CHECK(mean_estimate(u) == doctest::Approx(1.0).epsilon(1e-14));
  const PosteriorGrid w = uniform_prior(0.5, 3.5, 5000);
  const double v = variance(w, mean_estimate(w));
  CHECK(std::abs(v - 9.0 / 12.0) / (9.0 / 12.0) < 1e-6);

  // One-hot via a likelihood that vanishes off node k.
  const std::size_t k = 1234;
  std::vector<double> ll(u.density.size(), -std::numeric_limits<double>::infinity());
  ll[k] = 0.0;
  const PosteriorGrid hot = update_with_log_likelihood(u, ll).posterior;
  CHECK(std::abs(mean_estimate(hot) - u.node(k)) < 1e-12);
  CHECK(variance(hot, mean_estimate(hot)) <= u.spacing() * u.spacing());

  // Narrow triangle centred on a node.
  std::vector<double> tri(u.density.size());
  for (std::size_t i = 0; i < tri.size(); ++i)
    tri[i] = std::log(std::max(1e-300, 1.0 - std::abs(static_cast<double>(i) - 3000.0) / 7.0));
  const PosteriorGrid t = update_with_log_likelihood(u, tri).posterior;
  CHECK(std::abs(mean_estimate(t) - u.node(3000)) < u.spacing());

  // Shifting grid and density together keeps the variance.
  PosteriorGrid shifted = t;
  shifted.f_min_MHz += 3.0;
  shifted.f_max_MHz += 3.0;
  CHECK(variance(shifted, mean_estimate(shifted)) ==
        doctest::Approx(variance(t, mean_estimate(t))).epsilon(1e-8));

  CHECK(squared_error(1.0, 1.0) == 0.0);
  CHECK(squared_error(1.0, 1.001) == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(squared_error(0.3, 2.0) == squared_error(2.0, 0.3));
}

TEST_CASE("run_estimation with a single batch") {
  MeasurementBatch b{1.0, 0.0, {}, {0.3, 0.15}, 1000, 200};
  EstimationOptions opt;
  opt.f_max_MHz = 2.0;
  opt.m_subintervals = 100;
  opt.orderings = 1;
  const EstimationTrace t = run_estimation({b}, ConstantProvider(0.2), opt);
  CHECK(t.iterations() == 1);
  CHECK(t.mean_E_MHz2.empty());
  CHECK(t.runs.size() == 1);
  CHECK_THROWS_AS(run_estimation({}, ConstantProvider(0.2), opt), InvalidArgument);
}

TEST_CASE("exact provider recovers the frequency and is order independent") {
  const double f_true = 1.234;
  const auto batches = exact_batches(f_true, 7);
  const SimulatorProvider sim{NoiseConfig{}};
  EstimationOptions opt;
  opt.f_min_MHz = 0.0;
  opt.f_max_MHz = 2.5;
  opt.m_subintervals = 5000;
  opt.orderings = 20;
  opt.truth_MHz = f_true;
  opt.keep_final_posteriors = true;
  const EstimationTrace t = run_estimation(batches, sim, opt);
  CHECK(t.iterations() == 32);
  const double h = 2.5 / 5000;
  for (double f : t.final_fhat()) CHECK(std::abs(f - f_true) < 2.0 * h);

  double worst = 0.0;
  for (const auto& post : t.final_posteriors) {
    CHECK(std::abs(normalization(post) - 1.0) < 1e-9);
    for (std::size_t i = 0; i < post.density.size(); ++i) {
      CHECK(post.density[i] >= 0.0);
      worst = std::max(worst, std::abs(post.density[i] - t.final_posteriors[0].density[i]));
    }
  }
  for (const auto& run : t.runs)
    for (bool s : run.skipped) CHECK_FALSE(s);
  CHECK(worst < 1e-9);

  std::vector<double> v4, v32;
  for (const auto& run : t.runs) {
    v4.push_back(run.variance_MHz2[3]);
    v32.push_back(run.variance_MHz2[31]);
  }
  CHECK(quantile(v32, 0.5) < quantile(v4, 0.5));
  for (double x : t.mean_E_MHz2) CHECK(std::isfinite(x));
}

TEST_CASE("trace csv and distribution summary") {
  MeasurementBatch b{1.0, 0.0, {}, {0.3, 0.15}, 1000, 200};
  EstimationOptions opt;
  opt.f_max_MHz = 2.0;
  opt.m_subintervals = 50;
  opt.orderings = 3;
  opt.truth_MHz = 1.0;
  const std::string csv = estimation_trace_csv(run_estimation({b, b}, ConstantProvider(0.2), opt));
  CHECK(csv.rfind("iteration,mean_fhat_MHz,mean_E_MHz2,mean_V_MHz2,skip_rate\n1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  const std::vector<double> x{4.0, 1.0, 3.0, 2.0, 5.0};
  const DistributionSummary s = summarize(x);
  CHECK(s.count == 5);
  CHECK(s.min == 1.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.median == 3.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.max == 5.0);
  CHECK(quantile(std::vector<double>{1.0, 2.0}, 0.5) == 1.5);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), InvalidArgument);
}
