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

#include "gbsense/errors.hpp"
#include "gbsense/graybox_model.hpp"
#include "gbsense/whitebox_model.hpp"
#include "test_util.hpp"

using namespace gbsense;

TEST_CASE("wb_likelihood examples") {
  const WhiteboxConfig inf = WhiteboxConfig::infinite();
  CHECK(wb_likelihood(0, {1.0, 0.0, 0.5, {}}, inf) == doctest::Approx(1.0).epsilon(1e-15));
  const WhiteboxConfig t2{5.4};
  CHECK(wb_likelihood(0, {5.4, 0.0, 0.0, {}}, t2) == doctest::Approx(0.5 * (1.0 - std::exp(-1.0))).epsilon(1e-14));
  CHECK(wb_likelihood(0, {5.4, 0.0, 0.0, {}}, t2) == doctest::Approx(0.3161).epsilon(1e-4));
  for (int d : {0, 1}) CHECK(wb_likelihood(d, {500.0, 0.3, 0.7, {}}, t2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(wb_likelihood(2, {1.0, 0.0, 0.0, {}}, t2), InvalidArgument);
  CHECK_THROWS_AS(WhiteboxConfig{0.0}.validate(), InvalidArgument);
  CHECK_THROWS_AS(WhiteboxConfig{-1.0}.validate(), InvalidArgument);
}

TEST_CASE("wb_likelihood normalizes exactly") {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const PulseSettings s = testing::random_settings(rng);
    const WhiteboxConfig cfg{testing::uniform(rng, 0.5, 20.0)};
    CHECK(wb_likelihood(0, s, cfg) + wb_likelihood(1, s, cfg) == 1.0);
  }
}

TEST_CASE("envelope monotonicity in tau") {
  const WhiteboxConfig cfg{5.4};
  // theta fixed through phi so only the envelope varies.
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    const double tau = 0.2 * k;
    const double dev = std::abs(wb_likelihood(0, {tau, 0.4, 0.0, {}}, cfg) - 0.5);
    CHECK(dev <= prev + 1e-16);
    prev = dev;
  }
}

TEST_CASE("wb_click_probability examples") {
  const WhiteboxConfig inf = WhiteboxConfig::infinite();
  const PulseSettings s{1.3, 0.2, 0.9, {}};
  CHECK(wb_click_probability(s, inf, {1.0, 0.0}) == doctest::Approx(wb_likelihood(0, s, inf)).epsilon(1e-15));
  CHECK(wb_click_probability(s, {5.4}, {0.2, 0.2}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(wb_click_probability({1.0, 0.0, 0.5, {}}, inf, {0.03, 0.02}) == doctest::Approx(0.03).epsilon(1e-14));
}

TEST_CASE("wb_click_probability equals the calibration map") {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const PulseSettings s = testing::random_settings(rng);
    const WhiteboxConfig cfg{testing::uniform(rng, 0.5, 20.0)};
    const ReadoutCalibration c{testing::uniform(rng, 0.0, 1.0), testing::uniform(rng, 0.0, 1.0)};
    const double z = 1.0 - 2.0 * wb_likelihood(1, s, cfg);
    CHECK(std::abs(wb_click_probability(s, cfg, c) - click_probability(z, c)) <= 1e-15);
  }
}

TEST_CASE("wb_predict_grid examples") {
  const ReadoutCalibration c{0.03, 0.02};
  const WhiteboxConfig cfg{5.4};
  const std::vector<double> one{1.1};
  const auto single = wb_predict_grid(2.0, 0.3, c, cfg, one);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == doctest::Approx(wb_click_probability({2.0, 0.3, 1.1, {}}, cfg, c)).epsilon(1e-15));

  // cos(2 pi f tau) is even in f, so a grid symmetric about 0 gives a palindrome.
  std::vector<double> grid;
  for (int k = -50; k <= 50; ++k) grid.push_back(0.03 * k);
  const auto v = wb_predict_grid(3.3, 0.0, c, cfg, grid);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(v[v.size() - 1 - i]).epsilon(1e-13));
  for (double p : v) {
    CHECK(p >= 0.02);
    CHECK(p <= 0.03);
  }
  const std::vector<double> descending{1.0, 0.5};
  CHECK_THROWS_AS(wb_predict_grid(1.0, 0.0, c, cfg, descending), InvalidArgument);
  CHECK_THROWS_AS(wb_predict_grid(1.0, 0.0, c, cfg, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("whitebox and graybox providers share the grid contract") {
  GrayboxParams gb = make_graybox(hidden_layers_from_widths({6, 4}), 0, 11);
  const ReadoutCalibration c{0.3, 0.15};
  std::vector<double> grid;
  for (int k = 0; k <= 200; ++k) grid.push_back(0.01 * k);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double tau = testing::uniform(rng, 0.0, 10.0);
    const double phi = testing::uniform(rng, -kPi, kPi);
    const auto wb = wb_predict_grid(tau, phi, c, WhiteboxConfig{5.4}, grid);
    const auto gbp = gb_predict_grid(gb, tau, phi, c, {}, grid);
    REQUIRE(wb.size() == grid.size());
    REQUIRE(gbp.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(wb[i] >= 0.15);
      CHECK(wb[i] <= 0.3);
      CHECK(gbp[i] >= 0.15);
      CHECK(gbp[i] <= 0.3);
    }
  }
}
