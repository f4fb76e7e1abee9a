// Copyright 2026 The descbench Authors.
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


#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "descbench/error.hpp"
#include "descbench/rng.hpp"
#include "descbench/stats.hpp"

namespace descbench {
namespace {

// Two-sided tail of Student t by Simpson integration of the density.
double t_two_sided_numeric(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double a = 0.0, b = std::abs(t);
  const int n = 20000;
  const double h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * (s * h / 3.0);
}

TEST(Descriptive, MeanVarianceQuantile) {
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(xs), 2.5);
  EXPECT_DOUBLE_EQ(variance(xs), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 4.0);
}

TEST(Pearson, PerfectLine) {
  const auto r = pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6});
  EXPECT_NEAR(r.r, 1.0, 1e-12);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_EQ(r.n, 3u);
}

TEST(Pearson, HandComputedValueAndPValue) {
  const auto r = pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 2});
  EXPECT_NEAR(r.r, std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.r, 0.8660, 1e-4);
  // df = 1: t = sqrt(3), P(|T| > sqrt(3)) = 1 - (2/pi) atan(sqrt(3)) = 1/3.
  EXPECT_NEAR(r.p, 1.0 / 3.0, 1e-10);
}

TEST(Pearson, PValueMatchesNumericIntegration) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(10 + t), y(10 + t);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = uniform01(rng);
      y[i] = x[i] * 0.3 + uniform01(rng);
    }
    const auto r = pearson(x, y);
    const double df = static_cast<double>(x.size()) - 2;
    const double tstat = r.r * std::sqrt(df / (1 - r.r * r.r));
    EXPECT_NEAR(r.p, t_two_sided_numeric(tstat, df), 1e-6);
  }
}

TEST(Pearson, AffineInvariance) {
  Rng rng(6);
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = uniform01(rng);
    y[i] = x[i] + uniform01(rng);
  }
  const double r = pearson(x, y).r;
  auto x2 = x;
  for (auto& v : x2) v = 3.5 * v - 7.0;
  EXPECT_NEAR(pearson(x2, y).r, r, 1e-12);
  for (auto& v : x2) v = -v;
  EXPECT_NEAR(pearson(x2, y).r, -r, 1e-12);
}

TEST(Pearson, Preconditions) {
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               ValidationError);
}

TEST(Welch, HandComputed) {
  const auto w = welch_t(std::vector<double>{0, 0, 1, 1}, std::vector<double>{1, 1, 2, 2});
  // Both variances are 1/3, so se = sqrt(1/12 + 1/12) and t = -1 / se.
  EXPECT_NEAR(w.t, -std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(w.df, 6.0, 1e-12);
  EXPECT_NEAR(w.p, t_two_sided_numeric(w.t, 6.0), 1e-7);
}

TEST(Welch, SymmetryAndUnequalVariances) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10, 12};
  const auto ab = welch_t(a, b), ba = welch_t(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.df, ba.df);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
  // var(a) = 2.5, var(b) = 14; se^2 = 0.5 + 14/6.
  const double va = 2.5 / 5, vb = 14.0 / 6;
  EXPECT_NEAR(ab.t, (3.0 - 7.0) / std::sqrt(va + vb), 1e-12);
  EXPECT_NEAR(ab.df, (va + vb) * (va + vb) / (va * va / 4 + vb * vb / 5), 1e-12);
  EXPECT_NEAR(welch_t(a, a).t, 0.0, 1e-15);
  EXPECT_NEAR(welch_t(a, a).p, 1.0, 1e-12);
}

TEST(Welch, Preconditions) {
  EXPECT_THROW(welch_t(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(welch_t(std::vector<double>{1, 1}, std::vector<double>{1, 2}), ValidationError);
}

TEST(Bootstrap, ConstantSample) {
  const auto ci = bootstrap_mean_ci(std::vector<double>{5, 5, 5, 5}, 1, 500);
  EXPECT_EQ(ci.low, 5.0);
  EXPECT_EQ(ci.high, 5.0);
}

TEST(Bootstrap, DeterministicAndNested) {
  Rng rng(3);
  std::vector<double> xs(40);
  for (auto& x : xs) x = uniform01(rng);
  const auto a = bootstrap_mean_ci(xs, 9, 2000, 0.95);
  const auto b = bootstrap_mean_ci(xs, 9, 2000, 0.95);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  const auto means = bootstrap_means(xs, 9, 2000);
  ASSERT_TRUE(std::is_sorted(means.begin(), means.end()));
  const auto ci90 = percentile_interval(means, 0.90);
  const auto ci95 = percentile_interval(means, 0.95);
  EXPECT_EQ(ci95.low, a.low);
  EXPECT_LE(ci95.low, ci90.low);
  EXPECT_GE(ci95.high, ci90.high);
  EXPECT_TRUE(a.contains(mean(xs)));
}

TEST(Bootstrap, CoverageRoughlyNominal) {
  // Smaller cousin of the acceptance run: 200 trials.
  int covered = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(derive_seed(77, std::uint64_t(trial)));
    std::vector<double> xs(100);
    for (auto& x : xs) {
      // Box-Muller.
      const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
      x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    }
    if (bootstrap_mean_ci(xs, static_cast<std::uint64_t>(trial), 1000).contains(0.0)) ++covered;
  }
  EXPECT_NEAR(covered / 200.0, 0.95, 0.05);
}

TEST(Interval, Overlaps) {
  EXPECT_TRUE((Interval{0, 1}.overlaps({1, 2})));
  EXPECT_FALSE((Interval{0, 1}.overlaps({1.5, 2})));
}

}  // namespace
}  // namespace descbench
