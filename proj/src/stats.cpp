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

#include "descbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "descbench/error.hpp"
#include "descbench/rng.hpp"

namespace descbench {

namespace {

double two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("pearson: samples differ in length (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) throw ValidationError("pearson needs at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ValidationError("pearson: zero variance");
  CorrelationResult out;
  out.n = x.size();
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(out.n - 2);
  const double denom = 1.0 - out.r * out.r;
  const double t = denom > 0.0 ? out.r * std::sqrt(df / denom)
                               : std::copysign(INFINITY, out.r);
  out.p = two_sided_p(t, df);
  return out;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw ValidationError("welch_t needs at least two values per sample");
  }
  const double va = variance(a);
  const double vb = variance(b);
  if (!(va > 0.0) || !(vb > 0.0)) throw ValidationError("welch_t: zero variance");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  WelchResult out;
  out.t = (mean(a) - mean(b)) / std::sqrt(sa + sb);
  out.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  out.p = two_sided_p(out.t, out.df);
  return out;
}

std::vector<double> bootstrap_means(std::span<const double> values, std::uint64_t seed,
                                    std::size_t n_resamples) {
  if (values.size() < 2) throw ValidationError("bootstrap needs at least two values");
  if (n_resamples == 0) throw ValidationError("bootstrap needs at least one resample");
  Rng rng(derive_seed(seed, "bootstrap"));
  const std::size_t n = values.size();
  std::vector<double> means(n_resamples);
  for (double& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[uniform_index(rng, n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  return means;
}

Interval percentile_interval(std::span<const double> sorted_means, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must be in (0, 1)");
  const double alpha = 1.0 - level;
  return {quantile(sorted_means, alpha / 2.0), quantile(sorted_means, 1.0 - alpha / 2.0)};
}

Interval bootstrap_mean_ci(std::span<const double> values, std::uint64_t seed,
                           std::size_t n_resamples, double level) {
  const auto means = bootstrap_means(values, seed, n_resamples);
  return percentile_interval(means, level);
}

}  // namespace descbench
