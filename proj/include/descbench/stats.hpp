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

#ifndef DESCBENCH_STATS_HPP_
#define DESCBENCH_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace descbench {

double mean(std::span<const double> xs);
/// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> xs);
/// Linear-interpolation quantile of sorted data (R type 7).
double quantile(std::span<const double> sorted, double q);

struct CorrelationResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, Student t with n - 2 df
  std::size_t n = 0;
};

/// Throws ValidationError on length mismatch, n < 3 or zero variance.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;  // Welch-Satterthwaite
  double p = 1.0;   // two-sided
};

/// Throws ValidationError unless both samples have n >= 2 and a positive
/// variance.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return low <= v && v <= high; }
  bool overlaps(const Interval& o) const { return low <= o.high && o.low <= high; }
};

inline constexpr std::size_t kDefaultResamples = 10000;
inline constexpr double kDefaultLevel = 0.95;

/// Percentile bootstrap interval of the mean.
Interval bootstrap_mean_ci(std::span<const double> values, std::uint64_t seed,
                           std::size_t n_resamples = kDefaultResamples,
                           double level = kDefaultLevel);

/// Sorted bootstrap means; exposed so several levels can share one stream.
std::vector<double> bootstrap_means(std::span<const double> values, std::uint64_t seed,
                                    std::size_t n_resamples);
Interval percentile_interval(std::span<const double> sorted_means, double level);

}  // namespace descbench

#endif  // DESCBENCH_STATS_HPP_
