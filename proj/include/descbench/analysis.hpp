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

#ifndef DESCBENCH_ANALYSIS_HPP_
#define DESCBENCH_ANALYSIS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descbench/augment.hpp"
#include "descbench/dataset.hpp"
#include "descbench/ratings.hpp"
#include "descbench/scoring.hpp"
#include "descbench/stats.hpp"
#include "json.hpp"

namespace descbench {

inline constexpr double kDefaultSameTolerance = 1e-9;

enum class Outcome { kLower, kSame, kHigher };

std::string_view to_string(Outcome o);

/// Lower iff augmented < original - tol, same iff |augmented - original| <= tol.
Outcome compare_scores(double original, double augmented,
                       double tolerance = kDefaultSameTolerance);

/// Scores keyed by metric id and record ref ("id" or "id#kind").
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(std::span<const ScoreRecord> rows);

  /// Throws ValidationError on a repeated (metric, ref).
  void add(const ScoreRecord& row);
  std::vector<std::string> metrics() const;
  std::optional<double> find(std::string_view metric_id, std::string_view ref) const;
  const std::map<std::string, double>& scores(std::string_view metric_id) const;
  bool has_kind(std::string_view metric_id, AugmentationKind kind) const;

 private:
  std::map<std::string, std::map<std::string, double>, std::less<>> table_;
};

struct PassRateRow {
  std::string metric_id;
  AugmentationKind kind = AugmentationKind::kExactRepetition;
  std::string subset = "all";  // all, train or test
  std::size_t n_applicable = 0;
  double proportion_lower = 0.0;
  double proportion_same = 0.0;
  double proportion_higher = 0.0;
};

/// Outcome proportions for paired score lists.
PassRateRow pass_rate_row(std::string metric_id, AugmentationKind kind,
                          std::span<const double> original,
                          std::span<const double> augmented,
                          double tolerance = kDefaultSameTolerance);

/// One row per (metric, kind) over applicable augmentations, sorted by metric
/// then kind. Kinds a metric never scored are skipped; a partially scored kind
/// is an unpaired-id error. When `split` is set only base records carrying
/// that split tag count.
std::vector<PassRateRow> pass_rates(const ScoreTable& scores,
                                    std::span<const AugmentedRecord> augmented,
                                    double tolerance = kDefaultSameTolerance,
                                    std::optional<Split> split = std::nullopt);

struct CorrelationCell {
  std::string metric_id;
  Question question = Question::kOverall;
  Phase phase = Phase::kPost;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// One cell per metric x question x phase over original records whose
/// aggregated ratings come from at least `min_annotators` valid raters.
std::vector<CorrelationCell> correlation_table(const ScoreTable& scores,
                                               const Corpus& corpus,
                                               const AggregatedRatings& ratings,
                                               std::size_t min_annotators = kRequiredAnnotators);

struct CrossMetricMatrix {
  std::vector<std::string> order;       // descending principal-eigenvector loading
  std::vector<std::vector<double>> r;   // indexed like `order`
  std::size_t n = 0;                    // common original records
};

/// Pairwise Pearson over the original records every metric scored.
CrossMetricMatrix cross_metric_matrix(const ScoreTable& scores);

struct GapRow {
  std::string metric_id;
  Question question = Question::kOverall;
  double r_pre_all = 0.0;
  double r_post_all = 0.0;
  double r_pre_unflagged = 0.0;
  double r_post_unflagged = 0.0;
  std::size_t n_all = 0;
  std::size_t n_unflagged = 0;

  double gap_all() const { return r_post_all - r_pre_all; }
  double gap_unflagged() const { return r_post_unflagged - r_pre_unflagged; }
};

/// Pre/post correlation gaps with and without descriptions a valid rater
/// flagged as containing wrong information.
std::vector<GapRow> prepost_gap_analysis(const ScoreTable& scores, const Corpus& corpus,
                                         const AggregatedRatings& ratings,
                                         std::size_t min_annotators = kRequiredAnnotators);

struct DatasetPropertyReport {
  std::optional<CorrelationResult> length_vs_overall;  // token count vs mean post overall
  std::optional<WelchResult> identical_vs_distinct;     // per-annotation post overall
  std::optional<WelchResult> flagged_vs_unflagged;
  std::size_t descriptions = 0;
  std::size_t flagged_descriptions = 0;
  std::size_t flag_reports = 0;
  std::size_t annotations = 0;  // distinct (participant, description) pairs
  std::vector<std::string> notes;

  double flagged_fraction() const;
  double annotations_per_description() const;
};

DatasetPropertyReport dataset_property_report(const Corpus& corpus,
                                              std::span<const RatingRecord> valid,
                                              std::size_t min_annotators = kRequiredAnnotators);

struct AvgScoreRow {
  std::string metric_id;
  std::optional<AugmentationKind> kind;  // nullopt: originals
  std::size_t n = 0;
  double mean = 0.0;
  Interval ci;
  std::optional<Outcome> vs_original;  // same when the intervals overlap
};

std::vector<AvgScoreRow> average_scores(const ScoreTable& scores, const Corpus& corpus,
                                        std::span<const AugmentedRecord> augmented,
                                        std::uint64_t seed,
                                        std::size_t n_resamples = kDefaultResamples,
                                        double level = kDefaultLevel, std::size_t jobs = 1);

struct FinetuneExport {
  std::vector<nlohmann::ordered_json> train;
  std::vector<nlohmann::ordered_json> eval;
  std::size_t train_regression = 0;
  std::size_t train_contrast = 0;
  std::size_t eval_regression = 0;
  std::size_t eval_contrast = 0;
};

/// Regression rows carry the mean post-image overall rating of records with
/// enough valid raters; contrast rows pair a record with each applicable
/// augmentation (expected order original > augmented). Any contrast row whose
/// donor or augmented record sits in the other split throws ValidationError.
FinetuneExport export_finetune_pairs(const Corpus& corpus,
                                     std::span<const AugmentedRecord> augmented,
                                     const AggregatedRatings& ratings,
                                     const SplitAssignment& split,
                                     std::size_t min_annotators = kRequiredAnnotators);

void write_pass_rates_csv(std::span<const PassRateRow> rows, std::ostream& out);
void write_correlations_csv(std::span<const CorrelationCell> cells, std::ostream& out);
void write_cross_metric_csv(const CrossMetricMatrix& m, std::ostream& out);
void write_prepost_csv(std::span<const GapRow> rows, std::ostream& out);
void write_avg_scores_csv(std::span<const AvgScoreRow> rows, std::ostream& out);
void write_dataset_properties_csv(const DatasetPropertyReport& report, std::ostream& out);

}  // namespace descbench

#endif  // DESCBENCH_ANALYSIS_HPP_
