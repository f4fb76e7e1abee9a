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

#include "descbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "descbench/csv.hpp"
#include "descbench/error.hpp"
#include "descbench/parallel.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"

namespace descbench {

using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string kind_label(const std::optional<AugmentationKind>& kind) {
  return kind ? std::string(to_string(*kind)) : std::string("original");
}

// Pearson with the failing cell named in the message.
CorrelationResult named_pearson(std::span<const double> x, std::span<const double> y,
                                const std::string& what) {
  try {
    return pearson(x, y);
  } catch (const ValidationError& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

struct Paired {
  std::vector<double> metric;
  std::vector<double> rating;
};

Paired pair_with_ratings(const std::map<std::string, double>& metric_scores,
                         const Corpus& corpus, const AggregatedRatings& ratings,
                         Question q, Phase p, std::size_t min_annotators,
                         const std::set<std::string>* skip) {
  Paired out;
  for (const auto& rec : corpus) {
    if (skip != nullptr && skip->count(rec.record_id)) continue;
    if (ratings.annotator_count(rec.record_id) < min_annotators) continue;
    const auto rating = ratings.mean(rec.record_id, q, p);
    auto it = metric_scores.find(rec.record_id);
    if (!rating || it == metric_scores.end()) continue;
    out.metric.push_back(it->second);
    out.rating.push_back(*rating);
  }
  return out;
}

double r_or_nan(const Paired& p) {
  try {
    return pearson(p.metric, p.rating).r;
  } catch (const ValidationError&) {
    return kNaN;
  }
}

}  // namespace

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kLower:
      return "lower";
    case Outcome::kSame:
      return "same";
    case Outcome::kHigher:
      return "higher";
  }
  return "?";
}

Outcome compare_scores(double original, double augmented, double tolerance) {
  if (std::fabs(augmented - original) <= tolerance) return Outcome::kSame;
  return augmented < original - tolerance ? Outcome::kLower : Outcome::kHigher;
}

// --- ScoreTable ----------------------------------------------------------------

ScoreTable::ScoreTable(std::span<const ScoreRecord> rows) {
  for (const auto& r : rows) add(r);
}

void ScoreTable::add(const ScoreRecord& row) {
  if (!table_[row.metric_id].emplace(row.ref(), row.score).second) {
    throw ValidationError("duplicate score for metric '" + row.metric_id + "', record '" +
                          row.ref() + "'");
  }
}

std::vector<std::string> ScoreTable::metrics() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : table_) out.push_back(id);
  return out;
}

std::optional<double> ScoreTable::find(std::string_view metric_id,
                                       std::string_view ref) const {
  auto it = table_.find(metric_id);
  if (it == table_.end()) return std::nullopt;
  auto jt = it->second.find(std::string(ref));
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

const std::map<std::string, double>& ScoreTable::scores(std::string_view metric_id) const {
  auto it = table_.find(metric_id);
  if (it == table_.end()) {
    throw ValidationError("no scores for metric '" + std::string(metric_id) + "'");
  }
  return it->second;
}

bool ScoreTable::has_kind(std::string_view metric_id, AugmentationKind kind) const {
  auto it = table_.find(metric_id);
  if (it == table_.end()) return false;
  const std::string suffix = "#" + std::string(to_string(kind));
  return std::any_of(it->second.begin(), it->second.end(), [&](const auto& kv) {
    return kv.first.size() > suffix.size() &&
           kv.first.compare(kv.first.size() - suffix.size(), suffix.size(), suffix) == 0;
  });
}

// --- pass rates ----------------------------------------------------------------

PassRateRow pass_rate_row(std::string metric_id, AugmentationKind kind,
                          std::span<const double> original,
                          std::span<const double> augmented, double tolerance) {
  if (original.size() != augmented.size()) {
    throw ValidationError("pass rates need paired score lists");
  }
  PassRateRow row;
  row.metric_id = std::move(metric_id);
  row.kind = kind;
  row.n_applicable = original.size();
  if (original.empty()) return row;
  std::size_t lower = 0, same = 0, higher = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    switch (compare_scores(original[i], augmented[i], tolerance)) {
      case Outcome::kLower:
        ++lower;
        break;
      case Outcome::kSame:
        ++same;
        break;
      case Outcome::kHigher:
        ++higher;
        break;
    }
  }
  const double n = static_cast<double>(row.n_applicable);
  row.proportion_lower = static_cast<double>(lower) / n;
  row.proportion_same = static_cast<double>(same) / n;
  row.proportion_higher = static_cast<double>(higher) / n;
  return row;
}

std::vector<PassRateRow> pass_rates(const ScoreTable& scores,
                                    std::span<const AugmentedRecord> augmented,
                                    double tolerance, std::optional<Split> split) {
  std::vector<PassRateRow> rows;
  for (const std::string& metric : scores.metrics()) {
    for (AugmentationKind kind : kAllAugmentationKinds) {
      if (!scores.has_kind(metric, kind)) continue;
      std::vector<double> orig, aug;
      for (const AugmentedRecord& a : augmented) {
        if (a.kind != kind || !a.applicable) continue;
        if (split && a.record.split != *split) continue;
        const auto o = scores.find(metric, a.base_id);
        const auto s = scores.find(metric, score_ref(a.base_id, kind));
        if (!o || !s) {
          throw ValidationError("metric '" + metric + "': unpaired scores for '" +
                                score_ref(a.base_id, kind) + "'");
        }
        orig.push_back(*o);
        aug.push_back(*s);
      }
      PassRateRow row = pass_rate_row(metric, kind, orig, aug, tolerance);
      if (split) row.subset = std::string(to_string(*split));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// --- correlations --------------------------------------------------------------

std::vector<CorrelationCell> correlation_table(const ScoreTable& scores,
                                               const Corpus& corpus,
                                               const AggregatedRatings& ratings,
                                               std::size_t min_annotators) {
  std::vector<CorrelationCell> cells;
  for (const std::string& metric : scores.metrics()) {
    const auto& metric_scores = scores.scores(metric);
    for (Question q : kAllQuestions) {
      for (Phase p : kAllPhases) {
        if (!asked_in(q, p)) continue;
        const Paired paired =
            pair_with_ratings(metric_scores, corpus, ratings, q, p, min_annotators, nullptr);
        const auto res =
            named_pearson(paired.metric, paired.rating,
                          "correlation " + metric + " x " + std::string(to_string(q)) + "/" +
                              std::string(to_string(p)));
        cells.push_back({metric, q, p, res.r, res.p, res.n});
      }
    }
  }
  return cells;
}

CrossMetricMatrix cross_metric_matrix(const ScoreTable& scores) {
  const auto ids = scores.metrics();
  if (ids.size() < 2) throw ValidationError("cross-metric matrix needs at least 2 metrics");

  std::vector<std::string> common;
  for (const auto& [ref, _] : scores.scores(ids.front())) {
    if (ref.find('#') != std::string::npos) continue;
    const bool everywhere = std::all_of(ids.begin() + 1, ids.end(), [&](const auto& m) {
      return scores.find(m, ref).has_value();
    });
    if (everywhere) common.push_back(ref);
  }

  const std::size_t k = ids.size();
  std::vector<std::vector<double>> columns(k);
  for (std::size_t m = 0; m < k; ++m) {
    for (const auto& ref : common) columns[m].push_back(*scores.find(ids[m], ref));
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double v = named_pearson(columns[a], columns[b],
                                     "cross-metric " + ids[a] + " x " + ids[b])
                           .r;
      r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      r(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(r);
  Eigen::VectorXd principal = solver.eigenvectors().col(static_cast<Eigen::Index>(k) - 1);
  if (principal.sum() < 0.0) principal = -principal;

  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double la = principal(static_cast<Eigen::Index>(a));
    const double lb = principal(static_cast<Eigen::Index>(b));
    if (std::fabs(la - lb) > 1e-12) return la > lb;
    return ids[a] < ids[b];
  });

  CrossMetricMatrix out;
  out.n = common.size();
  for (std::size_t a : idx) {
    out.order.push_back(ids[a]);
    std::vector<double> row;
    for (std::size_t b : idx) {
      row.push_back(r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
    out.r.push_back(std::move(row));
  }
  return out;
}

std::vector<GapRow> prepost_gap_analysis(const ScoreTable& scores, const Corpus& corpus,
                                         const AggregatedRatings& ratings,
                                         std::size_t min_annotators) {
  std::vector<GapRow> rows;
  for (const std::string& metric : scores.metrics()) {
    const auto& metric_scores = scores.scores(metric);
    for (Question q : kAllQuestions) {
      if (!asked_in(q, Phase::kPost)) continue;
      GapRow row;
      row.metric_id = metric;
      row.question = q;
      const std::string what = "pre/post gap " + metric + " x " + std::string(to_string(q));
      const Paired pre_all =
          pair_with_ratings(metric_scores, corpus, ratings, q, Phase::kPre, min_annotators, nullptr);
      const Paired post_all = pair_with_ratings(metric_scores, corpus, ratings, q, Phase::kPost,
                                                min_annotators, nullptr);
      row.r_pre_all = named_pearson(pre_all.metric, pre_all.rating, what).r;
      row.r_post_all = named_pearson(post_all.metric, post_all.rating, what).r;
      row.n_all = post_all.metric.size();
      const Paired pre_clean = pair_with_ratings(metric_scores, corpus, ratings, q, Phase::kPre,
                                                 min_annotators, &ratings.flagged);
      const Paired post_clean = pair_with_ratings(metric_scores, corpus, ratings, q,
                                                  Phase::kPost, min_annotators, &ratings.flagged);
      // Too few unflagged descriptions leaves the cell undefined rather than
      // failing the whole report.
      row.r_pre_unflagged = r_or_nan(pre_clean);
      row.r_post_unflagged = r_or_nan(post_clean);
      row.n_unflagged = post_clean.metric.size();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// --- dataset properties ------------------------------------------------------------

double DatasetPropertyReport::flagged_fraction() const {
  return descriptions == 0 ? 0.0
                           : static_cast<double>(flagged_descriptions) /
                                 static_cast<double>(descriptions);
}

double DatasetPropertyReport::annotations_per_description() const {
  return descriptions == 0 ? 0.0
                           : static_cast<double>(annotations) /
                                 static_cast<double>(descriptions);
}

DatasetPropertyReport dataset_property_report(const Corpus& corpus,
                                              std::span<const RatingRecord> valid,
                                              std::size_t min_annotators) {
  DatasetPropertyReport report;
  const AggregatedRatings agg = aggregate_ratings(valid);

  std::set<std::pair<std::string_view, std::string_view>> annotations;
  std::map<std::string_view, std::set<std::string_view>> flaggers;
  for (const auto& r : valid) {
    if (!corpus.find(r.description_id)) continue;
    annotations.emplace(r.participant_id, r.description_id);
    if (r.wrong_info_flag) flaggers[r.description_id].insert(r.participant_id);
  }
  report.annotations = annotations.size();
  for (const auto& [_, who] : flaggers) report.flag_reports += who.size();

  std::vector<double> lengths, overall;
  for (const auto& rec : corpus) {
    const std::size_t n = agg.annotator_count(rec.record_id);
    if (n == 0) continue;
    ++report.descriptions;
    if (agg.flagged.count(rec.record_id)) ++report.flagged_descriptions;
    const auto m = agg.mean(rec.record_id, Question::kOverall, Phase::kPost);
    if (n >= min_annotators && m) {
      lengths.push_back(static_cast<double>(token_count(rec.description)));
      overall.push_back(*m);
    }
  }
  try {
    report.length_vs_overall = pearson(lengths, overall);
  } catch (const ValidationError& e) {
    report.notes.push_back(std::string("length vs overall: ") + e.what());
  }

  std::vector<double> identical, distinct, flagged, unflagged;
  for (const auto& r : valid) {
    if (r.question != Question::kOverall || r.phase != Phase::kPost) continue;
    const ContextedRecord* rec = corpus.find(r.description_id);
    if (rec == nullptr) continue;
    const double v = r.value;
    (rec->identical_to_caption ? identical : distinct).push_back(v);
    (agg.flagged.count(rec->record_id) ? flagged : unflagged).push_back(v);
  }
  try {
    report.identical_vs_distinct = welch_t(identical, distinct);
  } catch (const ValidationError& e) {
    report.notes.push_back(std::string("identical vs distinct: ") + e.what());
  }
  try {
    report.flagged_vs_unflagged = welch_t(flagged, unflagged);
  } catch (const ValidationError& e) {
    report.notes.push_back(std::string("flagged vs unflagged: ") + e.what());
  }
  return report;
}

// --- average scores ------------------------------------------------------------------

std::vector<AvgScoreRow> average_scores(const ScoreTable& scores, const Corpus& corpus,
                                        std::span<const AugmentedRecord> augmented,
                                        std::uint64_t seed, std::size_t n_resamples,
                                        double level, std::size_t jobs) {
  struct Cell {
    std::string metric;
    std::optional<AugmentationKind> kind;
    std::vector<double> values;
  };
  std::vector<Cell> cells;
  for (const std::string& metric : scores.metrics()) {
    Cell orig{metric, std::nullopt, {}};
    for (const auto& rec : corpus) {
      if (auto s = scores.find(metric, rec.record_id)) orig.values.push_back(*s);
    }
    cells.push_back(std::move(orig));
    for (AugmentationKind kind : kAllAugmentationKinds) {
      Cell c{metric, kind, {}};
      for (const auto& a : augmented) {
        if (a.kind != kind || !a.applicable) continue;
        if (auto s = scores.find(metric, score_ref(a.base_id, kind))) c.values.push_back(*s);
      }
      if (!c.values.empty()) cells.push_back(std::move(c));
    }
  }

  std::vector<AvgScoreRow> rows(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    AvgScoreRow& row = rows[i];
    row.metric_id = c.metric;
    row.kind = c.kind;
    row.n = c.values.size();
    if (c.values.empty()) {
      row.mean = kNaN;
      row.ci = {kNaN, kNaN};
      return;
    }
    row.mean = mean(c.values);
    if (c.values.size() < 2) {
      row.ci = {row.mean, row.mean};
      return;
    }
    row.ci = bootstrap_mean_ci(c.values, derive_seed(seed, c.metric, kind_label(c.kind)),
                               n_resamples, level);
  });

  const AvgScoreRow* original = nullptr;
  for (AvgScoreRow& row : rows) {
    if (!row.kind) {
      original = &row;
      continue;
    }
    if (original == nullptr || original->n == 0) continue;
    row.vs_original = row.ci.overlaps(original->ci)
                          ? Outcome::kSame
                          : compare_scores(original->mean, row.mean, 0.0);
  }
  return rows;
}

// --- fine-tuning export ----------------------------------------------------------------

FinetuneExport export_finetune_pairs(const Corpus& corpus,
                                     std::span<const AugmentedRecord> augmented,
                                     const AggregatedRatings& ratings,
                                     const SplitAssignment& split,
                                     std::size_t min_annotators) {
  std::map<std::string_view, Split> side;
  for (const auto& id : split.train_ids) side[id] = Split::kTrain;
  for (const auto& id : split.test_ids) {
    if (!side.emplace(id, Split::kTest).second) {
      throw ValidationError("record '" + id + "' is in both splits");
    }
  }
  for (const auto& rec : corpus) {
    if (!side.count(rec.record_id)) {
      throw ValidationError("record '" + rec.record_id + "' has no split assignment");
    }
  }
  auto split_of = [&](std::string_view id) -> Split {
    auto it = side.find(id);
    if (it == side.end()) throw ValidationError("unknown record '" + std::string(id) + "'");
    return it->second;
  };

  FinetuneExport out;
  for (const auto& rec : corpus) {
    const auto target = ratings.mean(rec.record_id, Question::kOverall, Phase::kPost);
    const std::size_t n = ratings.annotator_count(rec.record_id);
    if (!target || n < min_annotators) continue;
    const Split s = split_of(rec.record_id);
    ContextedRecord tagged = rec;
    tagged.split = s;
    ordered_json row;
    row["type"] = "regression";
    row["record_id"] = rec.record_id;
    row["split"] = to_string(s);
    row["record"] = to_json(tagged);
    row["target"] = *target;
    row["n_annotators"] = n;
    if (s == Split::kTrain) {
      out.train.push_back(std::move(row));
      ++out.train_regression;
    } else {
      out.eval.push_back(std::move(row));
      ++out.eval_regression;
    }
  }

  for (const auto& a : augmented) {
    if (!a.applicable) continue;
    const ContextedRecord* base = corpus.find(a.base_id);
    if (base == nullptr) {
      throw ValidationError("augmentation references unknown record '" + a.base_id + "'");
    }
    const Split s = split_of(a.base_id);
    if (a.provenance.donor_id && split_of(*a.provenance.donor_id) != s) {
      throw ValidationError("contrast row " + score_ref(a.base_id, a.kind) +
                            " crosses the split: donor '" + *a.provenance.donor_id +
                            "' is in " + std::string(to_string(split_of(*a.provenance.donor_id))));
    }
    if (a.record.split != Split::kUnassigned && a.record.split != s) {
      throw ValidationError("contrast row " + score_ref(a.base_id, a.kind) +
                            " crosses the split: augmented record tagged " +
                            std::string(to_string(a.record.split)));
    }
    ContextedRecord tagged = *base;
    tagged.split = s;
    AugmentedRecord aug = a;
    aug.record.split = s;
    ordered_json row;
    row["type"] = "contrast";
    row["record_id"] = a.base_id;
    row["kind"] = to_string(a.kind);
    row["split"] = to_string(s);
    row["original"] = to_json(tagged);
    row["augmented"] = to_json(aug);
    row["expected"] = "original>augmented";
    if (s == Split::kTrain) {
      out.train.push_back(std::move(row));
      ++out.train_contrast;
    } else {
      out.eval.push_back(std::move(row));
      ++out.eval_contrast;
    }
  }
  return out;
}

// --- CSV writers -----------------------------------------------------------------------

void write_pass_rates_csv(std::span<const PassRateRow> rows, std::ostream& out) {
  csv::row(out, {"metric_id", "kind", "subset", "n_applicable", "proportion_lower",
                 "proportion_same", "proportion_higher"});
  for (const auto& r : rows) {
    csv::row(out, {r.metric_id, to_string(r.kind), r.subset, std::to_string(r.n_applicable),
                   csv::number(r.proportion_lower), csv::number(r.proportion_same),
                   csv::number(r.proportion_higher)});
  }
}

void write_correlations_csv(std::span<const CorrelationCell> cells, std::ostream& out) {
  csv::row(out, {"metric_id", "question", "phase", "r", "p", "n"});
  for (const auto& c : cells) {
    csv::row(out, {c.metric_id, to_string(c.question), to_string(c.phase), csv::number(c.r),
                   csv::number(c.p), std::to_string(c.n)});
  }
}

void write_cross_metric_csv(const CrossMetricMatrix& m, std::ostream& out) {
  out << "metric_id";
  for (const auto& id : m.order) out << ',' << csv::escape(id);
  out << '\n';
  for (std::size_t a = 0; a < m.order.size(); ++a) {
    out << csv::escape(m.order[a]);
    for (double v : m.r[a]) out << ',' << csv::number(v);
    out << '\n';
  }
}

void write_prepost_csv(std::span<const GapRow> rows, std::ostream& out) {
  csv::row(out, {"metric_id", "question", "n_all", "r_pre_all", "r_post_all", "gap_all",
                 "n_unflagged", "r_pre_unflagged", "r_post_unflagged", "gap_unflagged",
                 "gap_delta"});
  for (const auto& r : rows) {
    csv::row(out, {r.metric_id, to_string(r.question), std::to_string(r.n_all),
                   csv::number(r.r_pre_all), csv::number(r.r_post_all),
                   csv::number(r.gap_all()), std::to_string(r.n_unflagged),
                   csv::number(r.r_pre_unflagged), csv::number(r.r_post_unflagged),
                   csv::number(r.gap_unflagged()),
                   csv::number(r.gap_unflagged() - r.gap_all())});
  }
}

void write_avg_scores_csv(std::span<const AvgScoreRow> rows, std::ostream& out) {
  csv::row(out, {"metric_id", "kind", "n", "mean", "ci_low", "ci_high", "vs_original"});
  for (const auto& r : rows) {
    csv::row(out, {r.metric_id, kind_label(r.kind), std::to_string(r.n), csv::number(r.mean),
                   csv::number(r.ci.low), csv::number(r.ci.high),
                   r.vs_original ? to_string(*r.vs_original) : std::string_view("")});
  }
}

void write_dataset_properties_csv(const DatasetPropertyReport& report, std::ostream& out) {
  csv::row(out, {"property", "statistic", "value"});
  auto put = [&](std::string_view property, std::string_view stat, double v) {
    csv::row(out, {property, stat, csv::number(v)});
  };
  put("descriptions", "count", static_cast<double>(report.descriptions));
  put("annotations", "count", static_cast<double>(report.annotations));
  put("annotations", "per_description", report.annotations_per_description());
  put("wrong_info_flags", "flagged_descriptions",
      static_cast<double>(report.flagged_descriptions));
  put("wrong_info_flags", "flagged_fraction", report.flagged_fraction());
  put("wrong_info_flags", "reports", static_cast<double>(report.flag_reports));
  if (report.length_vs_overall) {
    put("length_vs_overall_post", "r", report.length_vs_overall->r);
    put("length_vs_overall_post", "p", report.length_vs_overall->p);
    put("length_vs_overall_post", "n", static_cast<double>(report.length_vs_overall->n));
  }
  auto welch = [&](std::string_view name, const std::optional<WelchResult>& w) {
    if (!w) return;
    put(name, "t", w->t);
    put(name, "df", w->df);
    put(name, "p", w->p);
  };
  welch("identical_vs_distinct", report.identical_vs_distinct);
  welch("flagged_vs_unflagged", report.flagged_vs_unflagged);
  for (const auto& note : report.notes) csv::row(out, {"note", "text", note});
}

}  // namespace descbench
