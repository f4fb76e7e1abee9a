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

#ifndef DESCBENCH_RATINGS_HPP_
#define DESCBENCH_RATINGS_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace descbench {

enum class Question { kOverall, kImaginability, kRelevance, kIrrelevance, kAddedInfo, kFit };
enum class Phase { kPre, kPost };

inline constexpr std::array<Question, 6> kAllQuestions = {
    Question::kOverall,     Question::kImaginability, Question::kRelevance,
    Question::kIrrelevance, Question::kAddedInfo,     Question::kFit,
};
inline constexpr std::array<Phase, 2> kAllPhases = {Phase::kPre, Phase::kPost};

std::string_view to_string(Question q);
std::string_view to_string(Phase p);
Question question_from_string(std::string_view name);
Phase phase_from_string(std::string_view name);

/// Imaginability is asked before the image is shown only.
constexpr bool asked_in(Question q, Phase p) {
  return !(q == Question::kImaginability && p == Phase::kPost);
}

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;
inline constexpr int kAttentionThreshold = 3;
inline constexpr std::size_t kRequiredAnnotators = 3;

struct RatingRecord {
  std::string participant_id;
  std::string description_id;
  Question question = Question::kOverall;
  Phase phase = Phase::kPre;
  int value = kMinRating;
  bool wrong_info_flag = false;  // post phase only
  std::string comment;           // post phase only
  std::string timestamp;

  bool operator==(const RatingRecord&) const = default;
};

nlohmann::ordered_json to_json(const RatingRecord& r);
/// Validates range and phase rules.
RatingRecord rating_from_json(const nlohmann::json& j);

/// Rejects duplicate (participant, description, question, phase) keys and
/// post answers without the matching pre answers.
void validate_ratings(std::span<const RatingRecord> records);

void write_ratings(std::span<const RatingRecord> records, std::ostream& out);
std::vector<RatingRecord> read_ratings(std::istream& in);
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);

struct ExclusionVerdict {
  std::string participant_id;
  bool excluded = false;
  bool passed = false;  // attention item answered pre and post below threshold
  std::string reason;

  bool operator==(const ExclusionVerdict&) const = default;
};

nlohmann::ordered_json to_json(const ExclusionVerdict& v);

/// One verdict per participant, sorted by participant id. A participant is
/// excluded when any added_info answer on a caption-identical description is
/// at or above the attention threshold.
std::vector<ExclusionVerdict> compute_exclusions(std::span<const RatingRecord> records,
                                                 const std::set<std::string>& identical_ids);

/// Participants whose answers count.
std::set<std::string> passed_participants(std::span<const ExclusionVerdict> verdicts);

/// Records of passed participants only.
std::vector<RatingRecord> valid_records(std::span<const RatingRecord> records,
                                        std::span<const ExclusionVerdict> verdicts);

struct CoverageStatus {
  std::map<std::string, std::size_t> valid_counts;  // every description id
  std::size_t threshold = kRequiredAnnotators;
  bool complete = false;

  std::size_t satisfied() const;
  nlohmann::ordered_json to_json() const;
};

/// Counts, per description, distinct passed participants who finished the
/// post phase.
CoverageStatus coverage_status(std::span<const RatingRecord> records,
                               std::span<const std::string> description_ids,
                               const std::set<std::string>& identical_ids,
                               std::size_t threshold = kRequiredAnnotators);

struct AggregatedRatings {
  using Key = std::pair<Question, Phase>;

  std::map<std::string, std::map<Key, double>> means;
  std::map<std::string, std::size_t> annotators;  // distinct valid raters
  std::set<std::string> flagged;  // any valid rater reported wrong information

  std::optional<double> mean(std::string_view id, Question q, Phase p) const;
  std::size_t annotator_count(std::string_view id) const;
};

/// Arithmetic mean per (description, question, phase) over `records`, which
/// the caller has already restricted to valid participants.
AggregatedRatings aggregate_ratings(std::span<const RatingRecord> records);

}  // namespace descbench

#endif  // DESCBENCH_RATINGS_HPP_
