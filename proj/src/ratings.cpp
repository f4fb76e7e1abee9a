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

#include "descbench/ratings.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "descbench/error.hpp"
#include "descbench/text.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kQuestionNames[] = {"overall",     "imaginability", "relevance",
                                               "irrelevance", "added_info",    "fit"};
constexpr std::string_view kPhaseNames[] = {"pre", "post"};

}  // namespace

std::string_view to_string(Question q) { return kQuestionNames[static_cast<int>(q)]; }
std::string_view to_string(Phase p) { return kPhaseNames[static_cast<int>(p)]; }

Question question_from_string(std::string_view name) {
  for (Question q : kAllQuestions) {
    if (to_string(q) == name) return q;
  }
  throw ValidationError("unknown question '" + std::string(name) + "'");
}

Phase phase_from_string(std::string_view name) {
  if (name == "pre") return Phase::kPre;
  if (name == "post") return Phase::kPost;
  throw ValidationError("unknown phase '" + std::string(name) + "'");
}

ordered_json to_json(const RatingRecord& r) {
  ordered_json j;
  j["participant_id"] = r.participant_id;
  j["description_id"] = r.description_id;
  j["question"] = to_string(r.question);
  j["phase"] = to_string(r.phase);
  j["value"] = r.value;
  j["wrong_info_flag"] = r.wrong_info_flag;
  j["comment"] = r.comment;
  j["timestamp"] = r.timestamp;
  return j;
}

RatingRecord rating_from_json(const json& j) {
  RatingRecord r;
  try {
    r.participant_id = j.at("participant_id").get<std::string>();
    r.description_id = j.at("description_id").get<std::string>();
    r.question = question_from_string(j.at("question").get<std::string>());
    r.phase = phase_from_string(j.at("phase").get<std::string>());
    r.value = j.at("value").get<int>();
    r.wrong_info_flag = j.value("wrong_info_flag", false);
    r.comment = j.value("comment", std::string());
    r.timestamp = j.value("timestamp", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed rating record: ") + e.what());
  }
  if (r.participant_id.empty() || r.description_id.empty()) {
    throw ValidationError("rating record lacks participant or description id");
  }
  if (r.value < kMinRating || r.value > kMaxRating) {
    throw ValidationError("rating value " + std::to_string(r.value) + " outside 1-5");
  }
  if (!asked_in(r.question, r.phase)) {
    throw ValidationError("imaginability has no post-image rating");
  }
  if (r.phase == Phase::kPre && (r.wrong_info_flag || !r.comment.empty())) {
    throw ValidationError("wrong-information reports belong to the post phase");
  }
  return r;
}

void validate_ratings(std::span<const RatingRecord> records) {
  using Key = std::tuple<std::string_view, std::string_view, Question, Phase>;
  std::set<Key> keys;
  for (const auto& r : records) {
    if (!keys.emplace(r.participant_id, r.description_id, r.question, r.phase).second) {
      throw ValidationError("duplicate rating for participant '" + r.participant_id +
                            "', description '" + r.description_id + "', " +
                            std::string(to_string(r.question)) + "/" +
                            std::string(to_string(r.phase)));
    }
  }
  for (const auto& r : records) {
    if (r.phase != Phase::kPost) continue;
    if (!keys.count({r.participant_id, r.description_id, r.question, Phase::kPre})) {
      throw ValidationError("post rating without its pre rating for participant '" +
                            r.participant_id + "', description '" + r.description_id +
                            "', " + std::string(to_string(r.question)));
    }
  }
}

void write_ratings(std::span<const RatingRecord> records, std::ostream& out) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<RatingRecord> read_ratings(std::istream& in) {
  std::vector<RatingRecord> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(rating_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ValidationError("ratings parse error at line " + std::to_string(line_no) + ": " +
                            e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("ratings line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_ratings(rows);
  return rows;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ratings file " + path.string());
  return read_ratings(in);
}

ordered_json to_json(const ExclusionVerdict& v) {
  ordered_json j;
  j["participant_id"] = v.participant_id;
  j["excluded"] = v.excluded;
  j["passed"] = v.passed;
  j["reason"] = v.reason;
  return j;
}

std::vector<ExclusionVerdict> compute_exclusions(std::span<const RatingRecord> records,
                                                 const std::set<std::string>& identical_ids) {
  struct Check {
    bool pre = false;
    bool post = false;
    int worst = 0;
    std::string worst_item;
    Phase worst_phase = Phase::kPre;
  };
  // participant -> identical description -> attention answers
  std::map<std::string, std::map<std::string, Check>> checks;
  for (const auto& r : records) {
    auto& per_item = checks[r.participant_id];
    if (r.question != Question::kAddedInfo || !identical_ids.count(r.description_id)) {
      continue;
    }
    Check& c = per_item[r.description_id];
    (r.phase == Phase::kPre ? c.pre : c.post) = true;
    if (r.value > c.worst) {
      c.worst = r.value;
      c.worst_item = r.description_id;
      c.worst_phase = r.phase;
    }
  }

  std::vector<ExclusionVerdict> verdicts;
  verdicts.reserve(checks.size());
  for (const auto& [participant, items] : checks) {
    ExclusionVerdict v;
    v.participant_id = participant;
    bool complete = false;
    for (const auto& [item, c] : items) {
      if (c.worst >= kAttentionThreshold && !v.excluded) {
        v.excluded = true;
        v.reason = "added_info " + std::to_string(c.worst) + " (" +
                   std::string(to_string(c.worst_phase)) + ") on caption-identical '" +
                   item + "'";
      }
      complete = complete || (c.pre && c.post);
    }
    if (!v.excluded) {
      v.passed = complete;
      v.reason = complete ? "passed attention check" : "attention check incomplete";
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

std::set<std::string> passed_participants(std::span<const ExclusionVerdict> verdicts) {
  std::set<std::string> out;
  for (const auto& v : verdicts) {
    if (v.passed) out.insert(v.participant_id);
  }
  return out;
}

std::vector<RatingRecord> valid_records(std::span<const RatingRecord> records,
                                        std::span<const ExclusionVerdict> verdicts) {
  const auto passed = passed_participants(verdicts);
  std::vector<RatingRecord> out;
  for (const auto& r : records) {
    if (passed.count(r.participant_id)) out.push_back(r);
  }
  return out;
}

std::size_t CoverageStatus::satisfied() const {
  return static_cast<std::size_t>(std::count_if(
      valid_counts.begin(), valid_counts.end(),
      [this](const auto& kv) { return kv.second >= threshold; }));
}

ordered_json CoverageStatus::to_json() const {
  ordered_json j;
  j["threshold"] = threshold;
  j["complete"] = complete;
  j["satisfied"] = satisfied();
  j["descriptions"] = valid_counts.size();
  ordered_json counts = ordered_json::object();
  for (const auto& [id, n] : valid_counts) counts[id] = n;
  j["valid_counts"] = std::move(counts);
  return j;
}

CoverageStatus coverage_status(std::span<const RatingRecord> records,
                               std::span<const std::string> description_ids,
                               const std::set<std::string>& identical_ids,
                               std::size_t threshold) {
  CoverageStatus status;
  status.threshold = threshold;
  for (const auto& id : description_ids) status.valid_counts[id] = 0;

  const auto verdicts = compute_exclusions(records, identical_ids);
  const auto passed = passed_participants(verdicts);
  std::set<std::pair<std::string_view, std::string_view>> finished;
  for (const auto& r : records) {
    if (r.phase == Phase::kPost && r.question == Question::kOverall &&
        passed.count(r.participant_id)) {
      finished.emplace(r.description_id, r.participant_id);
    }
  }
  for (const auto& [description, participant] : finished) {
    auto it = status.valid_counts.find(std::string(description));
    if (it != status.valid_counts.end()) ++it->second;
  }
  status.complete = !status.valid_counts.empty() && status.satisfied() == status.valid_counts.size();
  return status;
}

std::optional<double> AggregatedRatings::mean(std::string_view id, Question q,
                                              Phase p) const {
  auto it = means.find(std::string(id));
  if (it == means.end()) return std::nullopt;
  auto jt = it->second.find({q, p});
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::size_t AggregatedRatings::annotator_count(std::string_view id) const {
  auto it = annotators.find(std::string(id));
  return it == annotators.end() ? 0 : it->second;
}

AggregatedRatings aggregate_ratings(std::span<const RatingRecord> records) {
  std::map<std::string, std::map<AggregatedRatings::Key, std::pair<double, std::size_t>>> sums;
  std::map<std::string, std::set<std::string_view>> raters;
  AggregatedRatings out;
  for (const auto& r : records) {
    auto& [sum, n] = sums[r.description_id][{r.question, r.phase}];
    sum += r.value;
    ++n;
    raters[r.description_id].insert(r.participant_id);
    if (r.wrong_info_flag) out.flagged.insert(r.description_id);
  }
  for (const auto& [id, cells] : sums) {
    for (const auto& [key, acc] : cells) {
      out.means[id][key] = acc.first / static_cast<double>(acc.second);
    }
    out.annotators[id] = raters[id].size();
  }
  return out;
}

}  // namespace descbench
