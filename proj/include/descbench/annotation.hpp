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

#ifndef DESCBENCH_ANNOTATION_HPP_
#define DESCBENCH_ANNOTATION_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descbench/dataset.hpp"
#include "descbench/error.hpp"
#include "descbench/ratings.hpp"
#include "json.hpp"

namespace descbench {

inline constexpr std::size_t kSessionItems = 5;
inline constexpr std::size_t kSessionIdenticalItems = 1;

struct QuestionSpec {
  Question id = Question::kOverall;
  std::string text;

  bool operator==(const QuestionSpec&) const = default;
};

std::vector<QuestionSpec> default_questions();
/// Parses `[{"id": "overall", "text": "..."}, ...]`. The set must be unique
/// and include overall and added_info.
std::vector<QuestionSpec> questions_from_json(const nlohmann::json& j);
std::vector<QuestionSpec> load_questions(const std::filesystem::path& path);

enum class ItemState { kPendingPre, kRevealEligible, kRevealed, kDone };

std::string_view to_string(ItemState s);

struct Session {
  std::string session_id;
  std::string participant_id;
  std::vector<std::string> items;        // description ids, identical item included
  std::vector<Question> question_order;  // overall last
  std::vector<ItemState> states;

  bool operator==(const Session&) const = default;
};

nlohmann::ordered_json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);

class ServiceError : public Error {
 public:
  enum class Status { kBadRequest, kNotFound, kConflict, kClosed };

  ServiceError(Status status, const std::string& what)
      : Error(ErrorCode::kValidation, what), status_(status) {}
  Status status() const noexcept { return status_; }

 private:
  Status status_;
};

using Answers = std::map<Question, int>;

/// Two-phase rating service. Every state change is appended to an event log
/// and replayed on construction. Thread-safe.
class AnnotationService {
 public:
  using Clock = std::function<std::string()>;

  static std::string utc_now();

  /// `event_log` may be empty for an in-memory service.
  AnnotationService(Corpus corpus, std::filesystem::path image_root,
                    std::vector<QuestionSpec> questions, std::filesystem::path event_log,
                    std::uint64_t seed, Clock clock = &AnnotationService::utc_now);

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Throws ServiceError kClosed once coverage is complete and kConflict for
  /// a participant that already has a session.
  Session create_session(const std::string& participant_id);
  Session session(const std::string& session_id) const;

  /// Description and context; image and stored pre answers only after reveal.
  nlohmann::ordered_json item_view(const std::string& session_id, std::size_t item) const;
  void submit_pre(const std::string& session_id, std::size_t item, const Answers& answers);
  /// Image bytes (base64) plus the participant's stored pre answers.
  nlohmann::ordered_json reveal(const std::string& session_id, std::size_t item);
  void submit_post(const std::string& session_id, std::size_t item, const Answers& answers,
                   bool wrong_info_flag, const std::string& comment);

  std::vector<RatingRecord> ratings() const;
  CoverageStatus coverage() const;
  std::vector<ExclusionVerdict> exclusions() const;
  const std::vector<QuestionSpec>& questions() const { return questions_; }
  const Corpus& corpus() const { return corpus_; }

  static Answers answers_from_json(const nlohmann::json& j);

 private:
  Session& find_session(const std::string& session_id);
  const Session& find_session(const std::string& session_id) const;
  void check_item(const Session& s, std::size_t item) const;
  void check_answers(const Answers& answers, Phase phase) const;
  Session assemble(const std::string& participant_id) const;
  CoverageStatus coverage_locked() const;
  Answers stored_answers(const Session& s, std::size_t item, Phase phase) const;

  void append_event(const nlohmann::ordered_json& event);
  void replay();
  void apply_session(Session s);
  void apply_pre(Session& s, std::size_t item, const Answers& answers,
                 const std::string& timestamp);
  void apply_post(Session& s, std::size_t item, const Answers& answers, bool flag,
                  const std::string& comment, const std::string& timestamp);

  Corpus corpus_;
  std::filesystem::path image_root_;
  std::vector<QuestionSpec> questions_;
  std::filesystem::path event_log_;
  std::uint64_t seed_;
  Clock clock_;
  std::set<std::string> identical_ids_;
  std::vector<std::string> description_ids_;

  mutable std::mutex mu_;
  std::ofstream log_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::string> session_of_participant_;
  std::vector<RatingRecord> records_;
};

}  // namespace descbench

#endif  // DESCBENCH_ANNOTATION_HPP_
