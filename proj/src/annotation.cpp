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

#include "descbench/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "descbench/digest.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Status = ServiceError::Status;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string media_type(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

ordered_json answers_to_json(const Answers& answers) {
  ordered_json j = ordered_json::object();
  for (const auto& [q, v] : answers) j[std::string(to_string(q))] = v;
  return j;
}

}  // namespace

std::vector<QuestionSpec> default_questions() {
  return {
      {Question::kImaginability,
       "How well can you picture the image from this description alone?"},
      {Question::kRelevance,
       "How well does the description cover what matters about the image in this context?"},
      {Question::kIrrelevance,
       "How free is the description of details that do not matter in this context?"},
      {Question::kAddedInfo,
       "How much does the description add beyond what the caption already says?"},
      {Question::kFit, "How well does the description fit the surrounding article?"},
      {Question::kOverall, "Overall, how good is this description for someone who cannot see the image?"},
  };
}

std::vector<QuestionSpec> questions_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("question config must be a JSON array");
  std::vector<QuestionSpec> out;
  std::set<Question> seen;
  for (const auto& item : j) {
    QuestionSpec q;
    try {
      q.id = question_from_string(item.at("id").get<std::string>());
      q.text = item.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed question entry: ") + e.what());
    }
    if (!seen.insert(q.id).second) {
      throw ValidationError("question '" + std::string(to_string(q.id)) + "' listed twice");
    }
    out.push_back(std::move(q));
  }
  if (!seen.count(Question::kOverall) || !seen.count(Question::kAddedInfo)) {
    throw ValidationError("question config must include overall and added_info");
  }
  return out;
}

std::vector<QuestionSpec> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open question config " + path.string());
  try {
    return questions_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError("question config " + path.string() + ": " + e.what());
  }
}

std::string_view to_string(ItemState s) {
  switch (s) {
    case ItemState::kPendingPre:
      return "pending_pre";
    case ItemState::kRevealEligible:
      return "reveal_eligible";
    case ItemState::kRevealed:
      return "revealed";
    case ItemState::kDone:
      return "done";
  }
  return "?";
}

ordered_json to_json(const Session& s) {
  ordered_json j;
  j["session_id"] = s.session_id;
  j["participant_id"] = s.participant_id;
  j["items"] = s.items;
  ordered_json order = ordered_json::array();
  for (Question q : s.question_order) order.push_back(to_string(q));
  j["question_order"] = std::move(order);
  ordered_json states = ordered_json::array();
  for (ItemState st : s.states) states.push_back(to_string(st));
  j["states"] = std::move(states);
  return j;
}

Session session_from_json(const json& j) {
  Session s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.participant_id = j.at("participant_id").get<std::string>();
    s.items = j.at("items").get<std::vector<std::string>>();
    for (const auto& q : j.at("question_order")) {
      s.question_order.push_back(question_from_string(q.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed session: ") + e.what());
  }
  s.states.assign(s.items.size(), ItemState::kPendingPre);
  return s;
}

// --- service --------------------------------------------------------------------

std::string AnnotationService::utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

AnnotationService::AnnotationService(Corpus corpus, std::filesystem::path image_root,
                                     std::vector<QuestionSpec> questions,
                                     std::filesystem::path event_log, std::uint64_t seed,
                                     Clock clock)
    : corpus_(std::move(corpus)),
      image_root_(std::move(image_root)),
      questions_(std::move(questions)),
      event_log_(std::move(event_log)),
      seed_(seed),
      clock_(std::move(clock)) {
  questions_from_json([this] {
    json j = json::array();
    for (const auto& q : questions_) j.push_back({{"id", to_string(q.id)}, {"text", q.text}});
    return j;
  }());
  for (const auto& rec : corpus_) {
    description_ids_.push_back(rec.record_id);
    if (rec.identical_to_caption) identical_ids_.insert(rec.record_id);
  }
  if (identical_ids_.size() < kSessionIdenticalItems ||
      corpus_.size() - identical_ids_.size() < kSessionItems - kSessionIdenticalItems) {
    throw ValidationError("annotation needs at least 1 caption-identical and 4 other descriptions");
  }
  if (!event_log_.empty()) {
    replay();
    if (event_log_.has_parent_path()) std::filesystem::create_directories(event_log_.parent_path());
    log_.open(event_log_, std::ios::binary | std::ios::app);
    if (!log_) throw IoError("cannot open event log " + event_log_.string());
  }
}

void AnnotationService::append_event(const ordered_json& event) {
  if (!log_.is_open()) return;
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) throw IoError("event log write failed: " + event_log_.string());
}

void AnnotationService::replay() {
  std::ifstream in(event_log_);
  if (!in) return;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!trim(line).empty()) lines.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json e;
    try {
      e = json::parse(lines[i]);
    } catch (const json::parse_error& err) {
      // A crash mid-append can only tear the final line.
      if (i + 1 == lines.size()) break;
      throw ValidationError("event log line " + std::to_string(i + 1) + ": " + err.what());
    }
    try {
      const std::string type = e.at("event").get<std::string>();
      if (type == "session") {
        apply_session(session_from_json(e.at("session")));
        continue;
      }
      Session& s = find_session(e.at("session_id").get<std::string>());
      const std::size_t item = e.at("item").get<std::size_t>();
      check_item(s, item);
      const std::string ts = e.value("timestamp", std::string());
      if (type == "pre") {
        apply_pre(s, item, answers_from_json(e.at("answers")), ts);
      } else if (type == "reveal") {
        if (s.states[item] == ItemState::kRevealEligible) s.states[item] = ItemState::kRevealed;
      } else if (type == "post") {
        apply_post(s, item, answers_from_json(e.at("answers")), e.value("wrong_info_flag", false),
                   e.value("comment", std::string()), ts);
      } else {
        throw ValidationError("unknown event '" + type + "'");
      }
    } catch (const json::exception& err) {
      throw ValidationError("event log line " + std::to_string(i + 1) + ": " + err.what());
    }
  }
}

Session& AnnotationService::find_session(const std::string& session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw ServiceError(Status::kNotFound, "unknown session '" + session_id + "'");
  }
  return it->second;
}

const Session& AnnotationService::find_session(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw ServiceError(Status::kNotFound, "unknown session '" + session_id + "'");
  }
  return it->second;
}

void AnnotationService::check_item(const Session& s, std::size_t item) const {
  if (item >= s.items.size()) {
    throw ServiceError(Status::kNotFound, "session '" + s.session_id + "' has no item " +
                                              std::to_string(item));
  }
}

void AnnotationService::check_answers(const Answers& answers, Phase phase) const {
  for (const auto& [q, v] : answers) {
    if (!asked_in(q, phase)) {
      throw ServiceError(Status::kBadRequest, std::string(to_string(q)) +
                                                  " is not asked after the image is shown");
    }
    const bool configured = std::any_of(questions_.begin(), questions_.end(),
                                        [q = q](const QuestionSpec& s) { return s.id == q; });
    if (!configured) {
      throw ServiceError(Status::kBadRequest,
                         "question '" + std::string(to_string(q)) + "' is not configured");
    }
    if (v < kMinRating || v > kMaxRating) {
      throw ServiceError(Status::kBadRequest, "answer for " + std::string(to_string(q)) +
                                                  " must be an integer 1-5");
    }
  }
  for (const auto& spec : questions_) {
    if (asked_in(spec.id, phase) && !answers.count(spec.id)) {
      throw ServiceError(Status::kBadRequest,
                         "missing answer for " + std::string(to_string(spec.id)));
    }
  }
}

Answers AnnotationService::answers_from_json(const json& j) {
  if (!j.is_object()) throw ServiceError(Status::kBadRequest, "answers must be an object");
  Answers out;
  for (const auto& [name, value] : j.items()) {
    Question q;
    try {
      q = question_from_string(name);
    } catch (const ValidationError& e) {
      throw ServiceError(Status::kBadRequest, e.what());
    }
    if (!value.is_number_integer()) {
      throw ServiceError(Status::kBadRequest, "answer for " + name + " must be an integer 1-5");
    }
    out[q] = value.get<int>();
  }
  return out;
}

CoverageStatus AnnotationService::coverage_locked() const {
  return coverage_status(records_, description_ids_, identical_ids_);
}

Session AnnotationService::assemble(const std::string& participant_id) const {
  const CoverageStatus cov = coverage_locked();
  if (cov.complete) {
    throw ServiceError(Status::kClosed, "recruitment closed: every description has " +
                                            std::to_string(cov.threshold) +
                                            " valid annotations");
  }

  // Slots already promised to participants who may still count.
  const auto verdicts = compute_exclusions(records_, identical_ids_);
  std::map<std::string_view, const ExclusionVerdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[v.participant_id] = &v;
  std::map<std::string_view, std::size_t> pending;
  for (const auto& [_, s] : sessions_) {
    auto it = verdict_of.find(s.participant_id);
    const bool excluded = it != verdict_of.end() && it->second->excluded;
    const bool passed = it != verdict_of.end() && it->second->passed;
    if (excluded) continue;
    for (std::size_t k = 0; k < s.items.size(); ++k) {
      if (!(passed && s.states[k] == ItemState::kDone)) ++pending[s.items[k]];
    }
  }

  const std::uint64_t session_seed = derive_seed(seed_, "session", participant_id);
  struct Candidate {
    std::size_t load;
    std::uint64_t tiebreak;
    const std::string* id;
  };
  std::vector<Candidate> identical, distinct;
  for (const auto& id : description_ids_) {
    Candidate c{cov.valid_counts.at(id) + pending[id], derive_seed(session_seed, id), &id};
    (identical_ids_.count(id) ? identical : distinct).push_back(c);
  }
  auto fewest_first = [](const Candidate& a, const Candidate& b) {
    if (a.load != b.load) return a.load < b.load;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return *a.id < *b.id;
  };
  std::sort(identical.begin(), identical.end(), fewest_first);
  std::sort(distinct.begin(), distinct.end(), fewest_first);

  Session s;
  s.session_id = "s-" + hex64(session_seed);
  s.participant_id = participant_id;
  for (std::size_t i = 0; i < kSessionIdenticalItems; ++i) s.items.push_back(*identical[i].id);
  for (std::size_t i = 0; i < kSessionItems - kSessionIdenticalItems; ++i) {
    s.items.push_back(*distinct[i].id);
  }
  Rng rng(derive_seed(session_seed, "items"));
  shuffle(std::span<std::string>(s.items), rng);

  for (const auto& q : questions_) {
    if (q.id != Question::kOverall) s.question_order.push_back(q.id);
  }
  shuffle(std::span<Question>(s.question_order), rng);
  s.question_order.push_back(Question::kOverall);
  s.states.assign(s.items.size(), ItemState::kPendingPre);
  return s;
}

void AnnotationService::apply_session(Session s) {
  if (session_of_participant_.count(s.participant_id)) {
    throw ValidationError("participant '" + s.participant_id + "' has two sessions");
  }
  session_of_participant_[s.participant_id] = s.session_id;
  const std::string id = s.session_id;
  sessions_.emplace(id, std::move(s));
}

Session AnnotationService::create_session(const std::string& participant_id) {
  if (trim(participant_id).empty()) {
    throw ServiceError(Status::kBadRequest, "participant_id is required");
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (session_of_participant_.count(participant_id)) {
    throw ServiceError(Status::kConflict,
                       "participant '" + participant_id + "' already has a session");
  }
  Session s = assemble(participant_id);
  if (sessions_.count(s.session_id)) {
    throw ServiceError(Status::kConflict, "session id collision for '" + participant_id + "'");
  }
  ordered_json e;
  e["event"] = "session";
  e["session"] = to_json(s);
  e["timestamp"] = clock_();
  append_event(e);
  apply_session(s);
  return s;
}

Session AnnotationService::session(const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return find_session(session_id);
}

Answers AnnotationService::stored_answers(const Session& s, std::size_t item,
                                          Phase phase) const {
  Answers out;
  for (const auto& r : records_) {
    if (r.participant_id == s.participant_id && r.description_id == s.items[item] &&
        r.phase == phase) {
      out[r.question] = r.value;
    }
  }
  return out;
}

ordered_json AnnotationService::item_view(const std::string& session_id,
                                          std::size_t item) const {
  std::lock_guard<std::mutex> lock(mu_);
  const Session& s = find_session(session_id);
  check_item(s, item);
  const ContextedRecord& rec = corpus_.at(s.items[item]);
  const ItemState state = s.states[item];
  const Phase phase = state == ItemState::kPendingPre ? Phase::kPre : Phase::kPost;

  ordered_json j;
  j["session_id"] = s.session_id;
  j["item"] = item;
  j["description_id"] = rec.record_id;
  j["description"] = rec.description;
  j["context"] = {{"article_title", rec.article_title},
                  {"first_paragraph", rec.first_paragraph},
                  {"section_title", rec.section_title},
                  {"section_text", rec.section_text},
                  {"caption", rec.caption}};
  j["state"] = to_string(state);
  ordered_json qs = ordered_json::array();
  for (Question q : s.question_order) {
    if (!asked_in(q, phase)) continue;
    for (const auto& spec : questions_) {
      if (spec.id == q) qs.push_back({{"id", to_string(q)}, {"text", spec.text}});
    }
  }
  j["questions"] = std::move(qs);
  if (state == ItemState::kRevealed || state == ItemState::kDone) {
    j["pre_answers"] = answers_to_json(stored_answers(s, item, Phase::kPre));
    j["image_available"] = true;
  } else {
    j["image_available"] = false;
  }
  return j;
}

void AnnotationService::apply_pre(Session& s, std::size_t item, const Answers& answers,
                                  const std::string& timestamp) {
  for (const auto& [q, v] : answers) {
    records_.push_back({s.participant_id, s.items[item], q, Phase::kPre, v, false, "", timestamp});
  }
  s.states[item] = ItemState::kRevealEligible;
}

void AnnotationService::submit_pre(const std::string& session_id, std::size_t item,
                                   const Answers& answers) {
  std::lock_guard<std::mutex> lock(mu_);
  Session& s = find_session(session_id);
  check_item(s, item);
  if (s.states[item] != ItemState::kPendingPre) {
    throw ServiceError(Status::kConflict, "pre-image answers already stored for item " +
                                              std::to_string(item));
  }
  check_answers(answers, Phase::kPre);
  const std::string ts = clock_();
  ordered_json e;
  e["event"] = "pre";
  e["session_id"] = session_id;
  e["item"] = item;
  e["answers"] = answers_to_json(answers);
  e["timestamp"] = ts;
  append_event(e);
  apply_pre(s, item, answers, ts);
}

ordered_json AnnotationService::reveal(const std::string& session_id, std::size_t item) {
  std::lock_guard<std::mutex> lock(mu_);
  Session& s = find_session(session_id);
  check_item(s, item);
  if (s.states[item] == ItemState::kPendingPre) {
    throw ServiceError(Status::kConflict,
                       "item " + std::to_string(item) + " cannot be revealed before pre-image answers");
  }
  const ContextedRecord& rec = corpus_.at(s.items[item]);
  const auto path = image_root_ / rec.image_ref;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read image " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (s.states[item] == ItemState::kRevealEligible) {
    ordered_json e;
    e["event"] = "reveal";
    e["session_id"] = session_id;
    e["item"] = item;
    e["timestamp"] = clock_();
    append_event(e);
    s.states[item] = ItemState::kRevealed;
  }
  ordered_json j;
  j["session_id"] = s.session_id;
  j["item"] = item;
  j["description_id"] = rec.record_id;
  j["state"] = to_string(s.states[item]);
  j["image"] = {{"media_type", media_type(path)}, {"data_b64", base64_encode(bytes)}};
  j["pre_answers"] = answers_to_json(stored_answers(s, item, Phase::kPre));
  return j;
}

void AnnotationService::apply_post(Session& s, std::size_t item, const Answers& answers,
                                   bool flag, const std::string& comment,
                                   const std::string& timestamp) {
  for (const auto& [q, v] : answers) {
    records_.push_back({s.participant_id, s.items[item], q, Phase::kPost, v, flag, comment,
                        timestamp});
  }
  s.states[item] = ItemState::kDone;
}

void AnnotationService::submit_post(const std::string& session_id, std::size_t item,
                                    const Answers& answers, bool wrong_info_flag,
                                    const std::string& comment) {
  std::lock_guard<std::mutex> lock(mu_);
  Session& s = find_session(session_id);
  check_item(s, item);
  switch (s.states[item]) {
    case ItemState::kPendingPre:
    case ItemState::kRevealEligible:
      throw ServiceError(Status::kConflict, "item " + std::to_string(item) +
                                                " must be revealed before post-image answers");
    case ItemState::kDone:
      throw ServiceError(Status::kConflict, "post-image answers already stored for item " +
                                                std::to_string(item));
    case ItemState::kRevealed:
      break;
  }
  check_answers(answers, Phase::kPost);
  const std::string ts = clock_();
  ordered_json e;
  e["event"] = "post";
  e["session_id"] = session_id;
  e["item"] = item;
  e["answers"] = answers_to_json(answers);
  e["wrong_info_flag"] = wrong_info_flag;
  e["comment"] = comment;
  e["timestamp"] = ts;
  append_event(e);
  apply_post(s, item, answers, wrong_info_flag, comment, ts);
}

std::vector<RatingRecord> AnnotationService::ratings() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

CoverageStatus AnnotationService::coverage() const {
  std::lock_guard<std::mutex> lock(mu_);
  return coverage_locked();
}

std::vector<ExclusionVerdict> AnnotationService::exclusions() const {
  std::lock_guard<std::mutex> lock(mu_);
  return compute_exclusions(records_, identical_ids_);
}

}  // namespace descbench
