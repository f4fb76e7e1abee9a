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


#include <algorithm>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "descbench/annotation.hpp"
#include "descbench/annotation_http.hpp"
#include "descbench/fixture.hpp"
#include "httplib.h"
#include "support/temp_dir.hpp"

namespace descbench {
namespace {

using nlohmann::json;
using testing::TempDir;

class AnnotationTest : public ::testing::Test {
 protected:
  void SetUp() override { use_fixture(9); }

  void use_fixture(std::size_t records, double identical_fraction = 0.2) {
    FixtureOptions opts;
    opts.records = records;
    opts.seed = 5;
    opts.ratings = false;
    opts.identical_fraction = identical_fraction;
    const auto summary = make_fixture(dir_.path() / ("fx" + std::to_string(records)), opts);
    corpus_ = load_corpus(summary.dataset);
    images_ = summary.image_root;
  }

  std::unique_ptr<AnnotationService> service(const std::filesystem::path& log = {},
                                             std::uint64_t seed = 1) {
    return std::make_unique<AnnotationService>(corpus_, images_, default_questions(), log, seed,
                                               [] { return std::string("2026-01-01T00:00:00Z"); });
  }

  static Answers answers(Phase phase, int value) {
    Answers a;
    for (Question q : kAllQuestions) {
      if (asked_in(q, phase)) a[q] = value;
    }
    return a;
  }

  // Completes every item; `attentive` rates added_info 1 on the identical item.
  void complete(AnnotationService& svc, const Session& s, bool attentive) {
    for (std::size_t k = 0; k < s.items.size(); ++k) {
      const bool ident = corpus_.at(s.items[k]).identical_to_caption;
      Answers pre = answers(Phase::kPre, 4);
      Answers post = answers(Phase::kPost, 4);
      if (ident) pre[Question::kAddedInfo] = post[Question::kAddedInfo] = attentive ? 1 : 5;
      svc.submit_pre(s.session_id, k, pre);
      svc.reveal(s.session_id, k);
      svc.submit_post(s.session_id, k, post, false, "");
    }
  }

  TempDir dir_{"annot"};
  Corpus corpus_;
  std::filesystem::path images_;
};

ServiceError::Status status_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.status();
  }
  ADD_FAILURE() << "no ServiceError thrown";
  return ServiceError::Status::kBadRequest;
}

TEST_F(AnnotationTest, SessionAssembly) {
  auto svc = service();
  const Session s = svc->create_session("p1");
  ASSERT_EQ(s.items.size(), kSessionItems);
  std::size_t identical = 0;
  for (const auto& id : s.items) identical += corpus_.at(id).identical_to_caption;
  EXPECT_EQ(identical, 1u);
  EXPECT_EQ(std::set<std::string>(s.items.begin(), s.items.end()).size(), kSessionItems);
  EXPECT_EQ(s.question_order.back(), Question::kOverall);
  EXPECT_EQ(s.question_order.size(), kAllQuestions.size());
  EXPECT_EQ(status_of([&] { svc->create_session("p1"); }), ServiceError::Status::kConflict);

  auto again = service();
  EXPECT_EQ(again->create_session("p1"), s);
}

TEST_F(AnnotationTest, LeastCoveredItemsFirst) {
  auto svc = service();
  std::map<std::string, int> load;
  for (const auto& rec : corpus_) load[rec.record_id] = 0;
  // Pending sessions count as load, so assignments stay balanced.
  for (int p = 0; p < 5; ++p) {
    for (const auto& id : svc->create_session("p" + std::to_string(p)).items) ++load[id];
    int lo = 1 << 20, hi = 0;
    for (const auto& [id, n] : load) {
      if (corpus_.at(id).identical_to_caption) continue;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1) << "after session " << p;
  }
}

TEST_F(AnnotationTest, StateMachine) {
  auto svc = service();
  const Session s = svc->create_session("p1");
  const auto sid = s.session_id;

  auto view = svc->item_view(sid, 0);
  EXPECT_FALSE(view.contains("image"));
  EXPECT_EQ(view["image_available"], false);
  EXPECT_EQ(view["description"], corpus_.at(s.items[0]).description);

  EXPECT_EQ(status_of([&] { svc->reveal(sid, 0); }), ServiceError::Status::kConflict);
  EXPECT_EQ(status_of([&] { svc->submit_post(sid, 0, answers(Phase::kPost, 3), false, ""); }),
            ServiceError::Status::kConflict);

  Answers missing = answers(Phase::kPre, 3);
  missing.erase(Question::kFit);
  EXPECT_EQ(status_of([&] { svc->submit_pre(sid, 0, missing); }),
            ServiceError::Status::kBadRequest);
  Answers zero = answers(Phase::kPre, 3);
  zero[Question::kOverall] = 0;
  EXPECT_EQ(status_of([&] { svc->submit_pre(sid, 0, zero); }), ServiceError::Status::kBadRequest);
  EXPECT_EQ(status_of([&] { svc->submit_pre(sid, 9, answers(Phase::kPre, 3)); }),
            ServiceError::Status::kNotFound);
  EXPECT_EQ(status_of([&] { svc->submit_pre("nope", 0, answers(Phase::kPre, 3)); }),
            ServiceError::Status::kNotFound);
  EXPECT_TRUE(svc->ratings().empty());

  Answers pre = answers(Phase::kPre, 2);
  pre[Question::kImaginability] = 5;
  svc->submit_pre(sid, 0, pre);
  EXPECT_EQ(status_of([&] { svc->submit_pre(sid, 0, pre); }), ServiceError::Status::kConflict);

  const auto r1 = svc->reveal(sid, 0);
  const auto r2 = svc->reveal(sid, 0);
  EXPECT_EQ(r1, r2);
  EXPECT_FALSE(r1["image"]["data_b64"].get<std::string>().empty());
  EXPECT_EQ(r1["pre_answers"]["imaginability"], 5);
  EXPECT_EQ(r1["pre_answers"]["overall"], 2);
  EXPECT_TRUE(svc->item_view(sid, 0)["image_available"].get<bool>());

  Answers post = answers(Phase::kPost, 3);
  post[Question::kImaginability] = 3;
  EXPECT_EQ(status_of([&] { svc->submit_post(sid, 0, post, false, ""); }),
            ServiceError::Status::kBadRequest);
  svc->submit_post(sid, 0, answers(Phase::kPost, 3), true, "wrong color");
  EXPECT_EQ(status_of([&] { svc->submit_post(sid, 0, answers(Phase::kPost, 3), false, ""); }),
            ServiceError::Status::kConflict);

  const auto rows = svc->ratings();
  EXPECT_EQ(rows.size(), 11u);  // six pre, five post
  for (const auto& r : rows) {
    if (r.phase == Phase::kPost) {
      EXPECT_TRUE(r.wrong_info_flag);
      EXPECT_EQ(r.comment, "wrong color");
    }
  }
}

TEST_F(AnnotationTest, ClosesAtCoverage) {
  use_fixture(5);
  auto svc = service();
  for (int i = 0; i < 2; ++i) {
    complete(*svc, svc->create_session("ok" + std::to_string(i)), true);
  }
  EXPECT_FALSE(svc->coverage().complete);
  // An inattentive rater does not count toward coverage.
  complete(*svc, svc->create_session("careless"), false);
  EXPECT_FALSE(svc->coverage().complete);
  complete(*svc, svc->create_session("ok2"), true);
  const auto cov = svc->coverage();
  EXPECT_TRUE(cov.complete);
  for (const auto& [id, n] : cov.valid_counts) EXPECT_EQ(n, 3u);
  EXPECT_EQ(status_of([&] { svc->create_session("late"); }), ServiceError::Status::kClosed);
  const auto verdicts = svc->exclusions();
  ASSERT_EQ(verdicts.size(), 4u);
  EXPECT_TRUE(verdicts[0].excluded);  // "careless" sorts first
}

TEST_F(AnnotationTest, EventLogReplay) {
  const auto log = dir_.path() / "events.jsonl";
  std::vector<RatingRecord> before;
  Session s;
  {
    auto svc = service(log);
    s = svc->create_session("p1");
    svc->submit_pre(s.session_id, 0, answers(Phase::kPre, 2));
    svc->reveal(s.session_id, 0);
    svc->submit_post(s.session_id, 0, answers(Phase::kPost, 2), false, "");
    svc->submit_pre(s.session_id, 1, answers(Phase::kPre, 4));
    before = svc->ratings();
  }
  // A torn final line from a crash mid-append is ignored.
  {
    std::ofstream(log, std::ios::app) << R"({"event":"post","session_id":)";
  }
  auto svc = service(log);
  EXPECT_EQ(svc->ratings(), before);
  const Session replayed = svc->session(s.session_id);
  EXPECT_EQ(replayed.states[0], ItemState::kDone);
  EXPECT_EQ(replayed.states[1], ItemState::kRevealEligible);
  EXPECT_EQ(status_of([&] { svc->create_session("p1"); }), ServiceError::Status::kConflict);
}

TEST_F(AnnotationTest, CorruptLogLineIsAnError) {
  const auto log = dir_.path() / "bad.jsonl";
  testing::spit(log, "{not json\n{\"event\":\"reveal\"}\n");
  EXPECT_THROW(service(log), ValidationError);
}

TEST_F(AnnotationTest, TooFewRecords) {
  use_fixture(5, 0.0);
  Corpus all_distinct;
  {
    std::vector<ContextedRecord> recs(corpus_.begin(), corpus_.end());
    for (auto& r : recs) r.identical_to_caption = false;
    all_distinct = Corpus(recs);
  }
  EXPECT_THROW(AnnotationService(all_distinct, images_, default_questions(), {}, 1),
               ValidationError);
}

TEST(Questions, ConfigRequiresCoreQuestions) {
  EXPECT_EQ(default_questions().size(), 6u);
  EXPECT_THROW(questions_from_json(json::array({{{"id", "overall"}, {"text", "x"}}})),
               ValidationError);
  const auto qs = questions_from_json(json::array(
      {{{"id", "overall"}, {"text", "o"}}, {{"id", "added_info"}, {"text", "a"}}}));
  EXPECT_EQ(qs.size(), 2u);
  EXPECT_THROW(questions_from_json(json::array({{{"id", "overall"}, {"text", "o"}},
                                                {{"id", "overall"}, {"text", "o"}},
                                                {{"id", "added_info"}, {"text", "a"}}})),
               ValidationError);
}

class AnnotationHttpTest : public AnnotationTest {
 protected:
  void SetUp() override {
    AnnotationTest::SetUp();
    svc_ = service();
    server_ = std::make_unique<AnnotationServer>(*svc_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) return {0, json()};
    return {res->status, res->body.empty() ? json() : json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }

  static json answer_json(Phase phase, int value) {
    json j = json::object();
    for (Question q : kAllQuestions) {
      if (asked_in(q, phase)) j[std::string(to_string(q))] = value;
    }
    return j;
  }

  std::unique_ptr<AnnotationService> svc_;
  std::unique_ptr<AnnotationServer> server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(AnnotationHttpTest, Routes) {
  auto [code, session] = post("/session", {{"participant_id", "web1"}});
  ASSERT_EQ(code, 201);
  const std::string base = "/session/" + session["session_id"].get<std::string>();
  EXPECT_EQ(post("/session", {{"participant_id", "web1"}}).first, 409);
  EXPECT_EQ(post("/session", json::object()).first, 400);
  EXPECT_EQ(get("/session/none").first, 404);
  EXPECT_EQ(get(base).first, 200);

  auto [vc, view] = get(base + "/item/0");
  EXPECT_EQ(vc, 200);
  EXPECT_FALSE(view.contains("image"));
  EXPECT_EQ(get(base + "/item/7").first, 404);

  EXPECT_EQ(post(base + "/item/0/reveal", json::object()).first, 409);
  EXPECT_EQ(post(base + "/item/0/pre", {{"answers", {{"overall", 3}}}}).first, 400);
  EXPECT_EQ(post(base + "/item/0/pre", {{"answers", answer_json(Phase::kPre, 3)}}).first, 200);
  auto [rc, revealed] = post(base + "/item/0/reveal", json::object());
  EXPECT_EQ(rc, 200);
  EXPECT_TRUE(revealed["image"].contains("data_b64"));
  EXPECT_EQ(revealed["pre_answers"]["overall"], 3);
  EXPECT_EQ(post(base + "/item/0/post",
                 {{"answers", answer_json(Phase::kPost, 4)}, {"wrong_info_flag", "yes"}})
                .first,
            400);
  EXPECT_EQ(post(base + "/item/0/post",
                 {{"answers", answer_json(Phase::kPost, 4)}, {"wrong_info_flag", true}})
                .first,
            200);

  EXPECT_EQ(get("/questions").second.size(), 6u);
  EXPECT_EQ(get("/admin/coverage").first, 200);
  EXPECT_EQ(get("/admin/exclusions").first, 200);
  auto res = client_->Get("/admin/ratings");
  ASSERT_TRUE(res);
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 11);
}

TEST_F(AnnotationHttpTest, ClosedIs410) {
  use_fixture(5);
  svc_->create_session("x");  // the running server still uses the nine-record service
  auto small = service();
  for (int i = 0; i < 3; ++i) complete(*small, small->create_session("p" + std::to_string(i)), true);
  AnnotationServer server(*small);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  httplib::Client c("127.0.0.1", port);
  auto res = c.Post("/session", R"({"participant_id":"late"})", "application/json");
  server.stop();
  t.join();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 410);
}

}  // namespace
}  // namespace descbench
