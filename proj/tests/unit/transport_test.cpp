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


#include <thread>

#include <gtest/gtest.h>

#include "descbench/error.hpp"
#include "descbench/fixture.hpp"
#include "descbench/generation.hpp"
#include "descbench/protocol.hpp"
#include "descbench/scoring.hpp"
#include "descbench/transport.hpp"
#include "httplib.h"
#include "support/temp_dir.hpp"

namespace descbench {
namespace {

const std::string kAdapter = MOCK_ADAPTER_PATH;

TEST(SplitCommand, QuotesGroup) {
  EXPECT_EQ(split_command("python  a.py --name 'two words' \"x y\""),
            (std::vector<std::string>{"python", "a.py", "--name", "two words", "x y"}));
  EXPECT_TRUE(split_command("   ").empty());
}

TEST(Transport, EndpointParsing) {
  EXPECT_THROW(make_transport("ftp://x"), ValidationError);
  EXPECT_EQ(make_transport("http://127.0.0.1:1")->describe(), "http://127.0.0.1:1");
}

TEST(Transport, MissingExecutableIsAdapterError) {
  SubprocessTransport t({"/nonexistent/adapter"});
  EXPECT_THROW(t.round_trip("{}"), AdapterError);
}

TEST(Transport, UnreachableHttpIsAdapterError) {
  HttpTransport t("http://127.0.0.1:1/rpc");
  EXPECT_THROW(t.round_trip("{}"), AdapterError);
}

TEST(RemoteScorer, SubprocessMatchesBuiltin) {
  testing::TempDir dir;
  const Corpus corpus = synthetic_corpus(8, 3);
  write_fixture_images(corpus, dir.path(), 3);
  MetricSpec spec = builtin_metric("mock_bagofwords");
  spec.transport = ScorerTransport::kSubprocessStream;
  spec.command = {kAdapter, "--scorer", "mock_bagofwords", "--image-root", dir.path().string()};
  auto remote = make_scorer(spec);
  EXPECT_EQ(remote->handshake().family, "similarity");
  BuiltinScorer local(spec.metric_id, "mock_bagofwords");
  const MetricSpec local_spec = builtin_metric("mock_bagofwords");
  for (const auto& rec : corpus) {
    const ScoreTarget t{&rec, std::nullopt};
    const auto a = remote->score(make_score_request(spec, t, dir.path()));
    const auto b = local.score(make_score_request(local_spec, t, dir.path()));
    EXPECT_EQ(a.request_id, rec.record_id);
    EXPECT_EQ(a.score, b.score);
  }
}

TEST(RemoteScorer, FamilyMismatchDetected) {
  MetricSpec spec = builtin_metric("mock_bagofwords");
  spec.transport = ScorerTransport::kSubprocessStream;
  spec.command = {kAdapter, "--family", "likelihood"};
  EXPECT_THROW(make_scorer(spec)->handshake(), ProtocolError);
}

TEST(RemoteScorer, AdapterErrorMessagesAreRemoteErrors) {
  const Corpus corpus = synthetic_corpus(5, 3);
  MetricSpec spec = builtin_metric("mock_lengthprior");
  spec.transport = ScorerTransport::kSubprocessStream;
  spec.command = {kAdapter, "--scorer", "mock_lengthprior", "--fail-ids", corpus[1].record_id};
  auto scorer = make_scorer(spec);
  scorer->handshake();
  EXPECT_NO_THROW(scorer->score(make_score_request(spec, {&corpus[0], std::nullopt}, "/tmp")));
  EXPECT_THROW(scorer->score(make_score_request(spec, {&corpus[1], std::nullopt}, "/tmp")),
               RemoteError);
  EXPECT_NO_THROW(scorer->score(make_score_request(spec, {&corpus[2], std::nullopt}, "/tmp")));
}

TEST(RemoteScorer, CrashIsAdapterError) {
  const Corpus corpus = synthetic_corpus(5, 3);
  MetricSpec spec = builtin_metric("mock_lengthprior");
  spec.transport = ScorerTransport::kSubprocessStream;
  spec.command = {kAdapter, "--scorer", "mock_lengthprior", "--crash-after", "2"};
  auto scorer = make_scorer(spec);
  scorer->handshake();
  scorer->score(make_score_request(spec, {&corpus[0], std::nullopt}, "/tmp"));
  scorer->score(make_score_request(spec, {&corpus[1], std::nullopt}, "/tmp"));
  try {
    scorer->score(make_score_request(spec, {&corpus[2], std::nullopt}, "/tmp"));
    FAIL();
  } catch (const RemoteError&) {
    FAIL() << "crash must not look like a per-record error";
  } catch (const AdapterError&) {
  }
}

// In-process HTTP adapter backed by the builtin scorer.
class HttpAdapter {
 public:
  HttpAdapter() {
    server_.Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) {
      std::string line = req.body;
      while (!line.empty() && line.back() == '\n') line.pop_back();
      const auto msg = nlohmann::json::parse(line);
      if (msg["type"] == "hello") {
        res.set_content(serialize(Handshake{1, msg["metric_id"], "similarity"}) + "\n",
                        "application/x-ndjson");
        return;
      }
      auto request = parse_score_request(line);
      ++requests;
      inline_seen = inline_seen || request.image.inline_b64.has_value();
      res.set_content(serialize(scorer_.score(request)) + "\n", "application/x-ndjson");
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~HttpAdapter() {
    server_.stop();
    thread_.join();
  }

  int port = -1;
  int requests = 0;
  bool inline_seen = false;

 private:
  httplib::Server server_;
  BuiltinScorer scorer_{"m", "mock_bagofwords"};
  std::thread thread_;
};

TEST(RemoteScorer, HttpTransportSendsInlineImages) {
  testing::TempDir dir;
  const Corpus corpus = synthetic_corpus(5, 3);
  write_fixture_images(corpus, dir.path(), 3);
  HttpAdapter adapter;
  ASSERT_GT(adapter.port, 0);
  MetricSpec spec = MetricSpec::from_json(
      {{"metric_id", "m"},
       {"family", "similarity"},
       {"transport", "http"},
       {"endpoint", "http://127.0.0.1:" + std::to_string(adapter.port)}});
  auto scorer = make_scorer(spec);
  std::vector<ScoreTarget> targets;
  for (const auto& rec : corpus) targets.push_back({&rec, std::nullopt});
  const auto res = run_scoring(spec, *scorer, targets, dir / "s.jsonl", dir.path());
  EXPECT_EQ(res.scored, 5u);
  EXPECT_EQ(adapter.requests, 5);
  EXPECT_TRUE(adapter.inline_seen);
}

TEST(Generation, JsonRoundTripAndKey) {
  GenerationRequest r{"id1", GenerationTask::kContinueText, "A dog.", 1, 4};
  EXPECT_EQ(generation_request_from_json(to_json(r)), r);
  GenerationResponse resp{"id1", "out", {{0, 1, "A", "B", "name"}}};
  EXPECT_EQ(generation_response_from_json(to_json(resp)), resp);
  GenerationRequest other = r;
  other.request_id = "id2";
  EXPECT_EQ(transcript_key(r), transcript_key(other));
  other.budget_tokens = 5;
  EXPECT_NE(transcript_key(r), transcript_key(other));
  for (auto t : {GenerationTask::kReplaceNamesAndDates, GenerationTask::kInjectAlignmentErrors,
                 GenerationTask::kContinueText}) {
    EXPECT_EQ(generation_task_from_string(to_string(t)), t);
  }
}

TEST(Generation, ApplyReplacementsValidatesSpans) {
  EXPECT_EQ(apply_replacements("a red hat", {{2, 5, "red", "blue", "color"}}), "a blue hat");
  EXPECT_THROW(apply_replacements("a red hat", {{2, 5, "rod", "blue", ""}}), ValidationError);
  EXPECT_THROW(apply_replacements("a red hat", {{2, 50, "red", "blue", ""}}), ValidationError);
  EXPECT_THROW(apply_replacements("a red hat", {{0, 5, "a red", "x", ""}, {2, 5, "red", "y", ""}}),
               ValidationError);
}

TEST(Generation, StubContinuationWithoutBudgetIsOneSentence) {
  StubGenerationProvider stub;
  const auto r = stub.generate({"x", GenerationTask::kContinueText, "A dog.", 1, std::nullopt});
  EXPECT_FALSE(r.output.empty());
  EXPECT_EQ(r.output.back(), '.');
  const auto names = stub.generate({"y", GenerationTask::kReplaceNamesAndDates, "A dog.", 1, {}});
  EXPECT_TRUE(names.replacements.empty());
}

TEST(Generation, RemoteProviderMatchesStub) {
  RemoteGenerationProvider remote(make_transport("exec:" + kAdapter + " --scorer generation"));
  StubGenerationProvider stub;
  for (auto task : {GenerationTask::kReplaceNamesAndDates, GenerationTask::kInjectAlignmentErrors,
                    GenerationTask::kContinueText}) {
    const GenerationRequest req{"q", task, "Queen Elizabeth in a red dress in 1953.", 1, std::nullopt};
    EXPECT_EQ(remote.generate(req), stub.generate(req));
  }
}

TEST(Generation, RemoteProviderRejectsScorerFamily) {
  EXPECT_THROW(RemoteGenerationProvider(make_transport("exec:" + kAdapter)), ProtocolError);
}

TEST(Generation, TranscriptRecordsThenReplays) {
  testing::TempDir dir;
  const GenerationRequest req{"q1", GenerationTask::kInjectAlignmentErrors, "a red shirt", 1, {}};
  GenerationResponse first;
  {
    TranscriptProvider p(dir / "t", std::make_unique<StubGenerationProvider>());
    first = p.generate(req);
    EXPECT_EQ(p.misses(), 1u);
    GenerationRequest again = req;
    again.request_id = "q2";
    EXPECT_EQ(p.generate(again).output, first.output);
    EXPECT_EQ(p.hits(), 1u);
  }
  TranscriptProvider replay(dir / "t", nullptr);
  EXPECT_EQ(replay.generate(req), first);
  GenerationRequest unseen = req;
  unseen.input = "a blue shirt";
  try {
    replay.generate(unseen);
    FAIL();
  } catch (const AdapterError& e) {
    EXPECT_FALSE(e.retryable());
  }
}

TEST(Generation, ProviderFactory) {
  EXPECT_NE(dynamic_cast<StubGenerationProvider*>(make_generation_provider("stub").get()), nullptr);
  EXPECT_EQ(make_generation_provider("replay"), nullptr);
  EXPECT_THROW(make_generation_provider("carrier-pigeon"), ValidationError);
}

}  // namespace
}  // namespace descbench
