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


#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "descbench/error.hpp"
#include "descbench/fixture.hpp"
#include "descbench/pipeline.hpp"
#include "support/temp_dir.hpp"

namespace descbench {
namespace {

namespace fs = std::filesystem;
using testing::slurp;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    FixtureOptions opts;
    opts.records = 12;
    opts.seed = 3;
    fixture_ = make_fixture(dir_ / "fixture", opts);
    store_ = dir_ / "store";
  }

  void ingest() { cmd_ingest({fixture_.dataset, fixture_.image_root, store_, {}, {}}); }
  void split() { cmd_split({store_, 7}); }
  void augment() {
    AugmentArgs a;
    a.store = store_;
    a.seed = 11;
    cmd_augment(a);
  }
  ScoreSummary score() {
    return cmd_score({store_, {"builtin:mock_bagofwords", "builtin:mock_lengthprior"}, 1});
  }
  void evaluate(const fs::path& report) {
    EvaluateArgs e;
    e.store = store_;
    e.ratings = fixture_.ratings;
    e.report = report;
    e.seed = 2;
    e.resamples = 500;
    cmd_evaluate(e);
  }

  testing::TempDir dir_{"pipe"};
  FixtureSummary fixture_;
  fs::path store_;
};

TEST_F(PipelineTest, PrerequisitesEnforced) {
  EXPECT_THROW(split(), PrerequisiteError);
  EXPECT_THROW(augment(), PrerequisiteError);
  EXPECT_THROW(score(), PrerequisiteError);
  EXPECT_THROW(evaluate(dir_ / "r"), PrerequisiteError);
  ingest();
  // Originals alone can be scored before any augmentation exists.
  EXPECT_EQ(score().scored, 24u);
  ExportArgs ex;
  ex.store = store_;
  ex.out = dir_ / "ft";
  EXPECT_THROW(cmd_export_finetune(ex), PrerequisiteError);
}

TEST_F(PipelineTest, EndToEndIsIdempotent) {
  ingest();
  split();
  augment();
  const auto first = score();
  EXPECT_GT(first.scored, 0u);
  EXPECT_EQ(first.failed, 0u);
  evaluate(dir_ / "report");

  const StoreLayout layout(store_);
  const std::string corpus = slurp(layout.corpus);
  const std::string augmented = slurp(layout.augmented);
  const std::string scores = slurp(layout.scores_jsonl);
  const std::string pass_rates = slurp(dir_ / "report" / "pass_rates.csv");

  ingest();
  split();
  augment();
  const auto second = score();
  EXPECT_EQ(second.scored, 0u);
  EXPECT_EQ(second.skipped, first.scored);
  evaluate(dir_ / "report");
  EXPECT_EQ(slurp(layout.corpus), corpus);
  EXPECT_EQ(slurp(layout.augmented), augmented);
  EXPECT_EQ(slurp(layout.scores_jsonl), scores);
  EXPECT_EQ(slurp(dir_ / "report" / "pass_rates.csv"), pass_rates);

  // A different seed produces a different split but the same corpus.
  cmd_split({store_, 8});
  EXPECT_EQ(slurp(layout.corpus), corpus);
}

TEST_F(PipelineTest, ManifestsRecordSeedsAndOutputs) {
  ingest();
  split();
  augment();
  score();
  evaluate(dir_ / "report");
  const StoreLayout layout(store_);
  for (const char* stage : {"ingest", "split", "augment"}) {
    ASSERT_TRUE(fs::exists(layout.manifest(stage))) << stage;
  }
  const auto m = RunManifest::from_json(nlohmann::json::parse(slurp(layout.manifest("augment"))));
  EXPECT_EQ(m.stage, "augment");
  EXPECT_EQ(m.seeds.at("augment"), 11u);
  EXPECT_EQ(m.kinds.size(), kAllAugmentationKinds.size());
  EXPECT_EQ(m.tool_version, tool_version());
  ASSERT_FALSE(m.outputs.empty());
  for (const auto& [rel, hash] : m.outputs) {
    EXPECT_EQ(file_sha256(store_ / rel), hash) << rel;
  }
  EXPECT_EQ(RunManifest::from_json(nlohmann::json::parse(m.to_json().dump())).run_id(), m.run_id());

  const auto report = nlohmann::json::parse(slurp(dir_ / "report" / "manifest.json"));
  EXPECT_EQ(report["stage"], "evaluate");
  EXPECT_EQ(report["metric_configs"].size(), 2u);
  for (const auto& [rel, hash] : report["outputs"].items()) {
    EXPECT_EQ(file_sha256(dir_ / "report" / rel), hash.get<std::string>()) << rel;
  }
}

TEST_F(PipelineTest, ExportFinetuneRespectsSplit) {
  ingest();
  split();
  augment();
  ExportArgs ex;
  ex.store = store_;
  ex.ratings = fixture_.ratings;
  ex.out = dir_ / "ft";
  cmd_export_finetune(ex);
  const auto split = load_store_split(StoreLayout(store_));
  ASSERT_TRUE(split);
  const std::set<std::string> test_ids(split->test_ids.begin(), split->test_ids.end());
  std::size_t rows = 0;
  for (const auto& entry : fs::directory_iterator(dir_ / "ft")) {
    if (entry.path().extension() != ".jsonl") continue;
    const bool is_train = entry.path().filename().string().find("train") != std::string::npos;
    std::istringstream in(slurp(entry.path()));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      EXPECT_EQ(test_ids.count(j["record_id"].get<std::string>()) == 0, is_train) << line;
      ++rows;
    }
  }
  EXPECT_GT(rows, 0u);
}

TEST(WriteFileAtomic, ReplacesContent) {
  testing::TempDir dir;
  write_file_atomic(dir / "a.txt", "one");
  write_file_atomic(dir / "a.txt", "two");
  EXPECT_EQ(slurp(dir / "a.txt"), "two");
  EXPECT_EQ(file_sha256(dir / "a.txt"),
            "3fc4ccfe745870e2c0d99f71f30ff0656c8dedd41cc1d7d3d376b0dbe685e2f3");
}

}  // namespace
}  // namespace descbench
