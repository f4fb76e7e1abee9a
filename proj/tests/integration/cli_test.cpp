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


#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"

namespace {

namespace fs = std::filesystem;
using descbench::testing::slurp;
using descbench::testing::spit;
using descbench::testing::TempDir;

const std::string kCli = DESCBENCH_CLI_PATH;
const std::string kAdapter = MOCK_ADAPTER_PATH;

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI and returns its exit status.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = quote(kCli) + " " + args + " >" + quote(log.string() + ".out") +
                          " 2>" + quote(log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const fs::path& p) {
  const std::string text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(cli("make-fixture --out " + quote(fx().string()) + " --records 12 --seed 4"), 0);
    ASSERT_EQ(cli("ingest --data " + quote((fx() / "dataset.jsonl").string()) + " --image-root " +
                  quote(fx().string()) + " --out " + quote(store().string())),
              0);
  }

  int cli(const std::string& args) { return run(args, dir_ / "log"); }
  fs::path fx() const { return dir_ / "fixture"; }
  fs::path store() const { return dir_ / "store"; }
  std::string s() const { return " --store " + quote(store().string()); }

  TempDir dir_{"cli"};
};

TEST_F(CliTest, FullPipelineWritesReport) {
  ASSERT_EQ(cli("split" + s() + " --seed 1"), 0);
  ASSERT_EQ(cli("augment" + s() + " --seed 2"), 0);
  EXPECT_EQ(line_count(store() / "augmented.jsonl"), 120u);
  ASSERT_EQ(cli("score" + s() + " --metric builtin:mock_bagofwords --metric builtin:mock_lengthprior"),
            0);
  const fs::path report = dir_ / "report";
  ASSERT_EQ(cli("evaluate" + s() + " --ratings " + quote((fx() / "ratings.jsonl").string()) +
                " --report " + quote(report.string()) + " --seed 3 --resamples 300"),
            0);
  for (const char* f : {"pass_rates.csv", "pass_rates.svg", "avg_scores.csv", "cross_metric.csv",
                        "correlations.csv", "correlations.svg", "prepost_gaps.csv",
                        "dataset_properties.csv", "exclusions.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(report / f)) << f;
  }
  EXPECT_NE(slurp(report / "pass_rates.csv").find("mock_lengthprior,exact_repetition,all,12,0,0,1"),
            std::string::npos);

  const std::string scores = slurp(store() / "scores.jsonl");
  const std::string pass = slurp(report / "pass_rates.csv");
  ASSERT_EQ(cli("augment" + s() + " --seed 2"), 0);
  ASSERT_EQ(cli("score" + s() + " --metric builtin:mock_bagofwords --metric builtin:mock_lengthprior"),
            0);
  ASSERT_EQ(cli("evaluate" + s() + " --ratings " + quote((fx() / "ratings.jsonl").string()) +
                " --report " + quote(report.string()) + " --seed 3 --resamples 300"),
            0);
  EXPECT_EQ(slurp(store() / "scores.jsonl"), scores);
  EXPECT_EQ(slurp(report / "pass_rates.csv"), pass);

  ASSERT_EQ(cli("export-finetune" + s() + " --ratings " +
                quote((fx() / "ratings.jsonl").string()) + " --out " +
                quote((dir_ / "ft").string())),
            0);
  EXPECT_GT(line_count(dir_ / "ft" / "finetune_train.jsonl"), 0u);
}

TEST_F(CliTest, SingleKind) {
  ASSERT_EQ(cli("augment" + s() + " --kinds exact_repetition --seed 2"), 0);
  EXPECT_EQ(line_count(store() / "augmented.jsonl"), 12u);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli("split" + s()), 2);                       // missing seed
  EXPECT_EQ(cli("augment" + s() + " --kinds nonsense --seed 1"), 2);
  EXPECT_EQ(cli("score --store " + quote((dir_ / "empty").string()) +
                " --metric builtin:mock_bagofwords"),
            4);
  EXPECT_EQ(cli("evaluate --store " + quote((dir_ / "empty").string()) + " --report " +
                quote((dir_ / "r").string()) + " --seed 1"),
            4);
  ASSERT_EQ(cli("augment" + s() + " --kinds exact_repetition --seed 2"), 0);
  EXPECT_EQ(cli("score" + s() + " --metric " + quote((dir_ / "missing.json").string())), 2);
  const fs::path spec = dir_ / "broken.json";
  spit(spec, R"({"metric_id":"broken","family":"similarity","transport":"subprocess_stream",)"
             R"("command":["/nonexistent/adapter"]})");
  EXPECT_EQ(cli("score" + s() + " --metric " + quote(spec.string())), 3);
  EXPECT_EQ(cli("--version"), 0);
  EXPECT_EQ(cli("no-such-command"), 2);
}

TEST_F(CliTest, RemoteCrashResumesMissingRowsOnly) {
  ASSERT_EQ(cli("split" + s() + " --seed 1"), 0);
  ASSERT_EQ(cli("augment" + s() + " --kinds exact_repetition,shuffled_words --seed 2"), 0);
  const fs::path marker = dir_ / "crashed";
  const fs::path spec = dir_ / "remote.json";
  std::ostringstream j;
  j << R"({"metric_id":"remote","family":"similarity","transport":"subprocess_stream","command":[)"
    << '"' << kAdapter << R"(","--scorer","mock_bagofwords","--image-root",")" << fx().string()
    << R"(","--crash-after","10","--crash-marker",")" << marker.string() << R"("]})";
  spit(spec, j.str());
  EXPECT_EQ(cli("score" + s() + " --metric " + quote(spec.string())), 3);
  const fs::path sink = store() / "scores" / "remote.jsonl";
  EXPECT_EQ(line_count(sink), 10u);
  EXPECT_EQ(cli("score" + s() + " --metric " + quote(spec.string())), 0);
  EXPECT_EQ(line_count(sink), 36u);
  EXPECT_NE(slurp(dir_ / "log.out").find("scored 26, already present 10"), std::string::npos)
      << slurp(dir_ / "log.out");
  ASSERT_EQ(cli("score" + s() + " --metric builtin:mock_bagofwords"), 0);
  // The remote adapter and the builtin agree row for row.
  std::istringstream a(slurp(sink)), b(slurp(store() / "scores" / "mock_bagofwords.jsonl"));
  std::string la, lb;
  std::size_t compared = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    const auto sa = la.substr(la.find("\"record_id\""));
    const auto sb = lb.substr(lb.find("\"record_id\""));
    EXPECT_EQ(sa, sb);
    ++compared;
  }
  EXPECT_EQ(compared, 36u);
}

}  // namespace
