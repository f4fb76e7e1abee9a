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

#ifndef DESCBENCH_PIPELINE_HPP_
#define DESCBENCH_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "descbench/augment.hpp"
#include "descbench/dataset.hpp"
#include "descbench/ratings.hpp"
#include "json.hpp"

namespace descbench {

std::string_view tool_version();

/// File locations inside a pipeline store directory.
struct StoreLayout {
  explicit StoreLayout(std::filesystem::path root);

  std::filesystem::path root;
  std::filesystem::path corpus;        // corpus.jsonl
  std::filesystem::path ingest_info;   // ingest.json
  std::filesystem::path split;         // split.json
  std::filesystem::path augmented;     // augmented.jsonl
  std::filesystem::path transcripts;   // transcripts/
  std::filesystem::path scores_dir;    // scores/<metric>.jsonl
  std::filesystem::path scores_jsonl;  // scores.jsonl (all metrics)
  std::filesystem::path scores_csv;    // scores.csv
  std::filesystem::path events;        // annotations/events.jsonl
  std::filesystem::path manifests;     // manifests/<stage>.json

  std::filesystem::path manifest(std::string_view stage) const;
  std::filesystem::path metric_scores(std::string_view metric_id) const;
  std::filesystem::path metric_spec(std::string_view metric_id) const;
  std::filesystem::path metric_errors(std::string_view metric_id) const;
};

/// Provenance of one stage's outputs. The run id hashes everything else, so
/// equal manifests mean equal inputs.
struct RunManifest {
  std::string stage;
  std::map<std::string, std::uint64_t> seeds;
  std::string corpus_hash;
  std::vector<nlohmann::ordered_json> metric_configs;
  std::vector<std::string> kinds;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::map<std::string, std::string> outputs;  // path relative to store -> sha256
  std::string tool_version;

  std::string run_id() const;
  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string file_sha256(const std::filesystem::path& path);
/// Writes through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Throws PrerequisiteError naming `command` when `path` is missing.
void require_stage(const std::filesystem::path& path, std::string_view command);

/// Loaded corpus with the split tags applied when a split exists.
Corpus load_store_corpus(const StoreLayout& store);
std::filesystem::path store_image_root(const StoreLayout& store);
std::optional<SplitAssignment> load_store_split(const StoreLayout& store);
std::vector<AugmentedRecord> load_store_augmented(const StoreLayout& store);

struct IngestArgs {
  std::filesystem::path data;
  std::filesystem::path image_root;
  std::filesystem::path store;
  std::optional<double> identical_fraction;  // subsample when set
  std::optional<std::uint64_t> seed;         // required with identical_fraction
};
void cmd_ingest(const IngestArgs& args);

struct SplitArgs {
  std::filesystem::path store;
  std::uint64_t seed = 0;
};
void cmd_split(const SplitArgs& args);

struct AugmentArgs {
  std::filesystem::path store;
  std::string kinds = "all";
  std::uint64_t seed = 0;
  std::string provider = "stub";  // stub, replay, exec:CMD or http://...
  std::optional<std::filesystem::path> object_lib;
  std::optional<std::filesystem::path> pool;  // ten lines
  std::size_t jobs = 1;
};
void cmd_augment(const AugmentArgs& args);

struct ScoreArgs {
  std::filesystem::path store;
  std::vector<std::string> metrics;  // config file paths or builtin:NAME
  std::size_t jobs = 1;
};
struct ScoreSummary {
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};
/// Throws AdapterError when any record failed; completed rows stay on disk
/// and a re-run scores only the missing ones.
ScoreSummary cmd_score(const ScoreArgs& args);

struct EvaluateArgs {
  std::filesystem::path store;
  std::optional<std::filesystem::path> ratings;
  std::filesystem::path report;
  double same_tol = 1e-9;
  std::uint64_t seed = 0;
  std::size_t resamples = 10000;
  std::size_t jobs = 1;
};
void cmd_evaluate(const EvaluateArgs& args);

struct ServeArgs {
  std::filesystem::path store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> questions;
  std::uint64_t seed = 0;
};
/// Blocks until SIGINT or SIGTERM.
void cmd_serve(const ServeArgs& args);

struct ExportArgs {
  std::filesystem::path store;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::filesystem::path> ratings;
  std::filesystem::path out;
};
void cmd_export_finetune(const ExportArgs& args);

/// Ratings from an explicit file, else from the store's annotation log, else
/// nothing.
std::optional<std::vector<RatingRecord>> load_pipeline_ratings(
    const StoreLayout& store, const std::optional<std::filesystem::path>& file);

}  // namespace descbench

#endif  // DESCBENCH_PIPELINE_HPP_
