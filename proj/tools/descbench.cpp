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


#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "descbench/error.hpp"
#include "descbench/fixture.hpp"
#include "descbench/images.hpp"
#include "descbench/log.hpp"
#include "descbench/parallel.hpp"
#include "descbench/pipeline.hpp"

namespace fs = std::filesystem;
using namespace descbench;

namespace {

// CLI11 cannot bind std::optional<path> directly, so optional flags go
// through these holders.
struct OptionalPath {
  std::string value;
  CLI::Option* option = nullptr;
  std::optional<fs::path> get() const {
    if (option == nullptr || option->count() == 0) return std::nullopt;
    return fs::path(value);
  }
};

OptionalPath add_optional_path(CLI::App* app, const std::string& name, const std::string& help) {
  OptionalPath p;
  p.option = app->add_option(name, p.value, help);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"descbench: benchmark for image description metrics"};
  app.set_config("--config", "", "TOML or INI file with option defaults; flags win");
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}))
      ->capture_default_str();
  const std::size_t jobs_default = default_jobs();

  // ingest
  IngestArgs ingest;
  std::string ingest_data, ingest_root, ingest_out;
  double identical_fraction = 0;
  std::uint64_t ingest_seed = 0;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a dataset file and copy it into a store");
  c_ingest->add_option("--data", ingest_data, "dataset.jsonl")->required();
  c_ingest->add_option("--image-root", ingest_root, "directory that image_ref paths resolve against")
      ->required();
  c_ingest->add_option("--out", ingest_out, "store directory")->required();
  auto* o_frac = c_ingest->add_option("--identical-fraction", identical_fraction,
                                      "subsample so this fraction of descriptions equal captions")
                     ->check(CLI::Range(0.0, 1.0));
  auto* o_ingest_seed = c_ingest->add_option("--seed", ingest_seed, "subsampling seed");
  o_frac->needs(o_ingest_seed);

  // split
  SplitArgs split;
  std::string split_store;
  auto* c_split = app.add_subcommand("split", "Assign records to train and test");
  c_split->add_option("--store", split_store)->required();
  c_split->add_option("--seed", split.seed)->required();

  // augment
  AugmentArgs augment;
  std::string augment_store;
  augment.jobs = jobs_default;
  auto* c_augment = app.add_subcommand("augment", "Generate augmented descriptions and images");
  c_augment->add_option("--store", augment_store)->required();
  c_augment->add_option("--kinds", augment.kinds, "comma separated kinds, or all")
      ->capture_default_str();
  c_augment->add_option("--seed", augment.seed)->required();
  c_augment->add_option("--provider", augment.provider, "stub, replay, exec:CMD or http://HOST:PORT")
      ->capture_default_str();
  auto augment_objects = add_optional_path(c_augment, "--object-lib", "directory of RGBA cutouts");
  auto augment_pool = add_optional_path(c_augment, "--pool", "file with ten candidate sentences");
  c_augment->add_option("--jobs", augment.jobs)->check(CLI::PositiveNumber)->capture_default_str();

  // score
  ScoreArgs score;
  std::string score_store;
  score.jobs = jobs_default;
  auto* c_score = app.add_subcommand("score", "Score originals and augmentations with metrics");
  c_score->add_option("--store", score_store)->required();
  c_score->add_option("--metric", score.metrics, "metric config file or builtin:NAME")
      ->required()
      ->take_all();
  c_score->add_option("--jobs", score.jobs, "metrics scored concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // evaluate
  EvaluateArgs evaluate;
  std::string evaluate_store, evaluate_report;
  evaluate.jobs = jobs_default;
  auto* c_evaluate = app.add_subcommand("evaluate", "Write analysis tables and charts");
  c_evaluate->add_option("--store", evaluate_store)->required();
  auto evaluate_ratings = add_optional_path(c_evaluate, "--ratings", "ratings.jsonl");
  c_evaluate->add_option("--report", evaluate_report, "output directory")->required();
  c_evaluate->add_option("--same-tol", evaluate.same_tol)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_evaluate->add_option("--seed", evaluate.seed, "bootstrap seed")->required();
  c_evaluate->add_option("--resamples", evaluate.resamples)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_evaluate->add_option("--jobs", evaluate.jobs)->check(CLI::PositiveNumber)->capture_default_str();

  // serve
  ServeArgs serve;
  std::string serve_store;
  auto* c_serve = app.add_subcommand("serve", "Run the annotation service");
  c_serve->add_option("--store", serve_store)->required();
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port, "0 picks a free port")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  auto serve_questions = add_optional_path(c_serve, "--questions", "questions JSON");
  c_serve->add_option("--seed", serve.seed, "session assignment seed")->required();

  // export-finetune
  ExportArgs exporter;
  std::string export_store, export_out;
  std::uint64_t export_split_seed = 0;
  auto* c_export = app.add_subcommand("export-finetune", "Write fine-tuning pairs per split");
  c_export->add_option("--store", export_store)->required();
  auto* o_export_seed = c_export->add_option("--split-seed", export_split_seed);
  auto export_ratings = add_optional_path(c_export, "--ratings", "ratings.jsonl");
  c_export->add_option("--out", export_out)->required();

  // make-fixture
  FixtureOptions fixture;
  std::string fixture_out;
  auto* c_fixture = app.add_subcommand("make-fixture", "Write a synthetic corpus, images and ratings");
  c_fixture->add_option("--out", fixture_out)->required();
  c_fixture->add_option("--records", fixture.records)
      ->check(CLI::Range(std::size_t{5}, std::size_t{100000}))
      ->capture_default_str();
  c_fixture->add_option("--seed", fixture.seed)->required();
  c_fixture->add_option("--identical-fraction", fixture.identical_fraction)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  bool no_ratings = false;
  c_fixture->add_flag("--no-ratings", no_ratings);

  // objects
  std::string objects_out;
  auto* c_objects = app.add_subcommand("objects", "Save the built-in object library as PNG files");
  c_objects->add_option("--out", objects_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code_for(ErrorCode::kValidation);
  }

  set_log_level(log_level == "debug"  ? LogLevel::kDebug
                : log_level == "warn"  ? LogLevel::kWarn
                : log_level == "error" ? LogLevel::kError
                                       : LogLevel::kInfo);
  try {
    if (c_ingest->parsed()) {
      ingest.data = ingest_data;
      ingest.image_root = ingest_root;
      ingest.store = ingest_out;
      if (o_frac->count() > 0) ingest.identical_fraction = identical_fraction;
      if (o_ingest_seed->count() > 0) ingest.seed = ingest_seed;
      cmd_ingest(ingest);
    } else if (c_split->parsed()) {
      split.store = split_store;
      cmd_split(split);
    } else if (c_augment->parsed()) {
      augment.store = augment_store;
      augment.object_lib = augment_objects.get();
      augment.pool = augment_pool.get();
      cmd_augment(augment);
    } else if (c_score->parsed()) {
      score.store = score_store;
      const auto summary = cmd_score(score);
      std::cout << "scored " << summary.scored << ", already present " << summary.skipped << "\n";
    } else if (c_evaluate->parsed()) {
      evaluate.store = evaluate_store;
      evaluate.report = evaluate_report;
      evaluate.ratings = evaluate_ratings.get();
      cmd_evaluate(evaluate);
    } else if (c_serve->parsed()) {
      serve.store = serve_store;
      serve.questions = serve_questions.get();
      cmd_serve(serve);
    } else if (c_export->parsed()) {
      exporter.store = export_store;
      exporter.out = export_out;
      exporter.ratings = export_ratings.get();
      if (o_export_seed->count() > 0) exporter.split_seed = export_split_seed;
      cmd_export_finetune(exporter);
    } else if (c_fixture->parsed()) {
      fixture.ratings = !no_ratings;
      const auto summary = make_fixture(fixture_out, fixture);
      log_event(LogLevel::kInfo, "fixture",
                {{"dataset", summary.dataset.string()},
                 {"image_root", summary.image_root.string()},
                 {"ratings", summary.ratings.string()},
                 {"records", summary.records},
                 {"identical", summary.identical},
                 {"rating_rows", summary.rating_rows}});
    } else if (c_objects->parsed()) {
      ObjectLibrary::builtin().save(objects_out);
    }
  } catch (const Error& e) {
    log_event(LogLevel::kError, "failed", {{"error", e.what()}});
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log_event(LogLevel::kError, "failed", {{"error", e.what()}});
    return 1;
  }
  return 0;
}
