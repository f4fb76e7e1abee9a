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

#include "descbench/pipeline.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <pthread.h>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "descbench/analysis.hpp"
#include "descbench/annotation.hpp"
#include "descbench/annotation_http.hpp"
#include "descbench/charts.hpp"
#include "descbench/csv.hpp"
#include "descbench/digest.hpp"
#include "descbench/error.hpp"
#include "descbench/generation.hpp"
#include "descbench/images.hpp"
#include "descbench/log.hpp"
#include "descbench/parallel.hpp"
#include "descbench/scoring.hpp"
#include "descbench/text.hpp"

namespace descbench {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string relative_to(const fs::path& path, const fs::path& base) {
  return fs::relative(path, base).generic_string();
}

std::optional<RunManifest> read_manifest(const StoreLayout& store, std::string_view stage) {
  const fs::path path = store.manifest(stage);
  if (!fs::exists(path)) return std::nullopt;
  return RunManifest::from_json(read_json_file(path));
}

void write_manifest(const StoreLayout& store, const RunManifest& m) {
  write_file_atomic(store.manifest(m.stage), m.to_json().dump(2) + "\n");
}

RunManifest start_manifest(const StoreLayout& store, std::string stage) {
  RunManifest m;
  m.stage = std::move(stage);
  m.tool_version = std::string(tool_version());
  if (fs::exists(store.corpus)) m.corpus_hash = file_sha256(store.corpus);
  if (auto split = load_store_split(store)) m.seeds["split"] = split->seed;
  return m;
}

void record_output(RunManifest& m, const fs::path& path, const fs::path& base) {
  m.outputs[relative_to(path, base)] = file_sha256(path);
}

// Augmentations must come from the current corpus and split.
void require_fresh_augmentations(const StoreLayout& store) {
  const auto m = read_manifest(store, "augment");
  if (!m) return;
  const std::string corpus_hash = file_sha256(store.corpus);
  const auto split = load_store_split(store);
  const auto seed_it = m->seeds.find("split");
  const bool split_matches =
      split ? (seed_it != m->seeds.end() && seed_it->second == split->seed)
            : seed_it == m->seeds.end();
  if (m->corpus_hash != corpus_hash || !split_matches) {
    throw PrerequisiteError(
        "augmentations are stale (corpus or split changed); run `descbench augment` again");
  }
}

std::vector<ScoreTarget> score_targets(const Corpus& corpus,
                                       std::span<const AugmentedRecord> augmented) {
  std::map<std::string_view, std::vector<const AugmentedRecord*>> by_base;
  for (const auto& a : augmented) {
    if (a.applicable) by_base[a.base_id].push_back(&a);
  }
  std::vector<ScoreTarget> targets;
  for (const auto& rec : corpus) {
    targets.push_back({&rec, std::nullopt});
    auto it = by_base.find(rec.record_id);
    if (it == by_base.end()) continue;
    auto list = it->second;
    std::sort(list.begin(), list.end(),
              [](const auto* a, const auto* b) { return a->kind < b->kind; });
    for (const auto* a : list) targets.push_back({&a->record, a->kind});
  }
  return targets;
}

MetricSpec parse_metric_arg(const std::string& arg) {
  constexpr std::string_view kBuiltin = "builtin:";
  if (arg.rfind(kBuiltin, 0) == 0) return builtin_metric(arg.substr(kBuiltin.size()));
  return MetricSpec::from_json(read_json_file(arg));
}

void consolidate_scores(const StoreLayout& store, std::span<const ScoreTarget> targets) {
  std::unordered_map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < targets.size(); ++i) order.emplace(targets[i].ref(), i);

  std::vector<std::string> metrics;
  if (fs::exists(store.scores_dir)) {
    for (const auto& entry : fs::directory_iterator(store.scores_dir)) {
      const std::string name = entry.path().filename().string();
      constexpr std::string_view kSuffix = ".metric.json";
      if (name.size() > kSuffix.size() &&
          name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
        metrics.push_back(name.substr(0, name.size() - kSuffix.size()));
      }
    }
  }
  std::sort(metrics.begin(), metrics.end());

  std::vector<ScoreRecord> all;
  for (const auto& metric : metrics) {
    auto rows = read_score_records(store.metric_scores(metric));
    std::size_t stale = 0;
    std::vector<std::pair<std::size_t, ScoreRecord>> keyed;
    for (auto& r : rows) {
      auto it = order.find(r.ref());
      if (it == order.end()) {
        ++stale;
        continue;
      }
      keyed.emplace_back(it->second, std::move(r));
    }
    if (stale > 0) {
      log_event(LogLevel::kWarn, "stale_scores_dropped", {{"metric_id", metric}, {"rows", stale}});
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, r] : keyed) all.push_back(std::move(r));
  }

  std::ostringstream jsonl, csv_out;
  for (const auto& r : all) jsonl << to_json(r).dump() << '\n';
  write_scores_csv(all, csv_out);
  write_file_atomic(store.scores_jsonl, jsonl.str());
  write_file_atomic(store.scores_csv, csv_out.str());
}

void write_text(const fs::path& path, const std::string& text, RunManifest& m,
                const fs::path& base) {
  write_file_atomic(path, text);
  record_output(m, path, base);
}

template <typename Fn>
std::string render(Fn fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

}  // namespace

std::string_view tool_version() { return DESCBENCH_VERSION; }

StoreLayout::StoreLayout(fs::path r)
    : root(std::move(r)),
      corpus(root / "corpus.jsonl"),
      ingest_info(root / "ingest.json"),
      split(root / "split.json"),
      augmented(root / "augmented.jsonl"),
      transcripts(root / "transcripts"),
      scores_dir(root / "scores"),
      scores_jsonl(root / "scores.jsonl"),
      scores_csv(root / "scores.csv"),
      events(root / "annotations" / "events.jsonl"),
      manifests(root / "manifests") {}

fs::path StoreLayout::manifest(std::string_view stage) const {
  return manifests / (std::string(stage) + ".json");
}
fs::path StoreLayout::metric_scores(std::string_view id) const {
  return scores_dir / (std::string(id) + ".jsonl");
}
fs::path StoreLayout::metric_spec(std::string_view id) const {
  return scores_dir / (std::string(id) + ".metric.json");
}
fs::path StoreLayout::metric_errors(std::string_view id) const {
  return scores_dir / (std::string(id) + ".errors.jsonl");
}

// --- manifest ---------------------------------------------------------------

namespace {

ordered_json manifest_body(const RunManifest& m) {
  ordered_json j;
  j["stage"] = m.stage;
  ordered_json seeds = ordered_json::object();
  for (const auto& [k, v] : m.seeds) seeds[k] = v;
  j["seeds"] = std::move(seeds);
  j["corpus_hash"] = m.corpus_hash;
  j["metric_configs"] = m.metric_configs;
  j["kinds"] = m.kinds;
  j["parameters"] = m.parameters;
  ordered_json outputs = ordered_json::object();
  for (const auto& [k, v] : m.outputs) outputs[k] = v;
  j["outputs"] = std::move(outputs);
  j["tool_version"] = m.tool_version;
  return j;
}

}  // namespace

std::string RunManifest::run_id() const {
  return sha256_hex(manifest_body(*this).dump()).substr(0, 16);
}

ordered_json RunManifest::to_json() const {
  ordered_json j;
  j["run_id"] = run_id();
  const ordered_json body = manifest_body(*this);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.stage = j.at("stage").get<std::string>();
    for (const auto& [k, v] : j.at("seeds").items()) m.seeds[k] = v.get<std::uint64_t>();
    m.corpus_hash = j.value("corpus_hash", std::string());
    for (const auto& c : j.value("metric_configs", json::array())) m.metric_configs.push_back(c);
    m.kinds = j.value("kinds", std::vector<std::string>());
    m.parameters = j.value("parameters", json::object());
    const json outputs = j.value("outputs", json::object());
    for (const auto& [k, v] : outputs.items()) {
      m.outputs[k] = v.get<std::string>();
    }
    m.tool_version = j.value("tool_version", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void require_stage(const fs::path& path, std::string_view command) {
  if (!fs::exists(path)) {
    throw PrerequisiteError(path.filename().string() + " not found in store; run `descbench " +
                            std::string(command) + "` first");
  }
}

std::optional<SplitAssignment> load_store_split(const StoreLayout& store) {
  if (!fs::exists(store.split)) return std::nullopt;
  return split_from_json(read_json_file(store.split));
}

Corpus load_store_corpus(const StoreLayout& store) {
  require_stage(store.corpus, "ingest");
  Corpus corpus = load_corpus(store.corpus);
  if (auto split = load_store_split(store)) corpus = apply_split(corpus, *split);
  return corpus;
}

fs::path store_image_root(const StoreLayout& store) {
  require_stage(store.ingest_info, "ingest");
  return read_json_file(store.ingest_info).at("image_root").get<std::string>();
}

std::vector<AugmentedRecord> load_store_augmented(const StoreLayout& store) {
  require_stage(store.augmented, "augment");
  std::ifstream in(store.augmented);
  if (!in) throw IoError("cannot read " + store.augmented.string());
  return read_augmented(in);
}

// --- commands ------------------------------------------------------------------

void cmd_ingest(const IngestArgs& args) {
  const StoreLayout store(args.store);
  Corpus corpus = ingest(args.data, args.image_root);
  RunManifest m;
  m.stage = "ingest";
  m.tool_version = std::string(tool_version());
  const fs::path image_root = fs::absolute(args.image_root).lexically_normal();
  m.parameters["source"] = fs::absolute(args.data).lexically_normal().string();
  m.parameters["image_root"] = image_root.string();
  m.parameters["records_read"] = corpus.size();
  if (args.identical_fraction) {
    if (!args.seed) throw ValidationError("--identical-fraction needs --seed");
    corpus = subsample_identical(corpus, *args.identical_fraction, *args.seed);
    m.seeds["ingest"] = *args.seed;
    m.parameters["identical_fraction"] = *args.identical_fraction;
  }
  fs::create_directories(store.root);
  write_file_atomic(store.corpus, render([&](std::ostream& o) { write_corpus(corpus, o); }));
  ordered_json info;
  info["image_root"] = image_root.string();
  info["records"] = corpus.size();
  info["identical_to_caption"] = corpus.identical_count();
  write_file_atomic(store.ingest_info, info.dump(2) + "\n");
  m.corpus_hash = file_sha256(store.corpus);
  record_output(m, store.corpus, store.root);
  record_output(m, store.ingest_info, store.root);
  write_manifest(store, m);
  log_event(LogLevel::kInfo, "ingested",
            {{"records", corpus.size()}, {"identical_to_caption", corpus.identical_count()}});
}

void cmd_split(const SplitArgs& args) {
  const StoreLayout store(args.store);
  require_stage(store.corpus, "ingest");
  const Corpus corpus = load_corpus(store.corpus);
  const SplitAssignment split = make_split(corpus, args.seed);
  write_file_atomic(store.split, to_json(split).dump(2) + "\n");
  RunManifest m = start_manifest(store, "split");
  m.seeds["split"] = args.seed;
  record_output(m, store.split, store.root);
  write_manifest(store, m);
  log_event(LogLevel::kInfo, "split",
            {{"train", split.train_ids.size()}, {"test", split.test_ids.size()}});
}

void cmd_augment(const AugmentArgs& args) {
  const StoreLayout store(args.store);
  const Corpus corpus = load_store_corpus(store);
  const fs::path image_root = store_image_root(store);

  AugmentOptions opts;
  opts.kinds = parse_kind_list(args.kinds);
  opts.seed = args.seed;
  opts.image_root = image_root;
  opts.jobs = args.jobs;

  const bool needs_provider = std::any_of(opts.kinds.begin(), opts.kinds.end(), [](auto k) {
    return k == AugmentationKind::kProperNameReplacement ||
           k == AugmentationKind::kFrequentAlignmentErrors ||
           k == AugmentationKind::kGpt2ContinuationShort ||
           k == AugmentationKind::kGpt2ContinuationLong;
  });
  std::unique_ptr<TranscriptProvider> provider;
  if (needs_provider) {
    provider = std::make_unique<TranscriptProvider>(store.transcripts,
                                                    make_generation_provider(args.provider));
    opts.provider = provider.get();
  }
  ObjectLibrary objects;
  if (std::find(opts.kinds.begin(), opts.kinds.end(), AugmentationKind::kFrankensteinImage) !=
      opts.kinds.end()) {
    objects = args.object_lib ? ObjectLibrary::load(*args.object_lib) : ObjectLibrary::builtin();
    opts.objects = &objects;
  }
  if (args.pool) {
    std::istringstream lines(read_file(*args.pool));
    for (std::string line; std::getline(lines, line);) {
      if (!trim(line).empty()) opts.pool.emplace_back(trim(line));
    }
  }

  const auto rows = augment_corpus(corpus, opts);
  write_file_atomic(store.augmented,
                    render([&](std::ostream& o) { write_augmented(rows, o); }));

  RunManifest m = start_manifest(store, "augment");
  m.seeds["augment"] = args.seed;
  for (auto k : opts.kinds) m.kinds.emplace_back(to_string(k));
  m.parameters["provider"] = args.provider;
  m.parameters["object_lib"] = args.object_lib ? args.object_lib->string() : "builtin";
  m.parameters["pool"] = args.pool ? args.pool->string() : "default";
  record_output(m, store.augmented, store.root);
  write_manifest(store, m);

  ordered_json applicable = ordered_json::object();
  for (auto k : opts.kinds) {
    applicable[std::string(to_string(k))] = std::count_if(
        rows.begin(), rows.end(), [k](const auto& r) { return r.kind == k && r.applicable; });
  }
  ordered_json fields{{"rows", rows.size()}, {"applicable", applicable}};
  if (provider) {
    fields["transcript_hits"] = provider->hits();
    fields["transcript_misses"] = provider->misses();
  }
  log_event(LogLevel::kInfo, "augmented", fields);
}

ScoreSummary cmd_score(const ScoreArgs& args) {
  const StoreLayout store(args.store);
  const Corpus corpus = load_store_corpus(store);
  const fs::path image_root = store_image_root(store);
  std::vector<AugmentedRecord> augmented;
  if (fs::exists(store.augmented)) {
    require_fresh_augmentations(store);
    augmented = load_store_augmented(store);
  } else {
    log_event(LogLevel::kWarn, "no_augmentations", {{"hint", "scoring originals only"}});
  }
  if (args.metrics.empty()) throw ValidationError("no --metric given");

  std::vector<MetricSpec> specs;
  std::set<std::string> ids;
  for (const auto& arg : args.metrics) {
    specs.push_back(parse_metric_arg(arg));
    if (!ids.insert(specs.back().metric_id).second) {
      throw ValidationError("metric_id '" + specs.back().metric_id + "' given twice");
    }
  }
  fs::create_directories(store.scores_dir);
  for (const auto& spec : specs) {
    const fs::path spec_path = store.metric_spec(spec.metric_id);
    if (fs::exists(spec_path)) {
      const MetricSpec previous = MetricSpec::from_json(read_json_file(spec_path));
      if (previous.config_hash() != spec.config_hash()) {
        throw ValidationError("metric '" + spec.metric_id + "' was scored with another config; remove " +
                              store.metric_scores(spec.metric_id).string() + " to re-score");
      }
    } else {
      write_file_atomic(spec_path, spec.to_json().dump(2) + "\n");
    }
  }

  const auto targets = score_targets(corpus, augmented);
  std::vector<ScoringRunResult> results(specs.size());
  std::vector<std::exception_ptr> crashes(specs.size());
  parallel_for(specs.size(), args.jobs, [&](std::size_t i) {
    const MetricSpec& spec = specs[i];
    try {
      auto scorer = make_scorer(spec);
      results[i] = run_scoring(spec, *scorer, targets, store.metric_scores(spec.metric_id),
                               image_root);
    } catch (...) {
      crashes[i] = std::current_exception();
    }
  });
  consolidate_scores(store, targets);

  ScoreSummary summary;
  RunManifest m = start_manifest(store, "score");
  if (auto aug = read_manifest(store, "augment")) {
    for (const auto& [k, v] : aug->seeds) m.seeds[k] = v;
    m.kinds = aug->kinds;
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    const auto& r = results[i];
    ordered_json cfg = spec.to_json();
    cfg["config_hash"] = spec.config_hash();
    m.metric_configs.push_back(cfg);
    summary.scored += r.scored;
    summary.skipped += r.skipped;
    summary.failed += r.errors.size();
    std::ostringstream errors;
    for (const auto& [ref, message] : r.errors) {
      errors << ordered_json{{"ref", ref}, {"error", message}}.dump() << '\n';
    }
    write_file_atomic(store.metric_errors(spec.metric_id), errors.str());
    ordered_json fields{{"metric_id", spec.metric_id},
                        {"scored", r.scored},
                        {"skipped", r.skipped},
                        {"failed", r.errors.size()}};
    if (crashes[i]) {
      try {
        std::rethrow_exception(crashes[i]);
      } catch (const std::exception& e) {
        fields["crash"] = e.what();
      }
    }
    log_event(crashes[i] || !r.errors.empty() ? LogLevel::kError : LogLevel::kInfo,
              "metric_scored", fields);
  }
  m.parameters["targets"] = targets.size();
  record_output(m, store.scores_jsonl, store.root);
  record_output(m, store.scores_csv, store.root);
  write_manifest(store, m);

  for (const auto& crash : crashes) {
    if (crash) std::rethrow_exception(crash);
  }
  if (summary.failed > 0) {
    throw AdapterError(std::to_string(summary.failed) +
                       " records failed to score; see scores/*.errors.jsonl and re-run to retry");
  }
  return summary;
}

std::optional<std::vector<RatingRecord>> load_pipeline_ratings(
    const StoreLayout& store, const std::optional<fs::path>& file) {
  if (file) return load_ratings(*file);
  if (!fs::exists(store.events)) return std::nullopt;
  const AnnotationService replay(load_store_corpus(store), store_image_root(store),
                                 default_questions(), store.events, 0);
  return replay.ratings();
}

void cmd_evaluate(const EvaluateArgs& args) {
  const StoreLayout store(args.store);
  const Corpus corpus = load_store_corpus(store);
  require_stage(store.scores_jsonl, "score");
  std::vector<AugmentedRecord> augmented;
  if (fs::exists(store.augmented)) {
    require_fresh_augmentations(store);
    augmented = load_store_augmented(store);
  }
  const ScoreTable scores(read_score_records(store.scores_jsonl));
  if (scores.metrics().empty()) {
    throw PrerequisiteError("scores.jsonl is empty; run `descbench score` first");
  }
  const auto split = load_store_split(store);
  const fs::path report = args.report;
  fs::create_directories(report);

  RunManifest m = start_manifest(store, "evaluate");
  if (auto sm = read_manifest(store, "score")) {
    for (const auto& [k, v] : sm->seeds) m.seeds[k] = v;
    m.metric_configs = sm->metric_configs;
    m.kinds = sm->kinds;
  }
  m.seeds["evaluate"] = args.seed;
  m.parameters["same_tol"] = args.same_tol;
  m.parameters["resamples"] = args.resamples;
  m.parameters["scores_sha256"] = file_sha256(store.scores_jsonl);

  auto rates = pass_rates(scores, augmented, args.same_tol);
  if (split) {
    auto test = pass_rates(scores, augmented, args.same_tol, Split::kTest);
    rates.insert(rates.end(), test.begin(), test.end());
  }
  write_text(report / "pass_rates.csv", render([&](auto& o) { write_pass_rates_csv(rates, o); }),
             m, report);
  write_text(report / "pass_rates.svg", pass_rate_chart_svg(rates), m, report);

  const auto avg = average_scores(scores, corpus, augmented, args.seed, args.resamples,
                                  kDefaultLevel, args.jobs);
  write_text(report / "avg_scores.csv", render([&](auto& o) { write_avg_scores_csv(avg, o); }),
             m, report);
  write_text(report / "avg_scores.svg", avg_scores_chart_svg(avg), m, report);

  if (scores.metrics().size() >= 2) {
    const auto cross = cross_metric_matrix(scores);
    write_text(report / "cross_metric.csv",
               render([&](auto& o) { write_cross_metric_csv(cross, o); }), m, report);
    write_text(report / "cross_metric.svg", cross_metric_chart_svg(cross), m, report);
  } else {
    log_event(LogLevel::kWarn, "cross_metric_skipped", {{"reason", "fewer than 2 metrics"}});
  }

  if (const auto ratings = load_pipeline_ratings(store, args.ratings)) {
    std::set<std::string> identical;
    for (const auto& rec : corpus) {
      if (rec.identical_to_caption) identical.insert(rec.record_id);
    }
    const auto verdicts = compute_exclusions(*ratings, identical);
    const auto valid = valid_records(*ratings, verdicts);
    const auto agg = aggregate_ratings(valid);
    m.parameters["ratings"] = ratings->size();

    const auto cells = correlation_table(scores, corpus, agg);
    write_text(report / "correlations.csv",
               render([&](auto& o) { write_correlations_csv(cells, o); }), m, report);
    write_text(report / "correlations.svg", correlation_chart_svg(cells), m, report);
    const auto gaps = prepost_gap_analysis(scores, corpus, agg);
    write_text(report / "prepost_gaps.csv", render([&](auto& o) { write_prepost_csv(gaps, o); }),
               m, report);
    const auto props = dataset_property_report(corpus, valid);
    write_text(report / "dataset_properties.csv",
               render([&](auto& o) { write_dataset_properties_csv(props, o); }), m, report);
    std::ostringstream ex;
    csv::row(ex, {"participant_id", "excluded", "passed", "reason"});
    for (const auto& v : verdicts) {
      csv::row(ex, {v.participant_id, v.excluded ? "true" : "false", v.passed ? "true" : "false",
                    v.reason});
    }
    write_text(report / "exclusions.csv", ex.str(), m, report);
  } else {
    log_event(LogLevel::kWarn, "ratings_missing",
              {{"skipped", {"correlations", "prepost_gaps", "dataset_properties"}}});
  }

  write_file_atomic(report / "manifest.json", m.to_json().dump(2) + "\n");
  write_manifest(store, m);
  log_event(LogLevel::kInfo, "evaluated",
            {{"report", report.string()}, {"files", m.outputs.size()}, {"run_id", m.run_id()}});
}

void cmd_serve(const ServeArgs& args) {
  const StoreLayout store(args.store);
  const auto questions = args.questions ? load_questions(*args.questions) : default_questions();
  AnnotationService service(load_store_corpus(store), store_image_root(store), questions,
                            store.events, args.seed);
  AnnotationServer server(service);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  int port = args.port;
  if (port == 0) {
    port = server.bind_to_any_port(args.host);
    if (port < 0) throw IoError("cannot bind " + args.host);
  } else if (!server.bind(args.host, port)) {
    throw IoError("cannot bind " + args.host + ":" + std::to_string(port));
  }
  std::thread([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  }).detach();
  log_event(LogLevel::kInfo, "serving",
            {{"host", args.host}, {"port", port}, {"coverage_complete", service.coverage().complete}});
  if (!server.listen_after_bind()) throw IoError("server socket error");
  log_event(LogLevel::kInfo, "stopped", {{"coverage", service.coverage().satisfied()}});
}

void cmd_export_finetune(const ExportArgs& args) {
  const StoreLayout store(args.store);
  require_stage(store.corpus, "ingest");
  Corpus corpus = load_corpus(store.corpus);
  SplitAssignment split;
  if (auto stored = load_store_split(store)) {
    if (args.split_seed && *args.split_seed != stored->seed) {
      throw ValidationError("store split uses seed " + std::to_string(stored->seed) +
                            ", not " + std::to_string(*args.split_seed) +
                            "; run `descbench split` and `descbench augment` again");
    }
    split = *stored;
  } else {
    if (!args.split_seed) {
      throw PrerequisiteError("no split in store; pass --split-seed or run `descbench split`");
    }
    split = make_split(corpus, *args.split_seed);
  }
  corpus = apply_split(corpus, split);
  const auto augmented = load_store_augmented(store);

  AggregatedRatings agg;
  if (const auto ratings = load_pipeline_ratings(store, args.ratings)) {
    std::set<std::string> identical;
    for (const auto& rec : corpus) {
      if (rec.identical_to_caption) identical.insert(rec.record_id);
    }
    agg = aggregate_ratings(valid_records(*ratings, compute_exclusions(*ratings, identical)));
  } else {
    log_event(LogLevel::kWarn, "ratings_missing", {{"skipped", "regression rows"}});
  }

  const FinetuneExport out = export_finetune_pairs(corpus, augmented, agg, split);
  auto dump = [](const std::vector<ordered_json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    return s;
  };
  RunManifest m = start_manifest(store, "export_finetune");
  m.seeds["split"] = split.seed;
  if (auto aug = read_manifest(store, "augment")) {
    if (aug->seeds.count("augment")) m.seeds["augment"] = aug->seeds.at("augment");
    m.kinds = aug->kinds;
  }
  m.parameters["train_regression"] = out.train_regression;
  m.parameters["train_contrast"] = out.train_contrast;
  m.parameters["eval_regression"] = out.eval_regression;
  m.parameters["eval_contrast"] = out.eval_contrast;
  write_text(args.out / "finetune_train.jsonl", dump(out.train), m, args.out);
  write_text(args.out / "finetune_eval.jsonl", dump(out.eval), m, args.out);
  write_file_atomic(args.out / "manifest.json", m.to_json().dump(2) + "\n");
  write_manifest(store, m);
  log_event(LogLevel::kInfo, "exported", m.parameters);
}

}  // namespace descbench
