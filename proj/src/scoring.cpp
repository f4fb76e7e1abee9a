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

#include "descbench/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "descbench/csv.hpp"
#include "descbench/digest.hpp"
#include "descbench/error.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"
#include "descbench/transport.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view name, const std::string_view (&names)[N],
               std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

constexpr std::string_view kFamilyNames[] = {"similarity", "likelihood"};
constexpr std::string_view kTransportNames[] = {"subprocess_stream", "http", "builtin"};
constexpr std::string_view kContextModeNames[] = {"none", "contextual"};
constexpr std::string_view kPromptModeNames[] = {"text_if_good", "good_if_text"};
constexpr std::string_view kAggregationNames[] = {"mean_token_loglik",
                                                  "sum_token_loglik", "target_only"};
constexpr std::string_view kPayloadNames[] = {"auto", "path", "inline"};
constexpr std::string_view kBuiltinScorers[] = {"mock_bagofwords", "mock_lengthprior"};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::string_view (&names)[N]) {
  return names[static_cast<std::size_t>(v)];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_vectors(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("embedding dimensions differ: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw ValidationError("empty embedding");
}

std::vector<double> normalized(std::span<const double> v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw ValidationError("zero embedding vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

constexpr std::size_t kMockDim = 32;

// Pseudo-embedding in [-1, 1]^kMockDim keyed by `label`.
std::array<double, kMockDim> hash_embedding(std::string_view label) {
  std::array<double, kMockDim> v{};
  const std::uint64_t h = fnv1a(label);
  for (std::size_t k = 0; k < kMockDim; ++k) {
    const std::uint64_t x = mix64(h + 0x9e3779b97f4a7c15ULL * (k + 1));
    v[k] = static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;
  }
  return v;
}

std::vector<std::string_view> sorted_tokens(std::string_view text) {
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  return tokens;
}

const json& require(const json& j, std::string_view key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError("message lacks '" + std::string(key) + "'");
  return *it;
}

}  // namespace

std::string_view to_string(MetricFamily v) { return name_of(v, kFamilyNames); }
std::string_view to_string(PromptMode v) { return name_of(v, kPromptModeNames); }
std::string_view to_string(Aggregation v) { return name_of(v, kAggregationNames); }

ordered_json MetricSpec::to_json() const {
  ordered_json j;
  j["metric_id"] = metric_id;
  j["family"] = name_of(family, kFamilyNames);
  j["transport"] = name_of(transport, kTransportNames);
  switch (transport) {
    case ScorerTransport::kSubprocessStream:
      j["command"] = command;
      break;
    case ScorerTransport::kHttp:
      j["endpoint"] = endpoint;
      break;
    case ScorerTransport::kBuiltin:
      j["builtin"] = builtin;
      break;
  }
  j["context_mode"] = name_of(context_mode, kContextModeNames);
  if (prompt_mode) j["prompt_mode"] = name_of(*prompt_mode, kPromptModeNames);
  if (aggregation) j["aggregation"] = name_of(*aggregation, kAggregationNames);
  j["context_policy"] = context_policy.to_json();
  j["image_payload"] = name_of(image_payload, kPayloadNames);
  return j;
}

MetricSpec MetricSpec::from_json(const json& j) {
  MetricSpec s;
  try {
    s.metric_id = j.at("metric_id").get<std::string>();
    s.family = enum_from<MetricFamily>(j.at("family").get<std::string>(), kFamilyNames,
                                       "metric family");
    s.transport = enum_from<ScorerTransport>(
        j.value("transport", std::string("subprocess_stream")), kTransportNames,
        "transport");
    if (j.contains("command")) {
      s.command = j["command"].is_string()
                      ? split_command(j["command"].get<std::string>())
                      : j["command"].get<std::vector<std::string>>();
    }
    s.endpoint = j.value("endpoint", std::string());
    s.builtin = j.value("builtin", std::string());
    s.context_mode = enum_from<ContextMode>(j.value("context_mode", std::string("none")),
                                            kContextModeNames, "context mode");
    if (j.contains("prompt_mode")) {
      s.prompt_mode = enum_from<PromptMode>(j["prompt_mode"].get<std::string>(),
                                            kPromptModeNames, "prompt mode");
    }
    if (j.contains("aggregation")) {
      s.aggregation = enum_from<Aggregation>(j["aggregation"].get<std::string>(),
                                             kAggregationNames, "aggregation");
    }
    if (j.contains("context_policy")) {
      s.context_policy = ContextPolicy::from_json(j["context_policy"]);
    }
    s.image_payload = enum_from<ImagePayload>(j.value("image_payload", std::string("auto")),
                                              kPayloadNames, "image payload");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed metric config: ") + e.what());
  }
  if (s.metric_id.empty()) throw ValidationError("metric_id is empty");
  if (s.family == MetricFamily::kSimilarity) {
    if (s.prompt_mode || s.aggregation) {
      throw ValidationError("metric '" + s.metric_id +
                            "': prompt_mode/aggregation apply to the likelihood family only");
    }
  } else {
    if (!s.prompt_mode) s.prompt_mode = PromptMode::kTextIfGood;
    if (!s.aggregation) s.aggregation = Aggregation::kMeanTokenLoglik;
  }
  switch (s.transport) {
    case ScorerTransport::kSubprocessStream:
      if (s.command.empty()) {
        throw ValidationError("metric '" + s.metric_id + "' needs a command");
      }
      break;
    case ScorerTransport::kHttp:
      if (s.endpoint.empty()) {
        throw ValidationError("metric '" + s.metric_id + "' needs an endpoint");
      }
      break;
    case ScorerTransport::kBuiltin:
      if (std::find(std::begin(kBuiltinScorers), std::end(kBuiltinScorers), s.builtin) ==
          std::end(kBuiltinScorers)) {
        throw ValidationError("unknown builtin scorer '" + s.builtin + "'");
      }
      break;
  }
  return s;
}

std::string MetricSpec::config_hash() const { return sha256_hex(to_json().dump()); }

MetricSpec builtin_metric(std::string_view name) {
  json j;
  j["metric_id"] = name;
  j["transport"] = "builtin";
  j["builtin"] = name;
  j["family"] = name == "mock_lengthprior" ? "likelihood" : "similarity";
  return MetricSpec::from_json(j);
}

// --- wire messages ----------------------------------------------------------

std::string serialize(const ScoreRequest& r) {
  ordered_json j;
  j["type"] = "score";
  j["request_id"] = r.request_id;
  ordered_json image = ordered_json::object();
  if (r.image.path) image["path"] = *r.image.path;
  if (r.image.inline_b64) image["inline_b64"] = *r.image.inline_b64;
  j["image"] = std::move(image);
  j["description"] = r.description;
  if (r.context) j["context"] = *r.context;
  if (r.prompt) {
    j["prompt"] = {{"base_text", r.prompt->base_text},
                   {"target_text", r.prompt->target_text}};
  }
  return j.dump();
}

std::string serialize(const ScoreResponse& r) {
  ordered_json j;
  j["type"] = "result";
  j["request_id"] = r.request_id;
  if (r.score) j["score"] = *r.score;
  if (r.diagnostics) {
    ordered_json d;
    d["token_logliks"] = r.diagnostics->token_logliks;
    if (r.diagnostics->target_start) d["target_start"] = *r.diagnostics->target_start;
    ordered_json parts = ordered_json::object();
    for (const auto& [k, v] : r.diagnostics->parts) parts[k] = v;
    d["parts"] = std::move(parts);
    j["diagnostics"] = std::move(d);
  }
  return j.dump();
}

ScoreRequest parse_score_request(std::string_view line) {
  const json j = parse_message(line, "score");
  try {
    ScoreRequest r;
    r.request_id = require(j, "request_id").get<std::string>();
    const json& image = require(j, "image");
    if (image.contains("path")) r.image.path = image["path"].get<std::string>();
    if (image.contains("inline_b64")) {
      r.image.inline_b64 = image["inline_b64"].get<std::string>();
    }
    r.description = require(j, "description").get<std::string>();
    if (j.contains("context")) r.context = j["context"].get<std::string>();
    if (j.contains("prompt")) {
      r.prompt = LikelihoodPrompt{j["prompt"].at("base_text").get<std::string>(),
                                  j["prompt"].at("target_text").get<std::string>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed score request: ") + e.what());
  }
}

ScoreResponse parse_score_response(std::string_view line) {
  const json j = parse_message(line, "result");
  try {
    ScoreResponse r;
    r.request_id = require(j, "request_id").get<std::string>();
    if (j.contains("score") && !j["score"].is_null()) r.score = j["score"].get<double>();
    if (j.contains("diagnostics")) {
      const json& d = j["diagnostics"];
      ScoreDiagnostics diag;
      if (d.contains("token_logliks")) {
        diag.token_logliks = d["token_logliks"].get<std::vector<double>>();
      }
      if (d.contains("target_start")) {
        diag.target_start = d["target_start"].get<std::size_t>();
      }
      if (d.contains("parts")) {
        for (const auto& [k, v] : d["parts"].items()) diag.parts[k] = v.get<double>();
      }
      r.diagnostics = std::move(diag);
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed score response: ") + e.what());
  }
}

// --- prompts and combiners ---------------------------------------------------

LikelihoodPrompt build_likelihood_prompt(std::optional<std::string_view> context,
                                         std::string_view description,
                                         PromptMode mode) {
  std::string base;
  if (context) {
    base += "[Context: ";
    base += *context;
    base += "] ";
  }
  if (mode == PromptMode::kTextIfGood) {
    base += kTextIfGoodTemplate;
    return {std::move(base), std::string(description)};
  }
  base += context ? kGoodIfTextContextTemplate : kGoodIfTextTemplate;
  base += ' ';
  base += description;
  return {std::move(base), "5"};
}

double aggregate_loglik(std::span<const double> xs, Aggregation mode,
                        std::size_t target_start) {
  if (xs.empty()) throw ValidationError("empty token log-likelihood list");
  switch (mode) {
    case Aggregation::kSumTokenLoglik:
      return std::accumulate(xs.begin(), xs.end(), 0.0);
    case Aggregation::kMeanTokenLoglik:
      return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    case Aggregation::kTargetOnly: {
      if (target_start >= xs.size()) {
        throw ValidationError("target span is empty");
      }
      const auto target = xs.subspan(target_start);
      return std::accumulate(target.begin(), target.end(), 0.0) /
             static_cast<double>(target.size());
    }
  }
  throw ValidationError("unknown aggregation");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  check_vectors(a, b);
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("zero embedding vector");
  return dot(a, b) / (na * nb);
}

double similarity_score(std::span<const double> d, std::span<const double> i) {
  return cosine_similarity(d, i);
}

ContextualScore contextual_similarity_score(std::span<const double> d,
                                            std::span<const double> i,
                                            std::span<const double> c) {
  check_vectors(d, i);
  check_vectors(d, c);
  const auto dn = normalized(d);
  const auto in = normalized(i);
  const auto cn = normalized(c);
  const double with_context = dot(dn, cn);
  std::vector<double> added(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) added[k] = in[k] - cn[k];
  const double added_norm = std::sqrt(dot(added, added));
  if (added_norm < 1e-12) return {with_context, true};
  return {0.5 * with_context + 0.5 * dot(dn, added) / added_norm, false};
}

double mock_bagofwords_score(std::string_view image_id, std::string_view description) {
  const auto image = hash_embedding("image:" + std::string(image_id));
  std::array<double, kMockDim> text{};
  for (std::string_view tok : sorted_tokens(description)) {
    const auto e = hash_embedding(tok);
    for (std::size_t k = 0; k < kMockDim; ++k) text[k] += e[k];
  }
  return dot(text, image) / static_cast<double>(kMockDim);
}

double mock_lengthprior_score(std::string_view description) {
  const auto tokens = sorted_tokens(description);
  std::uint64_t h = fnv1a("lengthprior");
  for (std::string_view t : tokens) h = fnv1a(t, mix64(h));
  return static_cast<double>(tokens.size()) + 0.5 * static_cast<double>(h >> 11) * 0x1.0p-53;
}

// --- scorers ---------------------------------------------------------------

BuiltinScorer::BuiltinScorer(std::string metric_id, std::string name)
    : metric_id_(std::move(metric_id)), name_(std::move(name)) {
  if (name_ != "mock_bagofwords" && name_ != "mock_lengthprior") {
    throw ValidationError("unknown builtin scorer '" + name_ + "'");
  }
}

Handshake BuiltinScorer::handshake() {
  return {kProtocolVersion, metric_id_,
          name_ == "mock_lengthprior" ? "likelihood" : "similarity"};
}

ScoreResponse BuiltinScorer::score(const ScoreRequest& request) {
  ScoreResponse resp;
  resp.request_id = request.request_id;
  if (name_ == "mock_bagofwords") {
    const std::string image_id =
        request.image.path ? *request.image.path
                           : "inline:" + sha256_hex(request.image.inline_b64.value_or(""));
    resp.score = mock_bagofwords_score(image_id, request.description);
  } else {
    resp.score = mock_lengthprior_score(request.description);
  }
  return resp;
}

RemoteScorer::RemoteScorer(MetricSpec spec, std::unique_ptr<LineTransport> transport)
    : spec_(std::move(spec)), transport_(std::move(transport)) {}

RemoteScorer::~RemoteScorer() = default;

Handshake RemoteScorer::handshake() {
  return perform_handshake(*transport_, {kProtocolVersion, spec_.metric_id,
                                         std::string(to_string(spec_.family))});
}

ScoreResponse RemoteScorer::score(const ScoreRequest& request) {
  return parse_score_response(transport_->round_trip(serialize(request)));
}

std::unique_ptr<Scorer> make_scorer(const MetricSpec& spec) {
  switch (spec.transport) {
    case ScorerTransport::kBuiltin:
      return std::make_unique<BuiltinScorer>(spec.metric_id, spec.builtin);
    case ScorerTransport::kSubprocessStream:
      return std::make_unique<RemoteScorer>(
          spec, std::make_unique<SubprocessTransport>(spec.command));
    case ScorerTransport::kHttp:
      return std::make_unique<RemoteScorer>(spec,
                                            std::make_unique<HttpTransport>(spec.endpoint));
  }
  throw ValidationError("unknown transport");
}

// --- score records ------------------------------------------------------------

std::string score_ref(std::string_view record_id, std::optional<AugmentationKind> kind) {
  std::string ref(record_id);
  if (kind) {
    ref.push_back('#');
    ref += to_string(*kind);
  }
  return ref;
}

std::string ScoreTarget::ref() const { return score_ref(record->record_id, kind); }

ordered_json to_json(const ScoreRecord& r) {
  ordered_json j;
  j["metric_id"] = r.metric_id;
  j["record_id"] = r.record_id;
  j["kind"] = r.kind ? to_string(*r.kind) : std::string_view("original");
  j["score"] = r.score;
  return j;
}

ScoreRecord score_record_from_json(const json& j) {
  ScoreRecord r;
  try {
    r.metric_id = j.at("metric_id").get<std::string>();
    r.record_id = j.at("record_id").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "original") r.kind = augmentation_kind_from_string(kind);
    r.score = j.at("score").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed score record: ") + e.what());
  }
  return r;
}

std::vector<ScoreRecord> read_score_records(const std::filesystem::path& path) {
  std::vector<ScoreRecord> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      rows.push_back(score_record_from_json(json::parse(line)));
    } catch (const json::parse_error&) {
      // A crash can leave a torn final line; it is simply re-scored.
      continue;
    }
  }
  return rows;
}

void write_scores_csv(std::span<const ScoreRecord> rows, std::ostream& out) {
  csv::row(out, {"metric_id", "record_id", "kind", "score"});
  for (const auto& r : rows) {
    csv::row(out, {r.metric_id, r.record_id,
                   r.kind ? to_string(*r.kind) : std::string_view("original"),
                   csv::number(r.score)});
  }
}

ScoreRequest make_score_request(const MetricSpec& spec, const ScoreTarget& target,
                                const std::filesystem::path& image_root) {
  const ContextedRecord& rec = *target.record;
  ScoreRequest req;
  req.request_id = target.ref();
  req.description = rec.description;

  ImagePayload payload = spec.image_payload;
  if (payload == ImagePayload::kAuto) {
    payload = spec.transport == ScorerTransport::kHttp ? ImagePayload::kInline
                                                       : ImagePayload::kPath;
  }
  if (spec.transport == ScorerTransport::kBuiltin) {
    req.image.path = rec.image_ref;
  } else if (payload == ImagePayload::kPath) {
    req.image.path = std::filesystem::absolute(image_root / rec.image_ref).string();
  } else {
    const auto path = image_root / rec.image_ref;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read image " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    req.image.inline_b64 = base64_encode(bytes);
  }

  if (spec.context_mode == ContextMode::kContextual) {
    req.context = serialize_context(rec, spec.context_policy);
  }
  if (spec.family == MetricFamily::kLikelihood) {
    std::optional<std::string_view> ctx;
    if (req.context) ctx = *req.context;
    req.prompt = build_likelihood_prompt(ctx, rec.description,
                                         spec.prompt_mode.value_or(PromptMode::kTextIfGood));
  }
  return req;
}

double resolve_score(const MetricSpec& spec, const ScoreResponse& response) {
  if (spec.family == MetricFamily::kLikelihood && response.diagnostics &&
      !response.diagnostics->token_logliks.empty()) {
    return aggregate_loglik(response.diagnostics->token_logliks,
                            spec.aggregation.value_or(Aggregation::kMeanTokenLoglik),
                            response.diagnostics->target_start.value_or(0));
  }
  if (!response.score) {
    throw ValidationError("response '" + response.request_id + "' carries no score");
  }
  return *response.score;
}

ScoringRunResult run_scoring(const MetricSpec& spec, Scorer& scorer,
                             std::span<const ScoreTarget> targets,
                             const std::filesystem::path& sink,
                             const std::filesystem::path& image_root) {
  ScoringRunResult result;
  std::unordered_set<std::string> done;
  for (const auto& row : read_score_records(sink)) {
    if (row.metric_id != spec.metric_id) {
      throw ValidationError("score file " + sink.string() + " belongs to metric '" +
                            row.metric_id + "'");
    }
    done.insert(row.ref());
  }

  const Handshake hello = scorer.handshake();
  if (hello.family != to_string(spec.family)) {
    throw ProtocolError("scorer advertises family '" + hello.family + "', expected '" +
                        std::string(to_string(spec.family)) + "'");
  }

  if (!sink.parent_path().empty()) std::filesystem::create_directories(sink.parent_path());
  std::ofstream out(sink, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open score sink " + sink.string());

  std::unordered_set<std::string> seen;
  for (const ScoreTarget& target : targets) {
    const std::string ref = target.ref();
    if (done.count(ref) != 0) {
      ++result.skipped;
      continue;
    }
    const ScoreRequest req = make_score_request(spec, target, image_root);
    ScoreResponse resp;
    try {
      resp = scorer.score(req);
    } catch (const RemoteError& e) {
      result.errors.emplace_back(ref, e.what());
      continue;
    }
    if (seen.count(resp.request_id) != 0) {
      throw ProtocolError("adapter repeated request_id '" + resp.request_id + "'");
    }
    if (resp.request_id != req.request_id) {
      throw ProtocolError("adapter answered '" + resp.request_id + "' for request '" +
                          req.request_id + "'");
    }
    seen.insert(resp.request_id);
    double score = 0.0;
    try {
      score = resolve_score(spec, resp);
    } catch (const ValidationError& e) {
      result.errors.emplace_back(ref, e.what());
      continue;
    }
    if (!std::isfinite(score)) {
      result.errors.emplace_back(ref, "non-finite score");
      continue;
    }
    out << to_json(ScoreRecord{spec.metric_id, target.record->record_id, target.kind,
                               score})
               .dump()
        << '\n';
    out.flush();
    done.insert(ref);
    ++result.scored;
    result.scored_refs.push_back(ref);
  }
  return result;
}

}  // namespace descbench
