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

#ifndef DESCBENCH_SCORING_HPP_
#define DESCBENCH_SCORING_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descbench/augment.hpp"
#include "descbench/dataset.hpp"
#include "descbench/protocol.hpp"
#include "json.hpp"

namespace descbench {

class LineTransport;

enum class MetricFamily { kSimilarity, kLikelihood };
enum class ScorerTransport { kSubprocessStream, kHttp, kBuiltin };
enum class ContextMode { kNone, kContextual };
enum class PromptMode { kTextIfGood, kGoodIfText };
enum class Aggregation { kMeanTokenLoglik, kSumTokenLoglik, kTargetOnly };
enum class ImagePayload { kAuto, kPath, kInline };

std::string_view to_string(MetricFamily v);
std::string_view to_string(PromptMode v);
std::string_view to_string(Aggregation v);

/// A scorer registration. Likelihood-only fields are absent for the
/// similarity family.
struct MetricSpec {
  std::string metric_id;
  MetricFamily family = MetricFamily::kSimilarity;
  ScorerTransport transport = ScorerTransport::kSubprocessStream;
  std::vector<std::string> command;  // subprocess_stream
  std::string endpoint;              // http
  std::string builtin;               // builtin: mock_bagofwords, mock_lengthprior
  ContextMode context_mode = ContextMode::kNone;
  std::optional<PromptMode> prompt_mode;
  std::optional<Aggregation> aggregation;
  ContextPolicy context_policy;
  ImagePayload image_payload = ImagePayload::kAuto;

  nlohmann::ordered_json to_json() const;
  /// Fills likelihood defaults (text_if_good, mean_token_loglik). Throws
  /// ValidationError on inconsistent fields.
  static MetricSpec from_json(const nlohmann::json& j);
  /// SHA-256 of the canonical JSON form.
  std::string config_hash() const;
};

/// Spec for a built-in mock: "mock_bagofwords" or "mock_lengthprior".
MetricSpec builtin_metric(std::string_view name);

struct ImagePayloadData {
  std::optional<std::string> path;
  std::optional<std::string> inline_b64;

  bool operator==(const ImagePayloadData&) const = default;
};

struct LikelihoodPrompt {
  std::string base_text;
  std::string target_text;

  bool operator==(const LikelihoodPrompt&) const = default;
};

struct ScoreRequest {
  std::string request_id;
  ImagePayloadData image;
  std::string description;
  std::optional<std::string> context;
  std::optional<LikelihoodPrompt> prompt;

  bool operator==(const ScoreRequest&) const = default;
};

struct ScoreDiagnostics {
  std::vector<double> token_logliks;
  std::optional<std::size_t> target_start;  // first target token index
  std::map<std::string, double> parts;

  bool operator==(const ScoreDiagnostics&) const = default;
};

struct ScoreResponse {
  std::string request_id;
  std::optional<double> score;
  std::optional<ScoreDiagnostics> diagnostics;

  bool operator==(const ScoreResponse&) const = default;
};

std::string serialize(const ScoreRequest& request);
std::string serialize(const ScoreResponse& response);
ScoreRequest parse_score_request(std::string_view line);
ScoreResponse parse_score_response(std::string_view line);

inline constexpr std::string_view kTextIfGoodTemplate =
    "High quality, accessible, image description:";
inline constexpr std::string_view kGoodIfTextTemplate =
    "Look at the photo and description and rate the description from 1-5 based "
    "on whether it is a high quality, accessible, image description. "
    "Description:";
inline constexpr std::string_view kGoodIfTextContextTemplate =
    "Look at the context, photo, and description and rate the description from "
    "1-5 based on whether it is a high quality, accessible, image description. "
    "Description:";

/// text_if_good: base = ["[Context: C] "] + template, target = description.
/// good_if_text: base = rating template + " " + description, target = "5".
LikelihoodPrompt build_likelihood_prompt(std::optional<std::string_view> context,
                                         std::string_view description,
                                         PromptMode mode = PromptMode::kTextIfGood);

/// Reduces per-token log-likelihoods. target_only averages tokens from
/// `target_start` on. Throws ValidationError on an empty list.
double aggregate_loglik(std::span<const double> token_logliks, Aggregation mode,
                        std::size_t target_start = 0);

/// Cosine similarity. Throws ValidationError on zero or mismatched vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double similarity_score(std::span<const double> description_embedding,
                        std::span<const double> image_embedding);

struct ContextualScore {
  double score = 0.0;
  bool fallback = false;  // image added no information beyond the context
};

using ContextCombiner = std::function<ContextualScore(
    std::span<const double>, std::span<const double>, std::span<const double>)>;

/// 0.5 cos(d, c) + 0.5 cos(d, normalize(i - c)); falls back to cos(d, c)
/// when i == c.
ContextualScore contextual_similarity_score(std::span<const double> description,
                                            std::span<const double> image,
                                            std::span<const double> context);

/// Invariant under word order: depends only on the description's token
/// multiset and a hash-derived pseudo-embedding of the image id.
double mock_bagofwords_score(std::string_view image_id, std::string_view description);

/// Strictly increasing in token count; ties broken by a hash of the token
/// multiset.
double mock_lengthprior_score(std::string_view description);

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual Handshake handshake() = 0;
  virtual ScoreResponse score(const ScoreRequest& request) = 0;
};

/// In-process mock scorer.
class BuiltinScorer final : public Scorer {
 public:
  BuiltinScorer(std::string metric_id, std::string name);
  Handshake handshake() override;
  ScoreResponse score(const ScoreRequest& request) override;

 private:
  std::string metric_id_;
  std::string name_;
};

/// Scorer behind a line transport (child process or HTTP).
class RemoteScorer final : public Scorer {
 public:
  RemoteScorer(MetricSpec spec, std::unique_ptr<LineTransport> transport);
  ~RemoteScorer() override;
  Handshake handshake() override;
  ScoreResponse score(const ScoreRequest& request) override;

 private:
  MetricSpec spec_;
  std::unique_ptr<LineTransport> transport_;
};

std::unique_ptr<Scorer> make_scorer(const MetricSpec& spec);

/// Something to score: a base record or one augmented variant.
struct ScoreTarget {
  const ContextedRecord* record = nullptr;
  std::optional<AugmentationKind> kind;

  std::string ref() const;  // "id" or "id#kind"
};

std::string score_ref(std::string_view record_id,
                      std::optional<AugmentationKind> kind);

struct ScoreRecord {
  std::string metric_id;
  std::string record_id;
  std::optional<AugmentationKind> kind;  // nullopt: original
  double score = 0.0;

  std::string ref() const { return score_ref(record_id, kind); }
  bool operator==(const ScoreRecord&) const = default;
};

nlohmann::ordered_json to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const nlohmann::json& j);
std::vector<ScoreRecord> read_score_records(const std::filesystem::path& path);
/// CSV with columns metric_id,record_id,kind,score.
void write_scores_csv(std::span<const ScoreRecord> rows, std::ostream& out);

/// Builds the request the gateway sends for `target` under `spec`.
ScoreRequest make_score_request(const MetricSpec& spec, const ScoreTarget& target,
                                const std::filesystem::path& image_root);

/// Final score from a response: the aggregated token log-likelihoods for
/// the likelihood family when present, else the score field.
double resolve_score(const MetricSpec& spec, const ScoreResponse& response);

struct ScoringRunResult {
  std::size_t scored = 0;
  std::size_t skipped = 0;  // already present in the sink
  std::vector<std::string> scored_refs;
  std::vector<std::pair<std::string, std::string>> errors;  // ref, message
};

/// Scores every target missing from `sink` (an append-only JSONL file that
/// doubles as the resume checkpoint). Rows are flushed as they arrive, so an
/// adapter crash leaves a valid checkpoint and rethrows. Non-finite scores
/// are per-record errors.
ScoringRunResult run_scoring(const MetricSpec& spec, Scorer& scorer,
                             std::span<const ScoreTarget> targets,
                             const std::filesystem::path& sink,
                             const std::filesystem::path& image_root);

}  // namespace descbench

#endif  // DESCBENCH_SCORING_HPP_
