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

#ifndef DESCBENCH_GENERATION_HPP_
#define DESCBENCH_GENERATION_HPP_

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace descbench {

class LineTransport;

enum class GenerationTask {
  kReplaceNamesAndDates,
  kInjectAlignmentErrors,
  kContinueText,
};

std::string_view to_string(GenerationTask task);
GenerationTask generation_task_from_string(std::string_view name);

/// A span [start, end) of the request input, in bytes, and its substitute.
struct Replacement {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string original;
  std::string replacement;
  std::string category;  // optional: name, date, color, clothing, age

  bool operator==(const Replacement&) const = default;
};

nlohmann::ordered_json to_json(const Replacement& r);
Replacement replacement_from_json(const nlohmann::json& j);

struct GenerationRequest {
  std::string request_id;
  GenerationTask task = GenerationTask::kContinueText;
  std::string input;
  int max_new_sentences = 1;
  std::optional<int> budget_tokens;  // continue_text: tokens to add

  bool operator==(const GenerationRequest&) const = default;
};

struct GenerationResponse {
  std::string request_id;
  std::string output;
  std::vector<Replacement> replacements;

  bool operator==(const GenerationResponse&) const = default;
};

nlohmann::ordered_json to_json(const GenerationRequest& r);
GenerationRequest generation_request_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GenerationResponse& r);
GenerationResponse generation_response_from_json(const nlohmann::json& j);

/// Content address of a request: SHA-256 over the request with its
/// request_id removed.
std::string transcript_key(const GenerationRequest& request);

/// Applies non-overlapping replacements to `input`. Throws ValidationError
/// when a span does not match its `original` text.
std::string apply_replacements(std::string_view input,
                               std::vector<Replacement> replacements);

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  /// Throws AdapterError (retryable) on transport or provider failure.
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

/// Dictionary-backed offline provider. Names and four-digit years are
/// swapped via fixed tables; colors, ages and clothing rotate within their
/// lexicon; continuations are deterministic filler.
class StubGenerationProvider final : public GenerationProvider {
 public:
  GenerationResponse generate(const GenerationRequest& request) override;
};

/// Speaks the generation wire protocol over a line transport. Performs the
/// version handshake on construction. Calls are serialized.
class RemoteGenerationProvider final : public GenerationProvider {
 public:
  explicit RemoteGenerationProvider(std::unique_ptr<LineTransport> transport);
  ~RemoteGenerationProvider() override;

  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  std::unique_ptr<LineTransport> transport_;
  std::mutex mu_;
};

/// Persists every request/response pair under `dir/<key>.json` and serves
/// repeats from disk. With no inner provider it replays only and fails on a
/// transcript miss.
class TranscriptProvider final : public GenerationProvider {
 public:
  TranscriptProvider(std::filesystem::path dir,
                     std::unique_ptr<GenerationProvider> inner);

  GenerationResponse generate(const GenerationRequest& request) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  std::unique_ptr<GenerationProvider> inner_;
  std::mutex mu_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// "stub", "replay", "exec:<command>" or "http://host:port[/path]".
std::unique_ptr<GenerationProvider> make_generation_provider(
    std::string_view endpoint);

}  // namespace descbench

#endif  // DESCBENCH_GENERATION_HPP_
