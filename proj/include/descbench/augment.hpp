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

#ifndef DESCBENCH_AUGMENT_HPP_
#define DESCBENCH_AUGMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "descbench/dataset.hpp"
#include "descbench/generation.hpp"
#include "descbench/images.hpp"
#include "json.hpp"

namespace descbench {

/// The ten robustness checks. Each is expected to lower the score a
/// well-calibrated metric assigns relative to the unmodified record.
enum class AugmentationKind {
  kShuffledDescriptions,
  kShuffledContexts,
  kShuffledWords,
  kProperNameReplacement,
  kFrequentAlignmentErrors,
  kFrankensteinImage,
  kGpt2ContinuationShort,
  kGpt2ContinuationLong,
  kIrrelevantFinalSentence,
  kExactRepetition,
};

inline constexpr std::array<AugmentationKind, 10> kAllAugmentationKinds = {
    AugmentationKind::kShuffledDescriptions,  AugmentationKind::kShuffledContexts,
    AugmentationKind::kShuffledWords,         AugmentationKind::kProperNameReplacement,
    AugmentationKind::kFrequentAlignmentErrors, AugmentationKind::kFrankensteinImage,
    AugmentationKind::kGpt2ContinuationShort, AugmentationKind::kGpt2ContinuationLong,
    AugmentationKind::kIrrelevantFinalSentence, AugmentationKind::kExactRepetition,
};

std::string_view to_string(AugmentationKind kind);
AugmentationKind augmentation_kind_from_string(std::string_view name);
/// Comma-separated kind names; "all" selects every kind.
std::vector<AugmentationKind> parse_kind_list(std::string_view list);

struct Provenance {
  std::uint64_t seed = 0;
  std::optional<std::string> donor_id;
  std::vector<Replacement> replacements;
  std::optional<Placement> placement;
  std::vector<std::string> transcript_ids;
  std::optional<std::size_t> pool_index;

  bool operator==(const Provenance&) const = default;
};

/// A perturbed copy of a corpus record. `record` keeps the base record_id;
/// only the fields the kind mutates differ from the base.
struct AugmentedRecord {
  std::string base_id;
  AugmentationKind kind = AugmentationKind::kExactRepetition;
  ContextedRecord record;
  bool applicable = true;
  std::optional<std::string> context_donor;
  Provenance provenance;

  bool operator==(const AugmentedRecord&) const = default;
};

nlohmann::ordered_json to_json(const AugmentedRecord& r);
AugmentedRecord augmented_from_json(const nlohmann::json& j);
void write_augmented(std::span<const AugmentedRecord> rows, std::ostream& out);
std::vector<AugmentedRecord> read_augmented(std::istream& in);

using DonorMap = std::map<std::string, std::string>;

/// A uniformly drawn derangement of `members`: every id maps to a different
/// member. Throws ValidationError for fewer than two members.
DonorMap derangement(std::span<const std::string> members, std::uint64_t seed);

DonorMap shuffle_descriptions(const Corpus& corpus,
                              std::span<const std::string> split_members,
                              std::uint64_t seed);
DonorMap shuffle_contexts(const Corpus& corpus,
                          std::span<const std::string> split_members,
                          std::uint64_t seed);

/// Record ids grouped by split tag. Shuffles never cross groups.
std::map<Split, std::vector<std::string>> split_groups(const Corpus& corpus);

struct TextAugmentation {
  std::string text;
  bool applicable = true;
  std::vector<Replacement> replacements;
  std::vector<std::string> transcript_ids;
  std::optional<std::size_t> pool_index;
};

/// Uniform permutation of the whitespace tokens, joined by single spaces.
/// Redraws when the permutation reproduces the input and a different
/// arrangement exists. Single-token input is not applicable.
TextAugmentation shuffle_words(std::string_view description, std::uint64_t seed);

TextAugmentation replace_proper_names(std::string_view description,
                                      GenerationProvider& provider);
TextAugmentation inject_alignment_errors(std::string_view description,
                                         GenerationProvider& provider);

/// description + one generated sentence, conditioned on the text only.
TextAugmentation continuation_long(std::string_view description,
                                   GenerationProvider& provider);

/// Keeps the first floor(n/2) tokens and lets the provider complete to about
/// the original length (within +/- `tolerance`). Needs at least 4 tokens.
TextAugmentation continuation_short(std::string_view description,
                                    GenerationProvider& provider,
                                    double tolerance = 0.2);

/// Appends one of exactly ten pool sentences, chosen uniformly by seed.
TextAugmentation append_irrelevant_sentence(std::string_view description,
                                            std::span<const std::string> pool,
                                            std::uint64_t seed);

/// description + " " + description.
std::string exact_repetition(std::string_view description);

/// Ten general-knowledge sentences unrelated to any image.
std::span<const std::string> default_irrelevant_pool();

struct AugmentOptions {
  std::vector<AugmentationKind> kinds{kAllAugmentationKinds.begin(),
                                      kAllAugmentationKinds.end()};
  std::uint64_t seed = 0;
  GenerationProvider* provider = nullptr;  // name/alignment/continuations
  const ObjectLibrary* objects = nullptr;  // frankenstein_image
  std::filesystem::path image_root;        // frankenstein_image I/O
  std::vector<std::string> pool;           // empty: default pool
  std::size_t jobs = 1;
  int provider_attempts = 3;
};

/// One AugmentedRecord per (record, kind), ordered by kind then corpus
/// order. Composited images are written beside the originals as
/// <stem>.frankenstein_image.png.
std::vector<AugmentedRecord> augment_corpus(const Corpus& corpus,
                                            const AugmentOptions& options);

/// Fields of `kind` that may differ from the base record.
std::vector<std::string_view> mutated_fields(AugmentationKind kind);

}  // namespace descbench

#endif  // DESCBENCH_AUGMENT_HPP_
