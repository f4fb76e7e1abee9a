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

#ifndef DESCBENCH_DATASET_HPP_
#define DESCBENCH_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace descbench {

enum class Split { kTrain, kTest, kUnassigned };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

/// One benchmark item: an image, its alt-text description and the document
/// context it appeared in.
struct ContextedRecord {
  std::string record_id;
  std::string image_ref;  // relative to the corpus image root
  std::string description;
  std::string caption;
  std::string article_title;
  std::string first_paragraph;
  std::string section_title;
  std::string section_text;
  bool identical_to_caption = false;
  Split split = Split::kUnassigned;

  bool operator==(const ContextedRecord&) const = default;
};

/// description == caption after whitespace normalization.
bool description_matches_caption(std::string_view description,
                                 std::string_view caption);

nlohmann::ordered_json to_json(const ContextedRecord& record);

/// Parses one record object. identical_to_caption is always recomputed;
/// `split` defaults to unassigned. Throws ValidationError.
ContextedRecord record_from_json(const nlohmann::json& j);

/// An immutable, id-indexed collection of validated records.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<ContextedRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }
  const ContextedRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<ContextedRecord>& records() const { return records_; }

  const ContextedRecord* find(std::string_view id) const;
  const ContextedRecord& at(std::string_view id) const;
  std::vector<std::string> ids() const;

  std::size_t identical_count() const;

 private:
  std::vector<ContextedRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a line-delimited record file. Blank lines are skipped. When
/// `image_root` is given, every image_ref must decode as a raster image.
Corpus read_corpus(std::istream& in,
                   const std::optional<std::filesystem::path>& image_root);
Corpus ingest(const std::filesystem::path& source,
              const std::filesystem::path& image_root);

void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

/// Largest number of identical-caption records r with
/// r / (r + distinct) <= target_fraction, capped at `identical`.
std::size_t identical_retention_count(std::size_t identical,
                                      std::size_t distinct,
                                      double target_fraction);

/// Randomly drops identical-caption records until their share is at most
/// `target_fraction`. Distinct records and corpus order are preserved.
Corpus subsample_identical(const Corpus& corpus, double target_fraction,
                           std::uint64_t seed);

struct SplitAssignment {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted

  bool operator==(const SplitAssignment&) const = default;
};

/// round-half-up(0.2 * n), at least 1.
std::size_t test_split_size(std::size_t n);

SplitAssignment make_split(const Corpus& corpus, std::uint64_t seed);

/// Returns a copy of `corpus` with split tags set from `assignment`.
Corpus apply_split(const Corpus& corpus, const SplitAssignment& assignment);

nlohmann::ordered_json to_json(const SplitAssignment& assignment);
SplitAssignment split_from_json(const nlohmann::json& j);

// --- context serialization --------------------------------------------------

inline constexpr std::string_view kContextFieldNames[] = {
    "article_title", "first_paragraph", "section_title", "section_text",
    "caption"};

std::string_view context_field(const ContextedRecord& record,
                               std::string_view field_name);

struct ContextPolicy {
  enum class Kind { kTitleSectionCaption, kFull, kCustom };

  Kind kind = Kind::kTitleSectionCaption;
  std::vector<std::string> custom_fields;
  std::optional<std::size_t> truncation_limit;  // whitespace tokens

  std::vector<std::string_view> field_names() const;

  nlohmann::ordered_json to_json() const;
  static ContextPolicy from_json(const nlohmann::json& j);
};

using ContextBundle = std::vector<std::pair<std::string, std::string>>;

ContextBundle context_bundle(const ContextedRecord& record,
                             const ContextPolicy& policy);

/// Joins the policy's non-empty fields as sentences ("Title. Section.
/// Caption.") and applies the truncation limit.
std::string serialize_context(const ContextedRecord& record,
                              const ContextPolicy& policy);

}  // namespace descbench

#endif  // DESCBENCH_DATASET_HPP_
