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

#include "descbench/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "descbench/error.hpp"
#include "descbench/images.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"

namespace descbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kTextFields[] = {
    "record_id",     "image_ref",       "description",   "caption",
    "article_title", "first_paragraph", "section_title", "section_text"};

std::string required_string(const json& j, std::string_view key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError("missing field '" + std::string(key) + "'");
  }
  if (!it->is_string()) {
    throw ValidationError("field '" + std::string(key) + "' is not a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      return "unassigned";
  }
  return "unassigned";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "unassigned") return Split::kUnassigned;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

bool description_matches_caption(std::string_view description,
                                 std::string_view caption) {
  return normalize_whitespace(description) == normalize_whitespace(caption);
}

ordered_json to_json(const ContextedRecord& r) {
  ordered_json j;
  j["record_id"] = r.record_id;
  j["image_ref"] = r.image_ref;
  j["description"] = r.description;
  j["caption"] = r.caption;
  j["article_title"] = r.article_title;
  j["first_paragraph"] = r.first_paragraph;
  j["section_title"] = r.section_title;
  j["section_text"] = r.section_text;
  j["identical_to_caption"] = r.identical_to_caption;
  j["split"] = to_string(r.split);
  return j;
}

ContextedRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  ContextedRecord r;
  r.record_id = required_string(j, "record_id");
  r.image_ref = required_string(j, "image_ref");
  r.description = required_string(j, "description");
  r.caption = required_string(j, "caption");
  r.article_title = required_string(j, "article_title");
  r.first_paragraph = required_string(j, "first_paragraph");
  r.section_title = required_string(j, "section_title");
  r.section_text = required_string(j, "section_text");
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("field 'split' is not a string");
    r.split = split_from_string(it->get<std::string>());
  }
  if (r.record_id.empty()) throw ValidationError("record_id is empty");
  if (trim(r.description).empty()) {
    throw ValidationError("record '" + r.record_id + "' has an empty description");
  }
  r.identical_to_caption = description_matches_caption(r.description, r.caption);
  return r;
}

Corpus::Corpus(std::vector<ContextedRecord> records)
    : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (trim(r.description).empty()) {
      throw ValidationError("record '" + r.record_id + "' has an empty description");
    }
    if (!index_.emplace(r.record_id, i).second) {
      throw ValidationError("duplicate record_id '" + r.record_id + "'");
    }
  }
}

const ContextedRecord* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const ContextedRecord& Corpus::at(std::string_view id) const {
  const ContextedRecord* r = find(id);
  if (r == nullptr) {
    throw ValidationError("unknown record_id '" + std::string(id) + "'");
  }
  return *r;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.record_id);
  return out;
}

std::size_t Corpus::identical_count() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(),
      [](const ContextedRecord& r) { return r.identical_to_caption; }));
}

Corpus read_corpus(std::istream& in,
                   const std::optional<std::filesystem::path>& image_root) {
  std::vector<ContextedRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError("parse error at line " + std::to_string(line_no) +
                            ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("parse error at line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  if (image_root) {
    std::vector<std::string> bad;
    for (const auto& r : records) {
      if (!is_decodable_image(*image_root / r.image_ref)) {
        bad.push_back(r.record_id);
      }
    }
    if (!bad.empty()) {
      std::ostringstream msg;
      msg << "ingest error: " << bad.size()
          << " record(s) have unresolvable image_ref:";
      for (const auto& id : bad) msg << ' ' << id;
      throw ValidationError(msg.str());
    }
  }
  return Corpus(std::move(records));
}

Corpus ingest(const std::filesystem::path& source,
              const std::filesystem::path& image_root) {
  std::ifstream in(source);
  if (!in) throw IoError("cannot open record file " + source.string());
  return read_corpus(in, image_root);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& r : corpus) out << to_json(r).dump() << '\n';
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(corpus, out);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_corpus(in, std::nullopt);
}

std::size_t identical_retention_count(std::size_t identical,
                                      std::size_t distinct,
                                      double target_fraction) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
    throw ValidationError("target_fraction must lie in (0, 1)");
  }
  // r <= f (r + m)  <=>  r (1 - f) <= f m. Slack absorbs binary rounding of
  // fractions such as 0.2.
  const long double f = target_fraction;
  const long double bound =
      f * static_cast<long double>(distinct) / (1.0L - f) + 1e-9L;
  const auto r = static_cast<std::size_t>(bound);
  return std::min(identical, r);
}

Corpus subsample_identical(const Corpus& corpus, double target_fraction,
                           std::uint64_t seed) {
  const std::size_t identical = corpus.identical_count();
  const std::size_t distinct = corpus.size() - identical;
  const std::size_t keep =
      identical_retention_count(identical, distinct, target_fraction);
  if (keep == identical) return corpus;

  std::vector<std::string> pool;
  for (const auto& r : corpus) {
    if (r.identical_to_caption) pool.push_back(r.record_id);
  }
  std::sort(pool.begin(), pool.end());
  Rng rng(derive_seed(seed, "subsample_identical"));
  shuffle(std::span<std::string>(pool), rng);
  pool.resize(keep);
  std::sort(pool.begin(), pool.end());

  std::vector<ContextedRecord> out;
  for (const auto& r : corpus) {
    if (!r.identical_to_caption ||
        std::binary_search(pool.begin(), pool.end(), r.record_id)) {
      out.push_back(r);
    }
  }
  return Corpus(std::move(out));
}

std::size_t test_split_size(std::size_t n) {
  // floor(n / 5 + 1 / 2) in integers.
  return std::max<std::size_t>(1, (2 * n + 5) / 10);
}

SplitAssignment make_split(const Corpus& corpus, std::uint64_t seed) {
  if (corpus.size() < 5) {
    throw ValidationError("corpus too small to split: need at least 5 records, have " +
                          std::to_string(corpus.size()));
  }
  std::vector<std::string> ids = corpus.ids();
  std::sort(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, "make_split"));
  shuffle(std::span<std::string>(ids), rng);

  const std::size_t n_test = test_split_size(ids.size());
  SplitAssignment out;
  out.seed = seed;
  out.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  return out;
}

Corpus apply_split(const Corpus& corpus, const SplitAssignment& assignment) {
  std::vector<ContextedRecord> out = corpus.records();
  for (auto& r : out) {
    if (std::binary_search(assignment.test_ids.begin(), assignment.test_ids.end(),
                           r.record_id)) {
      r.split = Split::kTest;
    } else if (std::binary_search(assignment.train_ids.begin(),
                                  assignment.train_ids.end(), r.record_id)) {
      r.split = Split::kTrain;
    } else {
      throw ValidationError("split manifest does not cover record '" +
                            r.record_id + "'");
    }
  }
  return Corpus(std::move(out));
}

ordered_json to_json(const SplitAssignment& a) {
  ordered_json j;
  j["seed"] = a.seed;
  j["train_ids"] = a.train_ids;
  j["test_ids"] = a.test_ids;
  return j;
}

SplitAssignment split_from_json(const json& j) {
  SplitAssignment a;
  try {
    a.seed = j.at("seed").get<std::uint64_t>();
    a.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    a.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed split manifest: ") + e.what());
  }
  std::sort(a.train_ids.begin(), a.train_ids.end());
  std::sort(a.test_ids.begin(), a.test_ids.end());
  return a;
}

std::string_view context_field(const ContextedRecord& r,
                               std::string_view name) {
  if (name == "article_title") return r.article_title;
  if (name == "first_paragraph") return r.first_paragraph;
  if (name == "section_title") return r.section_title;
  if (name == "section_text") return r.section_text;
  if (name == "caption") return r.caption;
  throw ValidationError("unknown context field '" + std::string(name) + "'");
}

std::vector<std::string_view> ContextPolicy::field_names() const {
  switch (kind) {
    case Kind::kTitleSectionCaption:
      return {"article_title", "section_title", "caption"};
    case Kind::kFull:
      return {std::begin(kContextFieldNames), std::end(kContextFieldNames)};
    case Kind::kCustom: {
      std::vector<std::string_view> out;
      for (const auto& f : custom_fields) {
        if (std::find(std::begin(kContextFieldNames), std::end(kContextFieldNames),
                      f) == std::end(kContextFieldNames)) {
          throw ValidationError("context policy names unknown field '" + f + "'");
        }
        out.push_back(f);
      }
      return out;
    }
  }
  return {};
}

ordered_json ContextPolicy::to_json() const {
  ordered_json j;
  switch (kind) {
    case Kind::kTitleSectionCaption:
      j["policy"] = "title_section_caption";
      break;
    case Kind::kFull:
      j["policy"] = "full";
      break;
    case Kind::kCustom:
      j["policy"] = "custom";
      j["fields"] = custom_fields;
      break;
  }
  if (truncation_limit) j["truncation_limit"] = *truncation_limit;
  return j;
}

ContextPolicy ContextPolicy::from_json(const json& j) {
  ContextPolicy p;
  if (j.is_null()) return p;
  const std::string name = j.value("policy", std::string("title_section_caption"));
  if (name == "title_section_caption") {
    p.kind = Kind::kTitleSectionCaption;
  } else if (name == "full") {
    p.kind = Kind::kFull;
  } else if (name == "custom") {
    p.kind = Kind::kCustom;
    p.custom_fields = j.value("fields", std::vector<std::string>{});
    p.field_names();  // validates
  } else {
    throw ValidationError("unknown context policy '" + name + "'");
  }
  if (j.contains("truncation_limit") && !j["truncation_limit"].is_null()) {
    p.truncation_limit = j["truncation_limit"].get<std::size_t>();
  }
  return p;
}

ContextBundle context_bundle(const ContextedRecord& record,
                             const ContextPolicy& policy) {
  ContextBundle out;
  for (std::string_view name : policy.field_names()) {
    out.emplace_back(std::string(name), std::string(context_field(record, name)));
  }
  return out;
}

std::string serialize_context(const ContextedRecord& record,
                              const ContextPolicy& policy) {
  std::string text;
  for (const auto& [name, value] : context_bundle(record, policy)) {
    const std::string part = normalize_whitespace(value);
    if (part.empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += part;
    if (!ends_with_terminal_punctuation(part)) text.push_back('.');
  }
  if (policy.truncation_limit) {
    auto tokens = tokenize(text);
    if (tokens.size() > *policy.truncation_limit) {
      tokens.resize(*policy.truncation_limit);
      text = join(tokens);
    }
  }
  return text;
}

}  // namespace descbench
