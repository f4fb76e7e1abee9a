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

#include "descbench/augment.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "descbench/error.hpp"
#include "descbench/parallel.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kKindNames[] = {
    "shuffled_descriptions",   "shuffled_contexts",       "shuffled_words",
    "proper_name_replacement", "frequent_alignment_errors", "frankenstein_image",
    "gpt2_continuation_short", "gpt2_continuation_long",  "irrelevant_final_sentence",
    "exact_repetition",
};

template <typename Fn>
auto with_retries(int attempts, Fn&& fn) {
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const AdapterError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
    }
  }
}

std::string request_id_for(std::string_view task, std::string_view input) {
  return std::string(task) + "-" + std::to_string(fnv1a(input));
}

TextAugmentation checked_rewrite(std::string_view description,
                                 GenerationProvider& provider, GenerationTask task) {
  GenerationRequest req;
  req.task = task;
  req.input = std::string(description);
  req.request_id = request_id_for(to_string(task), description);
  GenerationResponse resp = provider.generate(req);

  std::string expected;
  try {
    expected = apply_replacements(description, resp.replacements);
  } catch (const ValidationError& e) {
    throw ProtocolError(std::string("provider replacement list invalid: ") + e.what());
  }
  if (expected != resp.output) {
    throw ProtocolError("provider output is inconsistent with its replacement list");
  }
  for (const auto& r : resp.replacements) {
    if (r.replacement == r.original) {
      throw ProtocolError("provider returned a replacement equal to the original '" +
                          r.original + "'");
    }
  }
  TextAugmentation out;
  out.applicable = !resp.replacements.empty();
  out.text = out.applicable ? resp.output : std::string(description);
  out.replacements = std::move(resp.replacements);
  out.transcript_ids.push_back(transcript_key(req));
  return out;
}

std::string first_sentence(std::string_view text) {
  text = trim(text);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n' ||
         text[i + 1] == '\t')) {
      return normalize_whitespace(text.substr(0, i + 1));
    }
  }
  std::string s = normalize_whitespace(text);
  if (!s.empty()) s.push_back('.');
  return s;
}

}  // namespace

std::string_view to_string(AugmentationKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

AugmentationKind augmentation_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<AugmentationKind>(i);
  }
  throw ValidationError("unknown augmentation kind '" + std::string(name) + "'");
}

std::vector<AugmentationKind> parse_kind_list(std::string_view list) {
  std::vector<AugmentationKind> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view name = trim(list.substr(pos, comma - pos));
    if (name == "all") {
      out.assign(kAllAugmentationKinds.begin(), kAllAugmentationKinds.end());
    } else if (!name.empty()) {
      const AugmentationKind k = augmentation_kind_from_string(name);
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw ValidationError("no augmentation kinds selected");
  return out;
}

ordered_json to_json(const AugmentedRecord& r) {
  ordered_json j = to_json(r.record);
  j["base_id"] = r.base_id;
  j["kind"] = to_string(r.kind);
  j["applicable"] = r.applicable;
  if (r.context_donor) j["context_donor"] = *r.context_donor;
  ordered_json p;
  p["seed"] = r.provenance.seed;
  if (r.provenance.donor_id) p["donor_id"] = *r.provenance.donor_id;
  if (!r.provenance.replacements.empty()) {
    p["replacements"] = ordered_json::array();
    for (const auto& rep : r.provenance.replacements) {
      p["replacements"].push_back(to_json(rep));
    }
  }
  if (r.provenance.placement) p["placement"] = to_json(*r.provenance.placement);
  if (!r.provenance.transcript_ids.empty()) {
    p["transcript_ids"] = r.provenance.transcript_ids;
  }
  if (r.provenance.pool_index) p["pool_index"] = *r.provenance.pool_index;
  j["provenance"] = std::move(p);
  return j;
}

AugmentedRecord augmented_from_json(const json& j) {
  AugmentedRecord r;
  try {
    r.record = record_from_json(j);
    r.record.identical_to_caption = j.at("identical_to_caption").get<bool>();
    r.base_id = j.at("base_id").get<std::string>();
    r.kind = augmentation_kind_from_string(j.at("kind").get<std::string>());
    r.applicable = j.at("applicable").get<bool>();
    if (j.contains("context_donor")) {
      r.context_donor = j["context_donor"].get<std::string>();
    }
    const json& p = j.at("provenance");
    r.provenance.seed = p.at("seed").get<std::uint64_t>();
    if (p.contains("donor_id")) r.provenance.donor_id = p["donor_id"].get<std::string>();
    if (p.contains("replacements")) {
      for (const auto& rep : p["replacements"]) {
        r.provenance.replacements.push_back(replacement_from_json(rep));
      }
    }
    if (p.contains("placement")) {
      r.provenance.placement = placement_from_json(p["placement"]);
    }
    if (p.contains("transcript_ids")) {
      r.provenance.transcript_ids = p["transcript_ids"].get<std::vector<std::string>>();
    }
    if (p.contains("pool_index")) {
      r.provenance.pool_index = p["pool_index"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed augmented record: ") + e.what());
  }
  return r;
}

void write_augmented(std::span<const AugmentedRecord> rows, std::ostream& out) {
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

std::vector<AugmentedRecord> read_augmented(std::istream& in) {
  std::vector<AugmentedRecord> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(augmented_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError("augmented corpus line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return rows;
}

DonorMap derangement(std::span<const std::string> members, std::uint64_t seed) {
  if (members.size() < 2) {
    throw ValidationError("cannot shuffle within a split of " +
                          std::to_string(members.size()) + " record(s)");
  }
  std::vector<std::string> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("split members contain duplicate ids");
  }
  Rng rng(seed);
  std::vector<std::size_t> perm(sorted.size());
  // Rejection sampling: uniform over derangements, about e draws expected.
  for (;;) {
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    shuffle(std::span<std::size_t>(perm), rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < perm.size() && !fixed_point; ++i) {
      fixed_point = perm[i] == i;
    }
    if (!fixed_point) break;
  }
  DonorMap out;
  for (std::size_t i = 0; i < sorted.size(); ++i) out[sorted[i]] = sorted[perm[i]];
  return out;
}

namespace {
DonorMap shuffle_within(const Corpus& corpus, std::span<const std::string> members,
                        std::uint64_t seed, std::string_view label) {
  for (const auto& id : members) corpus.at(id);
  return derangement(members, derive_seed(seed, label));
}
}  // namespace

DonorMap shuffle_descriptions(const Corpus& corpus,
                              std::span<const std::string> split_members,
                              std::uint64_t seed) {
  return shuffle_within(corpus, split_members, seed, "shuffled_descriptions");
}

DonorMap shuffle_contexts(const Corpus& corpus,
                          std::span<const std::string> split_members,
                          std::uint64_t seed) {
  return shuffle_within(corpus, split_members, seed, "shuffled_contexts");
}

std::map<Split, std::vector<std::string>> split_groups(const Corpus& corpus) {
  std::map<Split, std::vector<std::string>> groups;
  for (const auto& r : corpus) groups[r.split].push_back(r.record_id);
  return groups;
}

TextAugmentation shuffle_words(std::string_view description, std::uint64_t seed) {
  const auto tokens = tokenize(description);
  TextAugmentation out;
  if (tokens.size() < 2) {
    out.text = std::string(description);
    out.applicable = false;
    return out;
  }
  const std::set<std::string_view> distinct(tokens.begin(), tokens.end());
  Rng rng(derive_seed(seed, "shuffled_words"));
  std::vector<std::string_view> perm(tokens);
  for (int attempt = 0; attempt < 100; ++attempt) {
    perm = tokens;
    shuffle(std::span<std::string_view>(perm), rng);
    if (distinct.size() < 2 || perm != tokens) break;
  }
  out.text = join(perm);
  return out;
}

TextAugmentation replace_proper_names(std::string_view description,
                                      GenerationProvider& provider) {
  return checked_rewrite(description, provider, GenerationTask::kReplaceNamesAndDates);
}

TextAugmentation inject_alignment_errors(std::string_view description,
                                         GenerationProvider& provider) {
  return checked_rewrite(description, provider, GenerationTask::kInjectAlignmentErrors);
}

TextAugmentation continuation_long(std::string_view description,
                                   GenerationProvider& provider) {
  GenerationRequest req;
  req.task = GenerationTask::kContinueText;
  req.input = std::string(description);
  req.max_new_sentences = 1;
  req.request_id = request_id_for("continue_long", description);
  const GenerationResponse resp = provider.generate(req);
  const std::string sentence = first_sentence(resp.output);
  if (sentence.empty()) throw ProtocolError("provider returned an empty continuation");
  TextAugmentation out;
  out.text = append_sentence(description, sentence);
  out.transcript_ids.push_back(transcript_key(req));
  return out;
}

TextAugmentation continuation_short(std::string_view description,
                                    GenerationProvider& provider, double tolerance) {
  const auto tokens = tokenize(description);
  TextAugmentation out;
  if (tokens.size() < 4) {
    out.text = std::string(description);
    out.applicable = false;
    return out;
  }
  const std::size_t n = tokens.size();
  const std::size_t kept = n / 2;
  const std::string prefix =
      join(std::span<const std::string_view>(tokens.data(), kept));

  GenerationRequest req;
  req.task = GenerationTask::kContinueText;
  req.input = prefix;
  req.max_new_sentences = 1;
  req.budget_tokens = static_cast<int>(n - kept);
  req.request_id = request_id_for("continue_short", prefix);
  const GenerationResponse resp = provider.generate(req);

  auto added = tokenize(resp.output);
  const auto max_total = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * (1.0 + tolerance)));
  const auto min_total = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * (1.0 - tolerance)));
  if (kept + added.size() > max_total) added.resize(max_total - kept);
  if (kept + added.size() < min_total || added.empty()) {
    throw ProtocolError("short continuation has " +
                        std::to_string(kept + added.size()) +
                        " tokens, outside the allowed range around " +
                        std::to_string(n));
  }
  out.text = prefix + " " + join(added);
  out.transcript_ids.push_back(transcript_key(req));
  return out;
}

TextAugmentation append_irrelevant_sentence(std::string_view description,
                                            std::span<const std::string> pool,
                                            std::uint64_t seed) {
  if (pool.size() != 10) {
    throw ValidationError("irrelevant sentence pool must have exactly 10 entries, has " +
                          std::to_string(pool.size()));
  }
  Rng rng(derive_seed(seed, "irrelevant_final_sentence"));
  const std::size_t index = uniform_index(rng, pool.size());
  TextAugmentation out;
  out.text = append_sentence(description, pool[index]);
  out.pool_index = index;
  return out;
}

std::string exact_repetition(std::string_view description) {
  std::string out;
  out.reserve(2 * description.size() + 1);
  out.append(description);
  out.push_back(' ');
  out.append(description);
  return out;
}

std::span<const std::string> default_irrelevant_pool() {
  static const std::vector<std::string> pool = {
      "The elephant is the largest existing land animal.",
      "The Pacific Ocean is the largest and deepest of the world's oceans.",
      "Mount Everest is the highest mountain above sea level.",
      "Honey is a sweet and viscous substance made by honey bees.",
      "The Sahara is a desert spanning most of North Africa.",
      "Jupiter is the largest planet in the Solar System.",
      "The violin is a wooden string instrument.",
      "Chess is a board game for two players.",
      "The cheetah is a large cat native to Africa and central Iran.",
      "Copper is a chemical element with the symbol Cu.",
  };
  return pool;
}

std::vector<std::string_view> mutated_fields(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::kShuffledContexts:
      return {std::begin(kContextFieldNames), std::end(kContextFieldNames)};
    case AugmentationKind::kFrankensteinImage:
      return {"image_ref"};
    default:
      return {"description"};
  }
}

std::vector<AugmentedRecord> augment_corpus(const Corpus& corpus,
                                            const AugmentOptions& options) {
  std::vector<AugmentationKind> kinds;
  for (AugmentationKind k : options.kinds) {
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  const std::span<const std::string> pool =
      options.pool.empty() ? default_irrelevant_pool()
                           : std::span<const std::string>(options.pool);

  auto need_provider = [&](AugmentationKind k) -> GenerationProvider& {
    if (options.provider == nullptr) {
      throw ValidationError(std::string(to_string(k)) +
                            " needs a generation provider");
    }
    return *options.provider;
  };

  std::vector<AugmentedRecord> rows;
  rows.reserve(kinds.size() * corpus.size());
  for (AugmentationKind kind : kinds) {
    const std::string_view kind_name = to_string(kind);
    DonorMap donors;
    if (kind == AugmentationKind::kShuffledDescriptions ||
        kind == AugmentationKind::kShuffledContexts) {
      for (const auto& [split, members] : split_groups(corpus)) {
        // A lone record has no donor inside its split.
        if (members.size() < 2) continue;
        const std::uint64_t group_seed =
            derive_seed(options.seed, kind_name, to_string(split));
        DonorMap part = kind == AugmentationKind::kShuffledDescriptions
                            ? shuffle_descriptions(corpus, members, group_seed)
                            : shuffle_contexts(corpus, members, group_seed);
        donors.merge(part);
      }
    }
    if (kind == AugmentationKind::kFrankensteinImage &&
        (options.objects == nullptr || options.image_root.empty())) {
      throw ValidationError("frankenstein_image needs an object library and image root");
    }

    std::vector<AugmentedRecord> out(corpus.size());
    parallel_for(corpus.size(), options.jobs, [&](std::size_t i) {
      const ContextedRecord& base = corpus[i];
      AugmentedRecord row;
      row.base_id = base.record_id;
      row.kind = kind;
      row.record = base;
      row.provenance.seed = derive_seed(options.seed, kind_name, base.record_id);
      const std::uint64_t seed = row.provenance.seed;

      auto take = [&row](TextAugmentation t) {
        row.record.description = std::move(t.text);
        row.applicable = t.applicable;
        row.provenance.replacements = std::move(t.replacements);
        row.provenance.transcript_ids = std::move(t.transcript_ids);
        row.provenance.pool_index = t.pool_index;
      };

      switch (kind) {
        case AugmentationKind::kShuffledDescriptions: {
          if (!donors.count(base.record_id)) {
            row.applicable = false;
            break;
          }
          const ContextedRecord& donor = corpus.at(donors.at(base.record_id));
          row.record.description = donor.description;
          row.provenance.donor_id = donor.record_id;
          break;
        }
        case AugmentationKind::kShuffledContexts: {
          if (!donors.count(base.record_id)) {
            row.applicable = false;
            break;
          }
          const ContextedRecord& donor = corpus.at(donors.at(base.record_id));
          row.record.article_title = donor.article_title;
          row.record.first_paragraph = donor.first_paragraph;
          row.record.section_title = donor.section_title;
          row.record.section_text = donor.section_text;
          row.record.caption = donor.caption;
          row.context_donor = donor.record_id;
          row.provenance.donor_id = donor.record_id;
          break;
        }
        case AugmentationKind::kShuffledWords:
          take(shuffle_words(base.description, seed));
          break;
        case AugmentationKind::kProperNameReplacement:
          take(with_retries(options.provider_attempts, [&] {
            return replace_proper_names(base.description, need_provider(kind));
          }));
          break;
        case AugmentationKind::kFrequentAlignmentErrors:
          take(with_retries(options.provider_attempts, [&] {
            return inject_alignment_errors(base.description, need_provider(kind));
          }));
          break;
        case AugmentationKind::kFrankensteinImage: {
          const cv::Mat image = read_image(options.image_root / base.image_ref);
          Composite comp = frankenstein_image(image, *options.objects, seed);
          const std::filesystem::path ref(base.image_ref);
          const std::filesystem::path out_ref =
              ref.parent_path() /
              (ref.stem().string() + "." + std::string(kind_name) + ".png");
          write_png(comp.image, options.image_root / out_ref);
          row.record.image_ref = out_ref.generic_string();
          row.provenance.placement = std::move(comp.placement);
          break;
        }
        case AugmentationKind::kGpt2ContinuationShort:
          take(with_retries(options.provider_attempts, [&] {
            return continuation_short(base.description, need_provider(kind));
          }));
          break;
        case AugmentationKind::kGpt2ContinuationLong:
          take(with_retries(options.provider_attempts, [&] {
            return continuation_long(base.description, need_provider(kind));
          }));
          break;
        case AugmentationKind::kIrrelevantFinalSentence:
          take(append_irrelevant_sentence(base.description, pool, seed));
          break;
        case AugmentationKind::kExactRepetition:
          row.record.description = exact_repetition(base.description);
          break;
      }
      out[i] = std::move(row);
    });
    std::move(out.begin(), out.end(), std::back_inserter(rows));
  }
  return rows;
}

}  // namespace descbench
