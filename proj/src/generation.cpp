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

#include "descbench/generation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "descbench/digest.hpp"
#include "descbench/error.hpp"
#include "descbench/protocol.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"
#include "descbench/transport.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(GenerationTask task) {
  switch (task) {
    case GenerationTask::kReplaceNamesAndDates:
      return "replace_names_and_dates";
    case GenerationTask::kInjectAlignmentErrors:
      return "inject_alignment_errors";
    case GenerationTask::kContinueText:
      return "continue_text";
  }
  return "continue_text";
}

GenerationTask generation_task_from_string(std::string_view name) {
  if (name == "replace_names_and_dates") return GenerationTask::kReplaceNamesAndDates;
  if (name == "inject_alignment_errors") return GenerationTask::kInjectAlignmentErrors;
  if (name == "continue_text") return GenerationTask::kContinueText;
  throw ProtocolError("unknown generation task '" + std::string(name) + "'");
}

ordered_json to_json(const Replacement& r) {
  ordered_json j;
  j["start"] = r.start;
  j["end"] = r.end;
  j["original"] = r.original;
  j["replacement"] = r.replacement;
  if (!r.category.empty()) j["category"] = r.category;
  return j;
}

Replacement replacement_from_json(const json& j) {
  Replacement r;
  r.start = j.at("start").get<std::size_t>();
  r.end = j.at("end").get<std::size_t>();
  r.original = j.at("original").get<std::string>();
  r.replacement = j.at("replacement").get<std::string>();
  r.category = j.value("category", std::string());
  return r;
}

ordered_json to_json(const GenerationRequest& r) {
  ordered_json j;
  j["type"] = "generate";
  j["request_id"] = r.request_id;
  j["task"] = to_string(r.task);
  j["input"] = r.input;
  j["max_new_sentences"] = r.max_new_sentences;
  if (r.budget_tokens) j["budget_tokens"] = *r.budget_tokens;
  return j;
}

GenerationRequest generation_request_from_json(const json& j) {
  try {
    GenerationRequest r;
    r.request_id = j.at("request_id").get<std::string>();
    r.task = generation_task_from_string(j.at("task").get<std::string>());
    r.input = j.at("input").get<std::string>();
    r.max_new_sentences = j.value("max_new_sentences", 1);
    if (j.contains("budget_tokens") && !j["budget_tokens"].is_null()) {
      r.budget_tokens = j["budget_tokens"].get<int>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed generation request: ") + e.what());
  }
}

ordered_json to_json(const GenerationResponse& r) {
  ordered_json j;
  j["type"] = "result";
  j["request_id"] = r.request_id;
  j["output"] = r.output;
  j["replacements"] = ordered_json::array();
  for (const auto& rep : r.replacements) j["replacements"].push_back(to_json(rep));
  return j;
}

GenerationResponse generation_response_from_json(const json& j) {
  try {
    GenerationResponse r;
    r.request_id = j.at("request_id").get<std::string>();
    r.output = j.at("output").get<std::string>();
    if (j.contains("replacements")) {
      for (const auto& rep : j["replacements"]) {
        r.replacements.push_back(replacement_from_json(rep));
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed generation response: ") + e.what());
  }
}

std::string transcript_key(const GenerationRequest& request) {
  ordered_json j = to_json(request);
  j.erase("request_id");
  return sha256_hex(j.dump());
}

std::string apply_replacements(std::string_view input,
                               std::vector<Replacement> replacements) {
  std::sort(replacements.begin(), replacements.end(),
            [](const Replacement& a, const Replacement& b) { return a.start < b.start; });
  std::string out;
  std::size_t pos = 0;
  for (const auto& r : replacements) {
    if (r.start < pos || r.end < r.start || r.end > input.size()) {
      throw ValidationError("replacement span [" + std::to_string(r.start) + ", " +
                            std::to_string(r.end) + ") is out of range or overlaps");
    }
    if (input.substr(r.start, r.end - r.start) != r.original) {
      throw ValidationError("replacement span does not match original text '" +
                            r.original + "'");
    }
    out.append(input.substr(pos, r.start - pos));
    out.append(r.replacement);
    pos = r.end;
  }
  out.append(input.substr(pos));
  return out;
}

// --- stub provider ----------------------------------------------------------

namespace {

struct Word {
  std::size_t start;
  std::size_t end;
  std::string_view text;
};

// Words with surrounding punctuation and a possessive "'s" stripped.
std::vector<Word> core_words(std::string_view input) {
  std::vector<Word> out;
  for (std::string_view tok : tokenize(input)) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    while (b < e && !alnum(tok[b])) ++b;
    while (e > b && !alnum(tok[e - 1])) --e;
    if (e - b > 2 && tok.substr(e - 2, 2) == "'s") e -= 2;
    if (e <= b) continue;
    const auto offset = static_cast<std::size_t>(tok.data() - input.data());
    out.push_back({offset + b, offset + e, tok.substr(b, e - b)});
  }
  return out;
}

const std::map<std::string_view, std::string_view>& name_table() {
  static const std::map<std::string_view, std::string_view> table = {
      {"Elizabeth", "Victoria"}, {"Victoria", "Margaret"}, {"London", "Paris"},
      {"Paris", "Rome"},         {"Rome", "Athens"},       {"John", "William"},
      {"William", "Henry"},      {"Mary", "Anne"},         {"Anne", "Catherine"},
      {"George", "Edward"},      {"Charles", "Frederick"}, {"James", "Thomas"},
      {"Thomas", "Richard"},     {"Lincoln", "Jefferson"}, {"Washington", "Boston"},
      {"Berlin", "Vienna"},      {"Tokyo", "Osaka"},       {"Madrid", "Lisbon"},
      {"Smith", "Jones"},        {"Napoleon", "Wellington"}, {"Einstein", "Newton"},
      {"Mozart", "Haydn"},       {"Thames", "Seine"},      {"Everest", "Kilimanjaro"},
      {"California", "Oregon"},  {"Texas", "Arizona"},     {"Canada", "Norway"},
      {"India", "Brazil"},       {"Germany", "Poland"},    {"France", "Spain"},
      {"England", "Scotland"},   {"Italy", "Greece"},      {"Alice", "Clara"},
      {"Maria", "Sofia"},        {"Peter", "Paul"},        {"Oxford", "Cambridge"},
      {"Chicago", "Denver"},     {"York", "Jersey"},       {"Harvard", "Yale"},
      {"Amazon", "Nile"},
  };
  return table;
}

bool is_year(std::string_view w) {
  if (w.size() != 4 || !std::all_of(w.begin(), w.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
      })) {
    return false;
  }
  const int y = std::stoi(std::string(w));
  return y >= 1000 && y <= 2099;
}

std::string shifted_year(std::string_view w) {
  const int y = std::stoi(std::string(w));
  int out = 1800 + (y * 7 + 13) % 200;
  if (out == y) ++out;
  return std::to_string(out);
}

struct Lexicon {
  std::string_view category;
  std::map<std::string_view, std::string_view> swaps;
};

// Priority order: the first category present in a description is the one
// rewritten, so each description receives one kind of error.
const std::vector<Lexicon>& alignment_lexicons() {
  static const std::vector<Lexicon> lexicons = {
      {"color",
       {{"red", "green"}, {"green", "blue"}, {"blue", "yellow"}, {"yellow", "purple"},
        {"purple", "orange"}, {"orange", "pink"}, {"pink", "brown"}, {"brown", "black"},
        {"black", "white"}, {"white", "gray"}, {"gray", "red"}, {"grey", "red"},
        {"golden", "silver"}, {"silver", "golden"}}},
      {"age",
       {{"young", "elderly"}, {"elderly", "young"}, {"old", "young"},
        {"teenage", "elderly"}, {"adult", "child"}, {"child", "adult"},
        {"children", "adults"}, {"adults", "children"}, {"baby", "adult"},
        {"boy", "man"}, {"girl", "woman"}, {"man", "boy"}, {"woman", "girl"},
        {"men", "boys"}, {"women", "girls"}}},
      {"clothing",
       {{"shirt", "dress"}, {"dress", "shirt"}, {"pants", "skirt"}, {"skirt", "pants"},
        {"hat", "helmet"}, {"helmet", "hat"}, {"jacket", "sweater"},
        {"sweater", "jacket"}, {"coat", "vest"}, {"vest", "coat"}, {"shoes", "boots"},
        {"boots", "shoes"}, {"suit", "robe"}, {"robe", "suit"}, {"uniform", "apron"},
        {"scarf", "tie"}, {"tie", "scarf"}}},
  };
  return lexicons;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string match_case(std::string_view like, std::string_view word) {
  std::string out(word);
  if (!like.empty() && std::isupper(static_cast<unsigned char>(like[0])) && !out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

GenerationResponse stub_replace_names(const GenerationRequest& req) {
  GenerationResponse resp{req.request_id, {}, {}};
  for (const Word& w : core_words(req.input)) {
    if (auto it = name_table().find(w.text); it != name_table().end()) {
      resp.replacements.push_back(
          {w.start, w.end, std::string(w.text), std::string(it->second), "name"});
    } else if (is_year(w.text)) {
      resp.replacements.push_back(
          {w.start, w.end, std::string(w.text), shifted_year(w.text), "date"});
    }
  }
  resp.output = apply_replacements(req.input, resp.replacements);
  return resp;
}

GenerationResponse stub_alignment_errors(const GenerationRequest& req) {
  GenerationResponse resp{req.request_id, {}, {}};
  const auto words = core_words(req.input);
  for (const Lexicon& lex : alignment_lexicons()) {
    for (const Word& w : words) {
      const std::string key = lower(w.text);
      if (auto it = lex.swaps.find(key); it != lex.swaps.end()) {
        resp.replacements.push_back({w.start, w.end, std::string(w.text),
                                     match_case(w.text, it->second),
                                     std::string(lex.category)});
      }
    }
    if (!resp.replacements.empty()) break;
  }
  resp.output = apply_replacements(req.input, resp.replacements);
  return resp;
}

constexpr std::string_view kFillerWords[] = {
    "in", "the", "middle", "of", "a", "quiet", "afternoon", "near",
    "the", "old", "town", "square", "with", "people", "walking", "by"};

constexpr std::string_view kContinuations[] = {
    "It is one of the most popular attractions in the area.",
    "The photograph was taken in the early morning.",
    "It has been featured in several books and magazines.",
    "Many visitors come to see it every year.",
    "The area is known for its mild climate.",
    "It was restored in the late twentieth century.",
    "The scene is typical of the region.",
    "It remains a well known landmark today.",
};

GenerationResponse stub_continue(const GenerationRequest& req) {
  GenerationResponse resp{req.request_id, {}, {}};
  if (req.budget_tokens) {
    const int n = std::max(1, *req.budget_tokens);
    std::vector<std::string_view> words;
    const std::size_t offset = fnv1a(req.input) % std::size(kFillerWords);
    for (int i = 0; i < n; ++i) {
      words.push_back(kFillerWords[(offset + static_cast<std::size_t>(i)) %
                                   std::size(kFillerWords)]);
    }
    resp.output = join(words) + ".";
    return resp;
  }
  std::vector<std::string_view> sentences;
  const std::size_t first = fnv1a(req.input) % std::size(kContinuations);
  for (int i = 0; i < std::max(1, req.max_new_sentences); ++i) {
    sentences.push_back(kContinuations[(first + static_cast<std::size_t>(i)) %
                                       std::size(kContinuations)]);
  }
  resp.output = join(sentences);
  return resp;
}

}  // namespace

GenerationResponse StubGenerationProvider::generate(const GenerationRequest& request) {
  switch (request.task) {
    case GenerationTask::kReplaceNamesAndDates:
      return stub_replace_names(request);
    case GenerationTask::kInjectAlignmentErrors:
      return stub_alignment_errors(request);
    case GenerationTask::kContinueText:
      return stub_continue(request);
  }
  throw ValidationError("unknown generation task");
}

// --- remote provider --------------------------------------------------------

RemoteGenerationProvider::RemoteGenerationProvider(
    std::unique_ptr<LineTransport> transport)
    : transport_(std::move(transport)) {
  perform_handshake(*transport_, {kProtocolVersion, "generation", "generation"});
}

RemoteGenerationProvider::~RemoteGenerationProvider() = default;

GenerationResponse RemoteGenerationProvider::generate(const GenerationRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string line = transport_->round_trip(to_json(request).dump());
  GenerationResponse resp = generation_response_from_json(parse_message(line, "result"));
  if (resp.request_id != request.request_id) {
    throw ProtocolError("generation response id '" + resp.request_id +
                        "' does not match request '" + request.request_id + "'");
  }
  return resp;
}

// --- transcripts ------------------------------------------------------------

TranscriptProvider::TranscriptProvider(std::filesystem::path dir,
                                       std::unique_ptr<GenerationProvider> inner)
    : dir_(std::move(dir)), inner_(std::move(inner)) {
  std::filesystem::create_directories(dir_);
}

GenerationResponse TranscriptProvider::generate(const GenerationRequest& request) {
  const std::string key = transcript_key(request);
  const auto path = dir_ / (key + ".json");
  std::lock_guard<std::mutex> lock(mu_);
  if (std::ifstream in(path); in) {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError("corrupt transcript " + path.string() + ": " + e.what());
    }
    GenerationResponse resp = generation_response_from_json(j.at("response"));
    resp.request_id = request.request_id;
    ++hits_;
    return resp;
  }
  if (!inner_) {
    throw AdapterError("no stored transcript for request " + key +
                           " and no live provider configured (replay mode)",
                       false);
  }
  GenerationResponse resp = inner_->generate(request);
  ++misses_;

  ordered_json record;
  record["key"] = key;
  record["request"] = to_json(request);
  record["request"].erase("request_id");
  GenerationResponse stored = resp;
  stored.request_id.clear();
  record["response"] = to_json(stored);
  const auto tmp = dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write transcript " + tmp.string());
    out << record.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
  return resp;
}

std::unique_ptr<GenerationProvider> make_generation_provider(std::string_view endpoint) {
  if (endpoint == "stub") return std::make_unique<StubGenerationProvider>();
  if (endpoint == "replay") return nullptr;
  return std::make_unique<RemoteGenerationProvider>(make_transport(endpoint));
}

}  // namespace descbench
