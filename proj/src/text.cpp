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

#include "descbench/text.hpp"

namespace descbench {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

template <typename Range>
std::string join_range(const Range& tokens, std::string_view sep) {
  std::string out;
  bool first = true;
  for (const auto& t : tokens) {
    if (!first) out.append(sep);
    out.append(t);
    first = false;
  }
  return out;
}

}  // namespace

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

std::string join(std::span<const std::string_view> tokens,
                 std::string_view sep) {
  return join_range(tokens, sep);
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  return join_range(tokens, sep);
}

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::string normalize_whitespace(std::string_view text) {
  return join(tokenize(text));
}

bool ends_with_terminal_punctuation(std::string_view text) {
  text = trim(text);
  if (text.empty()) return false;
  const char last = text.back();
  return last == '.' || last == '!' || last == '?';
}

std::string append_sentence(std::string_view text, std::string_view sentence) {
  std::string out(text);
  if (!ends_with_terminal_punctuation(text)) out.push_back('.');
  out.push_back(' ');
  out.append(sentence);
  return out;
}

}  // namespace descbench
