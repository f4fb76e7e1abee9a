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

#ifndef DESCBENCH_TEXT_HPP_
#define DESCBENCH_TEXT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace descbench {

/// Splits text into tokens, where a token is a maximal run of non-whitespace
/// bytes. The views point into `text`.
std::vector<std::string_view> tokenize(std::string_view text);

std::size_t token_count(std::string_view text);

std::string join(std::span<const std::string_view> tokens,
                 std::string_view sep = " ");
std::string join(std::span<const std::string> tokens,
                 std::string_view sep = " ");

std::string_view trim(std::string_view text);

/// Trims and collapses internal whitespace runs to a single space. No case
/// folding.
std::string normalize_whitespace(std::string_view text);

bool ends_with_terminal_punctuation(std::string_view text);

/// Appends `sentence` to `text` with a single space, inserting a period first
/// when `text` lacks terminal punctuation.
std::string append_sentence(std::string_view text, std::string_view sentence);

}  // namespace descbench

#endif  // DESCBENCH_TEXT_HPP_
