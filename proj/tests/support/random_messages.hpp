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


#ifndef DESCBENCH_TESTS_SUPPORT_RANDOM_MESSAGES_HPP_
#define DESCBENCH_TESTS_SUPPORT_RANDOM_MESSAGES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "descbench/rng.hpp"
#include "descbench/scoring.hpp"

namespace descbench::testing {

// Text drawn from whole code points, including JSON metacharacters.
inline std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet = {
      "a", "b", "c", " ", "x", "Z", "\"", "\\", "\n", "\t", "/", "{", "}",
      "[", "]", ":", ",", "\x01", "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x98\x80"};
  std::string s;
  for (std::size_t n = uniform_index(rng, max_len + 1); n > 0; --n) {
    s += alphabet[uniform_index(rng, alphabet.size())];
  }
  return s;
}

inline ScoreRequest random_request(Rng& rng) {
  ScoreRequest r;
  r.request_id = "r" + std::to_string(rng() % 100000) + "#" + random_text(rng, 5);
  if (uniform_index(rng, 2)) {
    r.image.path = "/img/" + random_text(rng, 10);
  } else {
    r.image.inline_b64 = random_text(rng, 30);
  }
  r.description = random_text(rng, 60);
  if (uniform_index(rng, 2)) r.context = random_text(rng, 40);
  if (uniform_index(rng, 2)) {
    r.prompt = LikelihoodPrompt{random_text(rng, 20), random_text(rng, 20)};
  }
  return r;
}

inline ScoreResponse random_response(Rng& rng) {
  ScoreResponse r;
  r.request_id = "id" + std::to_string(rng() % 1000000) + random_text(rng, 4);
  if (uniform_index(rng, 3)) {
    r.score = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniform_index(rng, 12)));
  }
  if (uniform_index(rng, 2)) {
    ScoreDiagnostics d;
    for (std::size_t k = uniform_index(rng, 8); k > 0; --k) {
      d.token_logliks.push_back(-uniform01(rng) * 20.0);
    }
    if (uniform_index(rng, 2)) d.target_start = uniform_index(rng, 5);
    if (uniform_index(rng, 2)) d.parts["image"] = uniform01(rng);
    r.diagnostics = d;
  }
  return r;
}

}  // namespace descbench::testing

#endif  // DESCBENCH_TESTS_SUPPORT_RANDOM_MESSAGES_HPP_
