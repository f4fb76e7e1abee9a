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

#ifndef DESCBENCH_FIXTURE_HPP_
#define DESCBENCH_FIXTURE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "descbench/dataset.hpp"
#include "descbench/ratings.hpp"

namespace descbench {

// Synthetic corpora and simulated annotators for tests and demos.

struct FixtureOptions {
  std::size_t records = 12;
  std::uint64_t seed = 0;
  double identical_fraction = 0.2;  // at least one identical record when records >= 2
  bool ratings = true;
  double inattentive_rate = 0.3;  // simulated raters answering at random
  int image_width = 64;
  int image_height = 48;
};

/// Unique descriptions mixing names, years, colors, clothing and ages.
/// image_ref is "images/<record_id>.png".
Corpus synthetic_corpus(std::size_t records, std::uint64_t seed,
                        double identical_fraction = 0.2);

/// Writes one PNG per record below `image_root`.
void write_fixture_images(const Corpus& corpus, const std::filesystem::path& image_root,
                          std::uint64_t seed, int width = 64, int height = 48);

/// Drives an in-memory AnnotationService with simulated participants until
/// recruitment closes.
std::vector<RatingRecord> simulate_ratings(const Corpus& corpus,
                                           const std::filesystem::path& image_root,
                                           std::uint64_t seed, double inattentive_rate = 0.3);

struct FixtureSummary {
  std::filesystem::path dataset;     // dataset.jsonl
  std::filesystem::path image_root;  // the output directory itself
  std::filesystem::path ratings;     // ratings.jsonl, empty when disabled
  std::size_t records = 0;
  std::size_t identical = 0;
  std::size_t rating_rows = 0;
};

FixtureSummary make_fixture(const std::filesystem::path& out, const FixtureOptions& options);

}  // namespace descbench

#endif  // DESCBENCH_FIXTURE_HPP_
