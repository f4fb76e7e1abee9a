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

#ifndef DESCBENCH_RNG_HPP_
#define DESCBENCH_RNG_HPP_

// Seeded randomness. Every stochastic step draws from an engine seeded by
// derive_seed(master, labels...), so results do not depend on evaluation
// order or thread scheduling. Bounded draws avoid std distributions, whose
// output is implementation-defined.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace descbench {

using Rng = std::mt19937_64;

constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
inline std::uint64_t absorb(std::uint64_t h, std::string_view label) {
  // Length prefix keeps ("ab","c") and ("a","bc") apart.
  h = mix64(h ^ label.size());
  return mix64(fnv1a(label, h));
}
inline std::uint64_t absorb(std::uint64_t h, std::uint64_t value) {
  return mix64(h ^ mix64(value));
}
}  // namespace detail

template <typename... Labels>
std::uint64_t derive_seed(std::uint64_t master, const Labels&... labels) {
  std::uint64_t h = mix64(master);
  ((h = detail::absorb(h, labels)), ...);
  return h;
}

/// Unbiased integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n + 1) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x > limit);
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace descbench

#endif  // DESCBENCH_RNG_HPP_
