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

#include "descbench/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <opencv2/imgproc.hpp>

#include "descbench/annotation.hpp"
#include "descbench/error.hpp"
#include "descbench/images.hpp"
#include "descbench/rng.hpp"
#include "descbench/text.hpp"

namespace descbench {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kNames[] = {"Elizabeth", "John", "Mary", "George", "Alice",
                                       "Thomas", "Maria", "Peter", "Charles", "Anne"};
constexpr std::string_view kPlaces[] = {"London", "Paris", "Berlin", "Tokyo", "Madrid",
                                        "Chicago", "Oxford", "Rome", "Vienna", "Boston"};
constexpr std::string_view kColors[] = {"red", "blue", "green", "yellow", "black",
                                        "white", "purple", "orange", "brown", "gray"};
constexpr std::string_view kClothing[] = {"shirt", "dress", "jacket", "hat", "coat",
                                          "scarf", "uniform", "sweater", "suit", "boots"};
constexpr std::string_view kPeople[] = {"woman", "man", "girl", "boy", "child"};
constexpr std::string_view kScenes[] = {"lighthouse", "bridge", "market", "harbor", "garden",
                                        "station", "cathedral", "valley", "forest", "library"};
constexpr std::string_view kMoods[] = {"quiet", "crowded", "misty", "sunlit", "narrow",
                                       "ancient", "modern", "snowy", "rainy", "busy"};
constexpr std::string_view kActions[] = {"reading", "walking", "smiling", "waving", "sitting",
                                         "standing", "painting", "singing"};
constexpr std::string_view kTitles[] = {"Architecture", "History", "Geography", "Portraits",
                                        "Transport", "Nature", "Culture", "Sculptures"};
constexpr std::string_view kSections[] = {"Overview", "Background", "Gallery", "Design",
                                          "Legacy", "Location"};

template <std::size_t N>
std::string_view pick(const std::string_view (&xs)[N], Rng& rng) {
  return xs[uniform_index(rng, N)];
}

// "a" or "an" followed by `word`.
std::string article(std::string_view word) {
  const bool vowel = !word.empty() && std::string_view("aeiou").find(word[0]) != std::string_view::npos;
  return (vowel ? "an " : "a ") + std::string(word);
}

std::string describe(Rng& rng) {
  std::string s;
  switch (uniform_index(rng, 4)) {
    case 0:
      s = std::string(pick(kNames, rng)) + " wearing " + article(pick(kColors, rng)) +
          " " + std::string(pick(kClothing, rng)) + " in " + std::string(pick(kPlaces, rng)) +
          " in " + std::to_string(1850 + uniform_index(rng, 170)) + ".";
      break;
    case 1:
      s = article(pick(kMoods, rng));
      s[0] = 'A';
      s += " " + std::string(pick(kScenes, rng)) +
          " seen from the " + std::string(pick(kScenes, rng)) + " at dusk.";
      break;
    case 2:
      s = (uniform_index(rng, 2) ? "An old " : "A young ") +
          std::string(pick(kPeople, rng)) + " " + std::string(pick(kActions, rng)) +
          " beside " + article(pick(kColors, rng)) + " " + std::string(pick(kScenes, rng)) + ".";
      break;
    default:
      s = "The " + std::string(pick(kScenes, rng)) + " of " + std::string(pick(kPlaces, rng)) +
          " with " + std::to_string(2 + uniform_index(rng, 9)) + " " +
          std::string(pick(kMoods, rng)) + " towers.";
      break;
  }
  return s;
}

}  // namespace

Corpus synthetic_corpus(std::size_t records, std::uint64_t seed, double identical_fraction) {
  Rng rng(derive_seed(seed, "synthetic_corpus"));
  std::size_t identical =
      static_cast<std::size_t>(std::llround(identical_fraction * static_cast<double>(records)));
  if (records >= 2) identical = std::clamp<std::size_t>(identical, 1, records - 1);

  // Which records get a caption equal to their description.
  std::vector<char> same(records, 0);
  std::fill(same.begin(), same.begin() + static_cast<std::ptrdiff_t>(identical), 1);
  shuffle(std::span<char>(same), rng);
  return Corpus([&] {
    std::set<std::string> seen;
    std::vector<ContextedRecord> out;
    for (std::size_t i = 0; i < records; ++i) {
      ContextedRecord r;
      char id[32];
      std::snprintf(id, sizeof(id), "r%04zu", i);
      r.record_id = id;
      r.image_ref = "images/" + r.record_id + ".png";
      r.description = describe(rng);
      if (!seen.insert(r.description).second) {
        r.description = append_sentence(r.description, "View " + std::to_string(i) + ".");
        seen.insert(r.description);
      }
      r.article_title = std::string(pick(kTitles, rng)) + " of " + std::string(pick(kPlaces, rng));
      r.first_paragraph =
          "This article covers the " + std::string(pick(kScenes, rng)) + " and its surroundings.";
      r.section_title = std::string(pick(kSections, rng));
      r.section_text = "The " + std::string(pick(kMoods, rng)) + " setting is described here.";
      r.caption = same[i] ? r.description
                          : "Figure " + std::to_string(i + 1) + ": " + r.section_title + ".";
      r.identical_to_caption = description_matches_caption(r.description, r.caption);
      out.push_back(std::move(r));
    }
    return out;
  }());
}

void write_fixture_images(const Corpus& corpus, const fs::path& image_root, std::uint64_t seed,
                          int width, int height) {
  for (const auto& rec : corpus) {
    Rng rng(derive_seed(seed, "fixture_image", rec.record_id));
    cv::Mat img(height, width, CV_8UC3,
                cv::Scalar(static_cast<double>(uniform_index(rng, 256)),
                           static_cast<double>(uniform_index(rng, 256)),
                           static_cast<double>(uniform_index(rng, 256))));
    for (int k = 0; k < 4; ++k) {
      const int x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(width)));
      const int y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(height)));
      const int w = 4 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(width / 2)));
      const int h = 4 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(height / 2)));
      cv::rectangle(img, cv::Rect(x, y, w, h),
                    cv::Scalar(static_cast<double>(uniform_index(rng, 256)),
                               static_cast<double>(uniform_index(rng, 256)),
                               static_cast<double>(uniform_index(rng, 256))),
                    cv::FILLED);
    }
    const fs::path path = image_root / rec.image_ref;
    fs::create_directories(path.parent_path());
    write_png(img, path);
  }
}

std::vector<RatingRecord> simulate_ratings(const Corpus& corpus, const fs::path& image_root,
                                           std::uint64_t seed, double inattentive_rate) {
  AnnotationService service(corpus, image_root, default_questions(), {}, seed,
                            [] { return std::string("1970-01-01T00:00:00Z"); });
  Rng rng(derive_seed(seed, "simulated_raters"));
  auto clamp_rating = [](double v) {
    return static_cast<int>(std::clamp<long>(std::lround(v), kMinRating, kMaxRating));
  };
  // Longer descriptions earn better ratings on average.
  auto quality = [](const ContextedRecord& r) {
    return 1.5 + 0.25 * static_cast<double>(std::min<std::size_t>(token_count(r.description), 12));
  };

  const std::size_t max_participants = 50 * corpus.size() + 100;
  for (std::size_t p = 0; p < max_participants; ++p) {
    char pid[32];
    std::snprintf(pid, sizeof(pid), "p%05zu", p);
    Session s;
    try {
      s = service.create_session(pid);
    } catch (const ServiceError& e) {
      if (e.status() == ServiceError::Status::kClosed) return service.ratings();
      throw;
    }
    const bool inattentive = uniform01(rng) < inattentive_rate;
    for (std::size_t k = 0; k < s.items.size(); ++k) {
      const ContextedRecord& rec = corpus.at(s.items[k]);
      Answers pre, post;
      for (const auto& q : service.questions()) {
        double v;
        if (inattentive) {
          v = 1.0 + static_cast<double>(uniform_index(rng, 5));
        } else if (q.id == Question::kAddedInfo && rec.identical_to_caption) {
          v = 1.0 + static_cast<double>(uniform_index(rng, 2));
        } else {
          v = quality(rec) + (uniform01(rng) - 0.5) * 2.0;
        }
        pre[q.id] = clamp_rating(v);
      }
      service.submit_pre(s.session_id, k, pre);
      service.reveal(s.session_id, k);
      for (const auto& [q, v] : pre) {
        if (!asked_in(q, Phase::kPost)) continue;
        int nv = v;
        if (inattentive) {
          nv = 1 + static_cast<int>(uniform_index(rng, 5));
        } else if (!(q == Question::kAddedInfo && rec.identical_to_caption) && uniform01(rng) < 0.3) {
          nv = clamp_rating(v + (uniform01(rng) < 0.5 ? -1.0 : 1.0));
        }
        post[q] = nv;
      }
      const bool flag = !inattentive && uniform01(rng) < 0.08;
      service.submit_post(s.session_id, k, post, flag, flag ? "looks different from the image" : "");
    }
  }
  throw ValidationError("simulated annotation did not reach coverage");
}

FixtureSummary make_fixture(const fs::path& out, const FixtureOptions& options) {
  const Corpus corpus = synthetic_corpus(options.records, options.seed, options.identical_fraction);
  fs::create_directories(out);
  write_fixture_images(corpus, out, options.seed, options.image_width, options.image_height);
  FixtureSummary summary;
  summary.dataset = out / "dataset.jsonl";
  summary.image_root = out;
  summary.records = corpus.size();
  summary.identical = corpus.identical_count();
  write_corpus(corpus, summary.dataset);
  if (options.ratings) {
    const auto ratings = simulate_ratings(corpus, out, options.seed, options.inattentive_rate);
    summary.ratings = out / "ratings.jsonl";
    std::ofstream f(summary.ratings, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + summary.ratings.string());
    write_ratings(ratings, f);
    summary.rating_rows = ratings.size();
  }
  return summary;
}

}  // namespace descbench
