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


#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "descbench/augment.hpp"
#include "descbench/error.hpp"
#include "descbench/fixture.hpp"
#include "descbench/text.hpp"
#include "support/temp_dir.hpp"

namespace descbench {
namespace {

// Answers every request with a fixed continuation.
class FixedProvider final : public GenerationProvider {
 public:
  explicit FixedProvider(std::string output) : output_(std::move(output)) {}
  GenerationResponse generate(const GenerationRequest& request) override {
    return {request.request_id, output_, {}};
  }

 private:
  std::string output_;
};

std::multiset<std::string> token_multiset(std::string_view text) {
  std::multiset<std::string> out;
  for (auto t : tokenize(text)) out.emplace(t);
  return out;
}

// All permutations of 0..n-1 without fixed points.
std::set<std::vector<int>> enumerate_derangements(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::set<std::vector<int>> out;
  do {
    bool ok = true;
    for (int i = 0; i < n; ++i) ok = ok && p[i] != i;
    if (ok) out.insert(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

TEST(Derangement, TwoMembersSwap) {
  const std::vector<std::string> ids{"A", "B"};
  const auto m = derangement(ids, 3);
  EXPECT_EQ(m.at("A"), "B");
  EXPECT_EQ(m.at("B"), "A");
}

TEST(Derangement, FourMembersIsOneOfNineAndAllNineOccur) {
  const auto all = enumerate_derangements(4);
  ASSERT_EQ(all.size(), 9u);
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  std::map<std::vector<int>, int> seen;
  for (std::uint64_t seed = 0; seed < 9000; ++seed) {
    const auto m = derangement(ids, seed);
    std::vector<int> p;
    for (const auto& id : ids) p.push_back(m.at(id)[0] - 'a');
    ASSERT_TRUE(all.count(p));
    ++seen[p];
  }
  EXPECT_EQ(seen.size(), 9u);
  for (const auto& [p, n] : seen) EXPECT_NEAR(n, 1000, 150);
}

TEST(Derangement, NoFixedPointsAndBijective) {
  for (std::size_t n = 2; n < 40; ++n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
    const auto m = derangement(ids, n * 31);
    std::set<std::string> targets;
    for (const auto& id : ids) {
      EXPECT_NE(m.at(id), id);
      targets.insert(m.at(id));
    }
    EXPECT_EQ(targets.size(), n);
  }
}

TEST(Derangement, RejectsSingletonsAndDuplicates) {
  const std::vector<std::string> one{"a"};
  EXPECT_THROW(derangement(one, 1), ValidationError);
  const std::vector<std::string> dup{"a", "a", "b"};
  EXPECT_THROW(derangement(dup, 1), ValidationError);
}

TEST(ShuffledContexts, DonorFieldsCopiedByteForByte) {
  testing::TempDir dir;
  const Corpus corpus = synthetic_corpus(2, 4);
  AugmentOptions opts;
  opts.kinds = {AugmentationKind::kShuffledContexts};
  opts.seed = 1;
  const auto rows = augment_corpus(corpus, opts);
  ASSERT_EQ(rows.size(), 2u);
  const auto& a = rows[0];
  ASSERT_TRUE(a.context_donor);
  EXPECT_EQ(*a.context_donor, corpus[1].record_id);
  EXPECT_EQ(a.provenance.donor_id, corpus[1].record_id);
  for (auto f : kContextFieldNames) {
    EXPECT_EQ(context_field(a.record, f), context_field(corpus[1], f));
  }
  EXPECT_EQ(a.record.description, corpus[0].description);
  EXPECT_EQ(a.record.image_ref, corpus[0].image_ref);
}

TEST(ShuffleWords, ClothingExamplePreservesTokens) {
  const std::string in = "a red shirt and blue pants";
  const auto out = shuffle_words(in, 5);
  EXPECT_TRUE(out.applicable);
  EXPECT_NE(out.text, in);
  EXPECT_EQ(token_multiset(out.text), token_multiset(in));
  EXPECT_EQ(shuffle_words(in, 5).text, out.text);
}

TEST(ShuffleWords, DegenerateInputs) {
  const auto same = shuffle_words("dog dog", 1);
  EXPECT_EQ(same.text, "dog dog");
  EXPECT_TRUE(same.applicable);
  EXPECT_FALSE(shuffle_words("dog", 1).applicable);
}

TEST(ShuffleWords, TwoDistinctTokensAlwaysSwap) {
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(shuffle_words("a b", s).text, "b a");
}

TEST(ProperNames, StubReplacesNameAndYear) {
  StubGenerationProvider stub;
  const std::string in = "Queen Elizabeth in 1953";
  const auto out = replace_proper_names(in, stub);
  EXPECT_TRUE(out.applicable);
  ASSERT_EQ(out.replacements.size(), 2u);
  EXPECT_EQ(out.text.find("Elizabeth"), std::string::npos);
  EXPECT_EQ(out.text.find("1953"), std::string::npos);
  EXPECT_EQ(out.text.rfind("Queen ", 0), 0u);
  EXPECT_EQ(apply_replacements(in, out.replacements), out.text);
}

TEST(ProperNames, NoNamesNotApplicable) {
  StubGenerationProvider stub;
  const auto out = replace_proper_names("A brown dog.", stub);
  EXPECT_FALSE(out.applicable);
  EXPECT_EQ(out.text, "A brown dog.");
  EXPECT_TRUE(out.replacements.empty());
}

TEST(AlignmentErrors, ColorSwapWithinCategory) {
  StubGenerationProvider stub;
  const auto out = inject_alignment_errors("a red shirt", stub);
  EXPECT_EQ(out.text, "a green shirt");
  ASSERT_EQ(out.replacements.size(), 1u);
  EXPECT_EQ(out.replacements[0].category, "color");
  EXPECT_NE(out.replacements[0].replacement, out.replacements[0].original);
}

TEST(AlignmentErrors, NoTargetTermsNotApplicable) {
  StubGenerationProvider stub;
  const auto out = inject_alignment_errors("Mountains at dusk.", stub);
  EXPECT_FALSE(out.applicable);
  EXPECT_EQ(out.text, "Mountains at dusk.");
}

// A provider whose replacement list disagrees with its output.
class LyingProvider final : public GenerationProvider {
 public:
  GenerationResponse generate(const GenerationRequest& r) override {
    return {r.request_id, "something else", {{0, 1, "a", "b", "color"}}};
  }
};

TEST(AlignmentErrors, InconsistentProviderIsProtocolError) {
  LyingProvider p;
  EXPECT_THROW(inject_alignment_errors("a red shirt", p), ProtocolError);
}

TEST(ContinuationLong, AppendsOneSentence) {
  FixedProvider p("It is fast.");
  EXPECT_EQ(continuation_long("A dog runs.", p).text, "A dog runs. It is fast.");
  EXPECT_EQ(continuation_long("A dog runs", p).text, "A dog runs. It is fast.");
  StubGenerationProvider stub;
  const std::string in = "A statue in a park.";
  const auto out = continuation_long(in, stub);
  EXPECT_EQ(out.text.rfind(in, 0), 0u);
  const std::string added = out.text.substr(in.size());
  EXPECT_EQ(std::count_if(added.begin(), added.end(),
                          [](char c) { return c == '.' || c == '!' || c == '?'; }),
            1);
}

TEST(ContinuationShort, KeepsFirstHalfAndStaysNearLength) {
  StubGenerationProvider stub;
  const std::string in = "one two three four five six seven eight nine ten";
  const auto out = continuation_short(in, stub);
  EXPECT_EQ(out.text.rfind("one two three four five ", 0), 0u);
  EXPECT_EQ(out.text.find("six"), std::string::npos);
  const double n = static_cast<double>(token_count(out.text));
  EXPECT_GE(n, 8.0);
  EXPECT_LE(n, 12.0);
  EXPECT_FALSE(continuation_short("too short here", stub).applicable);
}

TEST(ContinuationShort, LengthWithinTwentyPercentForManyInputs) {
  StubGenerationProvider stub;
  const Corpus corpus = synthetic_corpus(60, 8);
  for (const auto& rec : corpus) {
    const auto out = continuation_short(rec.description, stub);
    if (!out.applicable) continue;
    const double n = static_cast<double>(token_count(rec.description));
    const double m = static_cast<double>(token_count(out.text));
    EXPECT_LE(std::abs(m - n), 0.2 * n + 1e-9) << rec.description << " -> " << out.text;
  }
}

TEST(ContinuationShort, OverlongProviderOutputIsTruncated) {
  FixedProvider p("w w w w w w w w w w w w w w w w w w w w");
  const auto out = continuation_short("one two three four five six seven eight nine ten", p);
  EXPECT_EQ(token_count(out.text), 12u);
}

TEST(IrrelevantSentence, EndsWithChosenPoolSentence) {
  const auto pool = default_irrelevant_pool();
  ASSERT_EQ(pool.size(), 10u);
  EXPECT_EQ(pool[0], "The elephant is the largest existing land animal.");
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto out = append_irrelevant_sentence("A dog", pool, s);
    ASSERT_TRUE(out.pool_index);
    const std::string& chosen = pool[*out.pool_index];
    EXPECT_EQ(out.text, "A dog. " + chosen);
  }
}

TEST(IrrelevantSentence, IndexUniformAcrossSeeds) {
  const auto pool = default_irrelevant_pool();
  std::vector<double> counts(10, 0.0);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    counts[*append_irrelevant_sentence("x", pool, static_cast<std::uint64_t>(s)).pool_index] += 1;
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  const double p = 1.0 - boost::math::cdf(boost::math::chi_squared(9), chi2);
  EXPECT_GT(p, 0.01) << "chi2 = " << chi2;
}

TEST(IrrelevantSentence, PoolMustHaveTenEntries) {
  const std::vector<std::string> pool(9, "x.");
  EXPECT_THROW(append_irrelevant_sentence("a", pool, 1), ValidationError);
}

TEST(ExactRepetition, Definition) {
  EXPECT_EQ(exact_repetition("A dog."), "A dog. A dog.");
  for (std::string s : {"a", "A dog runs.", "x  y"}) {
    EXPECT_EQ(exact_repetition(s).size(), 2 * s.size() + 1);
  }
  EXPECT_EQ(exact_repetition(exact_repetition("ab")), "ab ab ab ab");
}

TEST(KindNames, RoundTripAndList) {
  for (auto k : kAllAugmentationKinds) {
    EXPECT_EQ(augmentation_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(parse_kind_list("all").size(), 10u);
  const auto two = parse_kind_list("exact_repetition,shuffled_words");
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], AugmentationKind::kExactRepetition);
  EXPECT_THROW(parse_kind_list("nope"), ValidationError);
}

class AugmentCorpusTest : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = apply_split(synthetic_corpus(30, 6), make_split(synthetic_corpus(30, 6), 2));
    write_fixture_images(corpus_, dir_.path(), 6, 32, 24);
    objects_ = ObjectLibrary::builtin();
    opts_.seed = 99;
    opts_.image_root = dir_.path();
    opts_.objects = &objects_;
    opts_.provider = &stub_;
  }

  testing::TempDir dir_;
  Corpus corpus_;
  ObjectLibrary objects_;
  StubGenerationProvider stub_;
  AugmentOptions opts_;
};

TEST_F(AugmentCorpusTest, OneRowPerRecordAndKind) {
  const auto rows = augment_corpus(corpus_, opts_);
  EXPECT_EQ(rows.size(), corpus_.size() * 10);
  for (const auto& r : rows) {
    EXPECT_EQ(r.record.record_id, r.base_id);
    const auto& base = corpus_.at(r.base_id);
    // Fields outside the mutated set are untouched.
    const auto mutated = mutated_fields(r.kind);
    auto same_unless = [&](std::string_view name, const std::string& a, const std::string& b) {
      if (std::find(mutated.begin(), mutated.end(), name) == mutated.end()) {
        EXPECT_EQ(a, b) << to_string(r.kind) << " changed " << name;
      }
    };
    same_unless("description", r.record.description, base.description);
    same_unless("image_ref", r.record.image_ref, base.image_ref);
    same_unless("caption", r.record.caption, base.caption);
    same_unless("article_title", r.record.article_title, base.article_title);
    same_unless("section_text", r.record.section_text, base.section_text);
  }
}

TEST_F(AugmentCorpusTest, ShufflesStayWithinSplit) {
  const auto rows = augment_corpus(corpus_, opts_);
  for (const auto& r : rows) {
    if (!r.provenance.donor_id) continue;
    EXPECT_NE(*r.provenance.donor_id, r.base_id);
    EXPECT_EQ(corpus_.at(*r.provenance.donor_id).split, corpus_.at(r.base_id).split);
    if (r.kind == AugmentationKind::kShuffledDescriptions) {
      EXPECT_EQ(r.record.description, corpus_.at(*r.provenance.donor_id).description);
    }
  }
}

TEST_F(AugmentCorpusTest, DeterministicIncludingImages) {
  const auto a = augment_corpus(corpus_, opts_);
  const std::string img = testing::slurp(dir_.path() / "images/r0003.frankenstein_image.png");
  const auto b = augment_corpus(corpus_, opts_);
  EXPECT_EQ(a, b);
  EXPECT_EQ(testing::slurp(dir_.path() / "images/r0003.frankenstein_image.png"), img);
  opts_.jobs = 4;
  EXPECT_EQ(augment_corpus(corpus_, opts_), a);
}

TEST_F(AugmentCorpusTest, JsonlRoundTrip) {
  const auto rows = augment_corpus(corpus_, opts_);
  std::stringstream ss;
  write_augmented(rows, ss);
  EXPECT_EQ(read_augmented(ss), rows);
}

TEST_F(AugmentCorpusTest, GenerationKindsNeedProvider) {
  opts_.provider = nullptr;
  opts_.kinds = {AugmentationKind::kProperNameReplacement};
  EXPECT_THROW(augment_corpus(corpus_, opts_), ValidationError);
  opts_.kinds = {AugmentationKind::kExactRepetition};
  EXPECT_EQ(augment_corpus(corpus_, opts_).size(), corpus_.size());
}

TEST_F(AugmentCorpusTest, SingletonSplitGroupHasNoDonor) {
  std::vector<ContextedRecord> recs = corpus_.records();
  for (auto& r : recs) r.split = Split::kTrain;
  recs[4].split = Split::kTest;
  opts_.kinds = {AugmentationKind::kShuffledDescriptions};
  const auto rows = augment_corpus(Corpus(recs), opts_);
  for (const auto& r : rows) {
    EXPECT_EQ(r.applicable, r.base_id != recs[4].record_id);
  }
}

}  // namespace
}  // namespace descbench
