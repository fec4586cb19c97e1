#include "elicit/pool_builder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "elicit/error.hpp"
#include "pool_oracle.hpp"
#include "test_support.hpp"

namespace elicit {
namespace {

using ::elicit::testing::check_pool;
using ::elicit::testing::random_corpus;

FormattedComment fc(std::string id, std::string video, double t) {
  return {id, std::move(video), t, CommentType::kGoodExecution, "about " + id, {id}};
}

TEST(Segments, GroupByExactTimestamp) {
  const std::vector<FormattedComment> comments = {fc("b", "v2", 3.0), fc("a", "v1", 12.5),
                                                  fc("c", "v1", 12.5), fc("d", "v1", 12.50001)};
  const auto segs = group_segments(comments, 10.0);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].segment_id, "v1@12.5");
  EXPECT_EQ(segs[0].positive_ids, (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(segs[0].window_start, 2.5);
  EXPECT_EQ(segs[1].segment_id, "v1@12.50001");
  EXPECT_EQ(segs[2].segment_id, "v2@3");
  EXPECT_EQ(make_segment_id("v", 0.1), "v@0.1");
}

TEST(CommentsFromPairs, FirstPairPerCommentWins) {
  const std::vector<QAPair> pairs = {
      {"a/qa", "v", 1, CommentType::kGoodExecution, "q1?", "ans1", "a"},
      {"a/qa2", "v", 1, CommentType::kGoodExecution, "q2?", "ans2", "a"},
      {"b/qa", "v", 2, CommentType::kTipsForImprovement, "q3?", "ans3", "b"}};
  const auto out = comments_from_pairs(pairs);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text, "ans1");
  EXPECT_EQ(out[1].type, CommentType::kTipsForImprovement);
}

TEST(BuildPool, RandomCorporaSatisfyEveryProperty) {
  Rng rng(99);
  std::size_t pools = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto corpus = random_corpus(rng);
    const PoolCorpus index(corpus.comments, corpus.scenario_by_video);
    const auto L = 1 + static_cast<std::size_t>(rng.uniform_below(corpus.comments.size()));
    for (const auto& seg : group_segments(corpus.comments)) {
      if (seg.positive_ids.size() > L) {
        EXPECT_THROW(build_pool(seg, index, L, 1), ValidationError);
        continue;
      }
      const auto pool = build_pool(seg, index, L, rng.next());
      ASSERT_EQ(check_pool(pool, seg, corpus, L), "") << "trial " << trial;
      ++pools;
    }
  }
  EXPECT_GT(pools, 1000u);
}

TEST(BuildPool, NegativesAreUniformWithinATier) {
  // One positive and 20 same-video candidates; a pool of 6 draws 5 of them.
  std::vector<FormattedComment> comments = {fc("p", "v", 0)};
  for (int i = 0; i < 20; ++i) comments.push_back(fc("n" + std::to_string(i), "v", 1.0 + i));
  const PoolCorpus index(comments, {{"v", "s"}});
  const Segment seg{"v@0", "v", 0, -10, {"p"}};
  std::map<std::string, int> hits;
  const int trials = 20000;
  for (int s = 0; s < trials; ++s) {
    for (const auto& e : build_pool(seg, index, 6, s).entries) ++hits[e.comment_id];
  }
  const double expected = trials * 5.0 / 20.0;
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(hits["n" + std::to_string(i)], expected, 0.05 * expected);
  }
}

TEST(BuildPool, DeterministicAndOrderIndependent) {
  Rng rng(5);
  auto corpus = random_corpus(rng);
  while (corpus.comments.size() < 30) corpus = random_corpus(rng);
  const PoolCorpus index(corpus.comments, corpus.scenario_by_video);
  auto segs = group_segments(corpus.comments);
  const auto a = build_all_pools(segs, index, 20, 7);
  std::reverse(segs.begin(), segs.end());
  auto b = build_all_pools(segs, index, 20, 7);
  std::reverse(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_NE(a, build_all_pools(group_segments(corpus.comments), index, 20, 8));
  for (const auto& p : a) EXPECT_EQ(p.seed, derive_seed(7, p.segment_id));
}

TEST(BuildPool, ShortCorpusNamesTheShortfall) {
  const std::vector<FormattedComment> comments = {fc("a", "v", 0), fc("b", "v", 1)};
  const PoolCorpus index(comments, {{"v", "s"}});
  const Segment seg{"v@0", "v", 0, -10, {"a"}};
  try {
    build_pool(seg, index, 50, 0);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("short by 48"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_pool({"v@9", "v", 9, -1, {}}, index, 2, 0), ValidationError);
  EXPECT_THROW(build_pool({"v@9", "v", 9, -1, {"zzz"}}, index, 2, 0), ValidationError);
}

TEST(PoolCorpus, RejectsUnknownScenarioAndDuplicates) {
  const std::vector<FormattedComment> comments = {fc("a", "v", 0), fc("a", "v", 1)};
  EXPECT_THROW(PoolCorpus(comments, {{"v", "s"}}), ValidationError);
  EXPECT_THROW(PoolCorpus(comments, {}), ValidationError);
}

TEST(PoolFile, RoundTrip) {
  Rng rng(2);
  auto corpus = random_corpus(rng);
  while (corpus.comments.size() < 10) corpus = random_corpus(rng);
  const PoolCorpus index(corpus.comments, corpus.scenario_by_video);
  const auto pools = build_all_pools(group_segments(corpus.comments), index, 8, 3);
  std::stringstream buf;
  write_pools(buf, pools);
  EXPECT_EQ(read_pools(buf), pools);
  ::elicit::testing::TempDir dir;
  save_pools(dir / "pools.jsonl", pools);
  EXPECT_EQ(load_pools(dir / "pools.jsonl"), pools);
  std::istringstream bad(R"({"segment_id":"x","L":1,"seed":0,"entries":[{"comment_id":"a","text":"t","provenance":"bogus"}]})");
  EXPECT_THROW(read_pools(bad), ValidationError);
}

TEST(Provenance, NamesRoundTrip) {
  for (auto p : {Provenance::kPositive, Provenance::kSameVideo, Provenance::kSameScenario,
                 Provenance::kRandom}) {
    EXPECT_EQ(parse_provenance(to_string(p)), p);
  }
  EXPECT_FALSE(parse_provenance("other").has_value());
}

}  // namespace
}  // namespace elicit
