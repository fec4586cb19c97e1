#include "elicit/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "elicit/error.hpp"
#include "elicit/evaluator.hpp"
#include "elicit/synthetic.hpp"
#include "elicit/tokenizer.hpp"

namespace elicit {
namespace {

using Batches = std::vector<std::pair<std::size_t, std::size_t>>;

QAPair pair(std::string id, std::string q, std::string a) {
  return {id + "/qa", "v", 0.0, CommentType::kGoodExecution, std::move(q), std::move(a), id};
}

TrainConfig small_config() {
  TrainConfig c;
  c.buckets = 4096;
  c.dim = 16;
  c.batch_size = 16;
  c.epochs = 5;
  return c;
}

TEST(PlanBatches, KeepsRemainderOnlyWithTwoItems) {
  EXPECT_EQ(plan_batches(10, 4), (Batches{{0, 4}, {4, 8}, {8, 10}}));
  EXPECT_EQ(plan_batches(9, 4), (Batches{{0, 4}, {4, 8}}));
  EXPECT_EQ(plan_batches(3, 512), (Batches{{0, 3}}));
  EXPECT_EQ(plan_batches(1, 512), Batches{});
  EXPECT_EQ(plan_batches(0, 8), Batches{});
}

TEST(Train, IsDeterministic) {
  const auto corpus = make_synthetic_corpus({.pairs = 60, .videos = 6});
  const auto a = train(corpus.pairs, small_config());
  const auto b = train(corpus.pairs, small_config());
  EXPECT_EQ(a.model, b.model);
  auto other = small_config();
  other.shuffle_seed = 1;
  EXPECT_NE(train(corpus.pairs, other).model, a.model);
}

TEST(Train, LossDecreasesAndRetrievalImproves) {
  const auto corpus = make_synthetic_corpus({.pairs = 120, .videos = 10});
  auto config = small_config();
  config.epochs = 20;
  const auto result = train(corpus.pairs, config);
  ASSERT_EQ(result.epochs.size(), 20u);
  EXPECT_LT(result.epochs.back().mean_loss, 0.5 * result.epochs.front().mean_loss);
  EXPECT_EQ(result.epochs.front().batches, plan_batches(120, 16).size());

  const LocalEncoder before(
      std::make_shared<const EncoderModel>(
          EncoderModel::initialize(config.buckets, config.dim, config.init_seed)),
      "untrained");
  const LocalEncoder after(std::make_shared<const EncoderModel>(result.model), "trained");
  EXPECT_GT(single_positive_retrieval(corpus.pairs, after).recall_at.at(1),
            single_positive_retrieval(corpus.pairs, before).recall_at.at(1) + 0.3);
}

TEST(Train, TinyCorpusIsOneBatchPerEpoch) {
  const std::vector<QAPair> pairs = {pair("a", "why red?", "red thing"),
                                     pair("b", "why blue?", "blue thing"),
                                     pair("c", "why green?", "green thing")};
  auto config = small_config();
  config.batch_size = 512;
  const auto result = train(pairs, config);
  for (const auto& e : result.epochs) EXPECT_EQ(e.batches, 1u);
}

TEST(Train, UntouchedBucketsKeepInitialWeights) {
  const std::vector<QAPair> pairs = {pair("a", "alpha", "beta"), pair("b", "gamma", "delta")};
  auto config = small_config();
  const auto initial = EncoderModel::initialize(config.buckets, config.dim, config.init_seed);
  const auto result = train(pairs, config);
  std::set<std::uint32_t> touched;
  for (const auto* t : {"alpha", "beta", "gamma", "delta"}) {
    touched.insert(token_bucket(t, config.buckets));
  }
  for (std::uint32_t b = 0; b < config.buckets; ++b) {
    const auto r0 = initial.row(b), r1 = result.model.row(b);
    const bool same = std::equal(r0.begin(), r0.end(), r1.begin());
    EXPECT_EQ(same, !touched.contains(b)) << b;
  }
}

TEST(Train, RejectsTooFewPairsAndBadConfig) {
  const std::vector<QAPair> one = {pair("a", "q?", "a")};
  EXPECT_THROW(train(one, small_config()), ValidationError);
  auto bad = small_config();
  bad.lr = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config();
  bad.batch_size = 1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = small_config();
  bad.beta2 = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

}  // namespace
}  // namespace elicit
