#include "elicit/contrastive.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"
#include "elicit/tokenizer.hpp"

namespace elicit {
namespace {

std::vector<Embedding> random_embeddings(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    out.push_back(Embedding::normalized(std::move(v)));
  }
  return out;
}

// Direct evaluation of the mean negative log-softmax of the diagonal.
double loss_oracle(const std::vector<Embedding>& q, const std::vector<Embedding>& c, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    long double z = 0;
    for (std::size_t j = 0; j < c.size(); ++j) z += std::exp((long double)cosine_sim(q[i], c[j]) / tau);
    total += -(cosine_sim(q[i], c[i]) / tau - static_cast<double>(std::log(z)));
  }
  return total / static_cast<double>(q.size());
}

TEST(InfoNce, SinglePairHasZeroLoss) {
  const std::vector<Embedding> q = {Embedding::basis(4, 1)};
  const std::vector<Embedding> c = {Embedding::normalized({0.3, 0.1, 0.2, 0.9})};
  EXPECT_EQ(info_nce_loss(q, c, 0.05), 0.0);
}

TEST(InfoNce, OrthogonalPairsClosedForm) {
  const std::vector<Embedding> e = {Embedding::basis(2, 0), Embedding::basis(2, 1)};
  const double want = std::log1p(std::exp(-20.0));
  // log-sum-exp minus the diagonal logit of 20 leaves about 1e-15 absolute precision.
  EXPECT_NEAR(info_nce_loss(e, e, 0.05), want, 1e-14);
  EXPECT_NEAR(want, 2.06e-9, 0.01e-9);
}

TEST(InfoNce, IdenticalEmbeddingsGiveLogB) {
  for (std::size_t b : {2u, 3u, 8u, 33u}) {
    const std::vector<Embedding> e(b, Embedding::normalized({1, -2, 0.5}));
    EXPECT_NEAR(info_nce_loss(e, e, 0.05), std::log(static_cast<double>(b)), 1e-12);
  }
}

TEST(InfoNce, MatchesOracleOnRandomBatches) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = 2 + rng.uniform_below(15);
    const auto dim = 2 + rng.uniform_below(30);
    const auto q = random_embeddings(rng, b, dim);
    const auto c = random_embeddings(rng, b, dim);
    const double tau = 0.02 + rng.uniform01();
    EXPECT_NEAR(info_nce_loss(q, c, tau), loss_oracle(q, c, tau), 1e-9);
  }
}

TEST(InfoNce, RotationInvariant) {
  Rng rng(4);
  const auto q = random_embeddings(rng, 6, 3);
  const auto c = random_embeddings(rng, 6, 3);
  const double a = 0.7, ca = std::cos(a), sa = std::sin(a);
  auto rotate = [&](const std::vector<Embedding>& in) {
    std::vector<Embedding> out;
    for (const auto& e : in) {
      out.emplace_back(std::vector<double>{ca * e[0] - sa * e[1], sa * e[0] + ca * e[1], e[2]});
    }
    return out;
  };
  EXPECT_NEAR(info_nce_loss(q, c, 0.1), info_nce_loss(rotate(q), rotate(c), 0.1), 1e-12);
}

TEST(InfoNce, DiagonalDominantLossGrowsWithTau) {
  Rng rng(8);
  auto q = random_embeddings(rng, 5, 16);
  double prev = -1;
  for (double tau : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0}) {
    const double loss = info_nce_loss(q, q, tau);
    EXPECT_GT(loss, prev);
    prev = loss;
  }
}

TEST(InfoNce, RejectsBadInput) {
  const std::vector<Embedding> two = {Embedding::basis(2, 0), Embedding::basis(2, 1)};
  const std::vector<Embedding> one = {Embedding::basis(2, 0)};
  const std::vector<Embedding> other_dim = {Embedding::basis(2, 0), Embedding::basis(3, 1)};
  EXPECT_THROW(info_nce_loss({}, {}, 0.05), ValidationError);
  EXPECT_THROW(info_nce_loss(two, one, 0.05), ValidationError);
  EXPECT_THROW(info_nce_loss(two, two, 0.0), ValidationError);
  EXPECT_THROW(info_nce_loss(two, other_dim, 0.05), ValidationError);
  const std::vector<Embedding> nan = {Embedding(std::vector<double>{NAN, 0}),
                                      Embedding::basis(2, 1)};
  EXPECT_THROW(info_nce_loss(nan, two, 0.05), ValidationError);
}

double model_loss(const std::vector<std::string>& q, const std::vector<std::string>& c,
                  const EncoderModel& m, double tau) {
  std::vector<Embedding> eq, ec;
  for (const auto& t : q) eq.push_back(m.encode(t));
  for (const auto& t : c) ec.push_back(m.encode(t));
  return info_nce_loss(eq, ec, tau);
}

TEST(LossGradients, MatchesCentralDifferences) {
  auto model = EncoderModel::initialize(32, 6, 3);
  const std::vector<std::string> q = {"a b c", "d e", "f a a", ""};
  const std::vector<std::string> c = {"b g", "h i d", "j", "k l m n"};
  const double tau = 0.3;
  const auto lg = loss_gradients(q, c, model, tau);
  EXPECT_NEAR(lg.loss, model_loss(q, c, model, tau), 1e-12);

  Rng rng(1);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 50) {
    const auto bucket = static_cast<std::uint32_t>(rng.uniform_below(32));
    const auto k = static_cast<std::size_t>(rng.uniform_below(6));
    auto& w = model.mutable_row(bucket)[k];
    const double saved = w;
    w = saved + h;
    const double up = model_loss(q, c, model, tau);
    w = saved - h;
    const double down = model_loss(q, c, model, tau);
    w = saved;
    EXPECT_NEAR(lg.gradient.at(bucket, k), (up - down) / (2 * h), 1e-4)
        << "bucket " << bucket << " k " << k;
    ++checked;
  }
}

TEST(LossGradients, SparseRowsCoverOnlyTouchedBuckets) {
  const auto model = EncoderModel::initialize(1 << 16, 8, 3);
  const std::vector<std::string> q = {"alpha beta", "gamma"};
  const std::vector<std::string> c = {"delta", "alpha"};
  const auto lg = loss_gradients(q, c, model, 0.05);
  std::set<std::uint32_t> want;
  for (const auto& t : {"alpha", "beta", "gamma", "delta"}) want.insert(token_bucket(t, 1 << 16));
  EXPECT_EQ(std::set<std::uint32_t>(lg.gradient.buckets.begin(), lg.gradient.buckets.end()), want);
  EXPECT_TRUE(std::is_sorted(lg.gradient.buckets.begin(), lg.gradient.buckets.end()));
  EXPECT_EQ(lg.gradient.values.size(), want.size() * 8);
  EXPECT_EQ(lg.gradient.at(token_bucket("unused", 1 << 16), 0), 0.0);
}

TEST(LossGradients, VanishesOnAPerfectBatch) {
  // Rows of "a" and "b" are orthogonal unit vectors, so each question sits on its
  // answer and away from the other.
  auto model = EncoderModel::initialize(64, 4, 0);
  const auto ba = token_bucket("a", 64), bb = token_bucket("b", 64);
  ASSERT_NE(ba, bb);
  for (std::size_t k = 0; k < 4; ++k) {
    model.mutable_row(ba)[k] = k == 0 ? 1.0 : 0.0;
    model.mutable_row(bb)[k] = k == 1 ? 1.0 : 0.0;
  }
  const std::vector<std::string> texts = {"a", "b"};
  const auto lg = loss_gradients(texts, texts, model, 0.02);
  EXPECT_LT(lg.loss, 1e-20);
  EXPECT_LE(std::sqrt(lg.gradient.squared_norm()), 1e-8);
}

TEST(LossGradients, EmptyTextsContributeNoGradient) {
  const auto model = EncoderModel::initialize(64, 4, 2);
  const std::vector<std::string> q = {"", ""};
  const std::vector<std::string> c = {"", ""};
  const auto lg = loss_gradients(q, c, model, 0.05);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-12);
  EXPECT_TRUE(lg.gradient.buckets.empty());
}

}  // namespace
}  // namespace elicit
