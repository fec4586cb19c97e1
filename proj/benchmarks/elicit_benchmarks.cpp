#include <benchmark/benchmark.h>

#include <map>

#include "elicit/contrastive.hpp"
#include "elicit/encoder.hpp"
#include "elicit/evaluator.hpp"
#include "elicit/pool_builder.hpp"
#include "elicit/synthetic.hpp"

namespace {

using namespace elicit;

const SyntheticCorpus& corpus() {
  static const auto c = make_synthetic_corpus();
  return c;
}

const EncoderModel& model() {
  static const auto m = EncoderModel::initialize();
  return m;
}

void BM_Encode(benchmark::State& state) {
  const auto& pairs = corpus().pairs;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model().encode(pairs[i++ % pairs.size()].answer));
  }
}
BENCHMARK(BM_Encode);

void BM_LossGradients(benchmark::State& state) {
  const auto B = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> q, c;
  for (std::size_t i = 0; i < B; ++i) {
    q.push_back(corpus().pairs[i].question);
    c.push_back(corpus().pairs[i].answer);
  }
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradients(q, c, model(), 0.05));
}
BENCHMARK(BM_LossGradients)->Arg(16)->Arg(128)->Arg(500);

struct PoolSetup {
  std::vector<FormattedComment> comments;
  std::vector<Segment> segments;
  std::unique_ptr<PoolCorpus> index;

  PoolSetup() {
    std::map<std::string, std::string> scenarios;
    for (const auto& c : corpus().commentary) scenarios[c.video_id] = c.scenario;
    comments = comments_from_pairs(corpus().pairs);
    segments = group_segments(comments);
    index = std::make_unique<PoolCorpus>(comments, scenarios);
  }
};

const PoolSetup& pools() {
  static const PoolSetup setup;
  return setup;
}

void BM_BuildPool(benchmark::State& state) {
  const auto& p = pools();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_pool(p.segments[seed % p.segments.size()], *p.index, 50, seed));
    ++seed;
  }
}
BENCHMARK(BM_BuildPool);

void BM_RankPool(benchmark::State& state) {
  const auto& p = pools();
  const auto pool = build_pool(p.segments.front(), *p.index, 50, 1);
  const LocalEncoder encoder(std::make_shared<const EncoderModel>(model()), "bench");
  const auto& question = corpus().pairs.front().question;
  for (auto _ : state) benchmark::DoNotOptimize(rank_pool(question, pool, encoder));
}
BENCHMARK(BM_RankPool);

}  // namespace

BENCHMARK_MAIN();
