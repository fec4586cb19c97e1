#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elicit/corpus.hpp"
#include "elicit/encoder.hpp"
#include "elicit/pool_builder.hpp"

namespace elicit {

inline constexpr std::size_t kDefaultReps = 3;
inline const std::vector<std::size_t> kDefaultRecallKs = {1, 5, 10};

struct ScoredEntry {
  std::string comment_id;
  double similarity = 0.0;
};

struct RankedResult {
  std::string segment_id;
  std::size_t best_positive_rank = 0;  // 1-based
  std::vector<ScoredEntry> scores;     // descending, ties by ascending comment_id
};

/// Ranks `pool` from precomputed similarities (parallel to pool.entries).
RankedResult rank_scored(const RetrievalPool& pool, std::span<const double> similarities);

/// Cosine similarity of the question against every entry, then rank_scored.
RankedResult rank_pool(std::string_view question, const RetrievalPool& pool,
                       const TextEncoder& encoder);

/// Fraction of ranks <= k. Throws ValidationError for empty input or k == 0.
double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);
double recall_at_k(std::span<const RankedResult> results, std::size_t k);

struct RankStats {
  double mean = 0.0;
  double median = 0.0;  // lower middle element for even counts
};
RankStats rank_stats(std::span<const std::size_t> ranks);

struct SegmentRank {
  std::string segment_id;
  std::size_t rep = 0;
  std::size_t best_positive_rank = 0;
};

struct MetricsReport {
  std::string kind;  // "submission", "gold", "random", "single_positive"
  std::string encoder_id;
  std::uint64_t seed = 0;
  std::size_t reps = 1;
  std::size_t n_queries = 0;  // per repetition
  std::map<std::size_t, double> recall_at;
  double mean_rank = 0.0;
  double median_rank = 0.0;
  std::vector<SegmentRank> per_segment;
};

/// Per-rep metrics averaged over reps. `ranks` must hold the same number of
/// queries for every rep in [0, reps).
MetricsReport summarize(std::vector<SegmentRank> ranks, std::size_t reps,
                        std::span<const std::size_t> ks);

/// segment_id -> question.
using Submission = std::map<std::string, std::string, std::less<>>;

/// Lines of {segment_id, question}. Duplicate ids throw ValidationError.
Submission read_submission(std::istream& in, std::string_view source = "<stream>");
Submission load_submission(const std::filesystem::path& path);
void save_submission(const std::filesystem::path& path, const Submission& submission);

/// Requires exactly one question per pool; missing or unknown segment ids
/// throw ValidationError listing them.
MetricsReport evaluate_submission(const Submission& submission,
                                  std::span<const RetrievalPool> pools,
                                  const TextEncoder& encoder,
                                  std::span<const std::size_t> ks = kDefaultRecallKs);

/// The held-out questions picked for repetition `rep`: one per pool, uniform
/// among the pairs whose comment is a positive of that pool.
Submission gold_picks(std::span<const RetrievalPool> pools, std::span<const QAPair> qa,
                      std::uint64_t seed, std::size_t rep);

MetricsReport gold_baseline(std::span<const RetrievalPool> pools, std::span<const QAPair> qa,
                            const TextEncoder& encoder, std::uint64_t seed,
                            std::size_t reps = kDefaultReps,
                            std::span<const std::size_t> ks = kDefaultRecallKs);

/// Ranks every pool by a uniform random permutation.
MetricsReport random_baseline(std::span<const RetrievalPool> pools, std::uint64_t seed,
                              std::size_t reps = kDefaultReps,
                              std::span<const std::size_t> ks = kDefaultRecallKs);

/// Each question against all distinct answers of `pairs`, with its own
/// answer as the only positive.
MetricsReport single_positive_retrieval(std::span<const QAPair> pairs,
                                        const TextEncoder& encoder,
                                        std::span<const std::size_t> ks = kDefaultRecallKs);

/// Expected Recall@k of a random ranking: 1 - C(L-p, k) / C(L, k).
double expected_random_recall(std::size_t L, std::size_t positives, std::size_t k);

}  // namespace elicit
