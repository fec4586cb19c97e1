#include "elicit/evaluator.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"
#include "jsonl.hpp"

namespace elicit {

using detail::json;

namespace {

// Embeds every distinct text once.
class EmbeddingTable {
 public:
  EmbeddingTable(const TextEncoder& encoder, std::vector<std::string> texts) {
    std::sort(texts.begin(), texts.end());
    texts.erase(std::unique(texts.begin(), texts.end()), texts.end());
    auto embeddings = encoder.embed(texts);
    if (embeddings.size() != texts.size()) {
      throw BackendError("encoder " + encoder.id() + " returned the wrong number of embeddings");
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      table_.emplace(std::move(texts[i]), std::move(embeddings[i]));
    }
  }

  const Embedding& operator[](const std::string& text) const { return table_.at(text); }

 private:
  std::unordered_map<std::string, Embedding> table_;
};

std::vector<std::string> pool_texts(std::span<const RetrievalPool> pools) {
  std::vector<std::string> texts;
  for (const auto& pool : pools) {
    for (const auto& e : pool.entries) texts.push_back(e.text);
  }
  return texts;
}

RankedResult rank_with_table(std::string_view question, const RetrievalPool& pool,
                             const EmbeddingTable& table) {
  const auto& q = table[std::string(question)];
  std::vector<double> sims;
  sims.reserve(pool.entries.size());
  for (const auto& e : pool.entries) sims.push_back(cosine_sim(q, table[e.text]));
  return rank_scored(pool, sims);
}

std::uint64_t rep_seed(std::uint64_t seed, std::size_t rep, std::string_view segment_id) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(rep)), segment_id);
}

std::vector<std::size_t> checked_ks(std::span<const std::size_t> ks) {
  if (ks.empty()) throw ValidationError("at least one recall cutoff k is required");
  std::vector<std::size_t> out(ks.begin(), ks.end());
  for (auto k : out) {
    if (k == 0) throw ValidationError("recall cutoffs must be >= 1");
  }
  return out;
}

}  // namespace

RankedResult rank_scored(const RetrievalPool& pool, std::span<const double> similarities) {
  if (similarities.size() != pool.entries.size()) {
    throw ValidationError("rank_scored: one similarity per pool entry is required");
  }
  std::vector<std::size_t> order(pool.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (similarities[a] != similarities[b]) return similarities[a] > similarities[b];
    return pool.entries[a].comment_id < pool.entries[b].comment_id;
  });

  RankedResult result{pool.segment_id, 0, {}};
  result.scores.reserve(order.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& entry = pool.entries[order[rank]];
    result.scores.push_back({entry.comment_id, similarities[order[rank]]});
    if (result.best_positive_rank == 0 && entry.provenance == Provenance::kPositive) {
      result.best_positive_rank = rank + 1;
    }
  }
  if (result.best_positive_rank == 0) {
    throw ValidationError("pool " + pool.segment_id + " has no positive entry");
  }
  return result;
}

RankedResult rank_pool(std::string_view question, const RetrievalPool& pool,
                       const TextEncoder& encoder) {
  std::vector<std::string> texts;
  texts.reserve(pool.entries.size() + 1);
  texts.emplace_back(question);
  for (const auto& e : pool.entries) texts.push_back(e.text);
  const auto embeddings = encoder.embed(texts);
  if (embeddings.size() != texts.size()) {
    throw BackendError("encoder " + encoder.id() + " returned the wrong number of embeddings");
  }
  std::vector<double> sims;
  sims.reserve(pool.entries.size());
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    sims.push_back(cosine_sim(embeddings[0], embeddings[i]));
  }
  return rank_scored(pool, sims);
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ValidationError("recall_at_k: no results");
  if (k == 0) throw ValidationError("recall_at_k: k must be >= 1");
  const auto good = std::count_if(ranks.begin(), ranks.end(), [k](auto r) { return r <= k; });
  return static_cast<double>(good) / static_cast<double>(ranks.size());
}

double recall_at_k(std::span<const RankedResult> results, std::size_t k) {
  std::vector<std::size_t> ranks;
  ranks.reserve(results.size());
  for (const auto& r : results) ranks.push_back(r.best_positive_rank);
  return recall_at_k(ranks, k);
}

RankStats rank_stats(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ValidationError("rank_stats: no results");
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (auto r : sorted) sum += static_cast<double>(r);
  return {sum / static_cast<double>(sorted.size()),
          static_cast<double>(sorted[(sorted.size() - 1) / 2])};
}

MetricsReport summarize(std::vector<SegmentRank> ranks, std::size_t reps,
                        std::span<const std::size_t> ks) {
  const auto cutoffs = checked_ks(ks);
  if (reps == 0) throw ValidationError("reps must be >= 1");
  std::vector<std::vector<std::size_t>> by_rep(reps);
  for (const auto& r : ranks) {
    if (r.rep >= reps) throw InvariantError("rank recorded for an out-of-range repetition");
    by_rep[r.rep].push_back(r.best_positive_rank);
  }

  MetricsReport report;
  report.reps = reps;
  report.n_queries = by_rep.front().size();
  for (auto k : cutoffs) report.recall_at[k] = 0.0;
  for (const auto& rep_ranks : by_rep) {
    if (rep_ranks.size() != report.n_queries) {
      throw InvariantError("repetitions evaluated different numbers of queries");
    }
    for (auto k : cutoffs) report.recall_at[k] += recall_at_k(rep_ranks, k);
    const auto stats = rank_stats(rep_ranks);
    report.mean_rank += stats.mean;
    report.median_rank += stats.median;
  }
  const auto n = static_cast<double>(reps);
  for (auto& [k, v] : report.recall_at) v /= n;
  report.mean_rank /= n;
  report.median_rank /= n;
  std::stable_sort(ranks.begin(), ranks.end(),
                   [](const auto& a, const auto& b) { return a.rep < b.rep; });
  report.per_segment = std::move(ranks);
  return report;
}

Submission read_submission(std::istream& in, std::string_view source) {
  Submission submission;
  detail::for_each_record(in, source, [&](const detail::Origin& origin, const json& record) {
    auto segment_id = detail::require_string(record, "segment_id", origin);
    auto question = detail::require_string(record, "question", origin);
    if (!submission.emplace(segment_id, std::move(question)).second) {
      detail::fail_at(origin, "duplicate segment_id \"" + segment_id + "\" in submission");
    }
  });
  return submission;
}

Submission load_submission(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return read_submission(in, path.string());
}

void save_submission(const std::filesystem::path& path, const Submission& submission) {
  auto out = detail::open_for_write(path);
  for (const auto& [segment_id, question] : submission) {
    detail::write_record(out, json{{"segment_id", segment_id}, {"question", question}});
  }
}

MetricsReport evaluate_submission(const Submission& submission,
                                  std::span<const RetrievalPool> pools,
                                  const TextEncoder& encoder, std::span<const std::size_t> ks) {
  std::vector<std::string> missing, unknown;
  std::unordered_set<std::string_view> pool_ids;
  for (const auto& pool : pools) {
    pool_ids.insert(pool.segment_id);
    if (!submission.contains(pool.segment_id)) missing.push_back(pool.segment_id);
  }
  for (const auto& [segment_id, q] : submission) {
    if (!pool_ids.contains(segment_id)) unknown.push_back(segment_id);
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string message = "submission does not match the pools";
    if (!missing.empty()) {
      message += "; missing segments:";
      for (const auto& id : missing) message += " " + id;
    }
    if (!unknown.empty()) {
      message += "; unknown segments:";
      for (const auto& id : unknown) message += " " + id;
    }
    throw ValidationError(message);
  }

  auto texts = pool_texts(pools);
  for (const auto& [id, q] : submission) texts.push_back(q);
  const EmbeddingTable table(encoder, std::move(texts));

  std::vector<SegmentRank> ranks;
  for (const auto& pool : pools) {
    const auto result = rank_with_table(submission.find(pool.segment_id)->second, pool, table);
    ranks.push_back({pool.segment_id, 0, result.best_positive_rank});
  }
  auto report = summarize(std::move(ranks), 1, ks);
  report.kind = "submission";
  report.encoder_id = encoder.id();
  return report;
}

Submission gold_picks(std::span<const RetrievalPool> pools, std::span<const QAPair> qa,
                      std::uint64_t seed, std::size_t rep) {
  std::unordered_map<std::string_view, std::vector<const QAPair*>> by_comment;
  for (const auto& p : qa) by_comment[p.comment_id].push_back(&p);

  Submission picks;
  for (const auto& pool : pools) {
    std::vector<const QAPair*> candidates;
    for (const auto& e : pool.entries) {
      if (e.provenance != Provenance::kPositive) continue;
      if (auto it = by_comment.find(e.comment_id); it != by_comment.end()) {
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
    }
    if (candidates.empty()) {
      throw ValidationError("segment " + pool.segment_id + " has no held-out question");
    }
    Rng rng(rep_seed(seed, rep, pool.segment_id));
    picks.emplace(pool.segment_id, candidates[rng.uniform_below(candidates.size())]->question);
  }
  return picks;
}

MetricsReport gold_baseline(std::span<const RetrievalPool> pools, std::span<const QAPair> qa,
                            const TextEncoder& encoder, std::uint64_t seed, std::size_t reps,
                            std::span<const std::size_t> ks) {
  if (reps == 0) throw ValidationError("reps must be >= 1");
  std::vector<Submission> picks;
  auto texts = pool_texts(pools);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    picks.push_back(gold_picks(pools, qa, seed, rep));
    for (const auto& [id, q] : picks.back()) texts.push_back(q);
  }
  const EmbeddingTable table(encoder, std::move(texts));

  std::vector<SegmentRank> ranks;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (const auto& pool : pools) {
      const auto result = rank_with_table(picks[rep].at(pool.segment_id), pool, table);
      ranks.push_back({pool.segment_id, rep, result.best_positive_rank});
    }
  }
  auto report = summarize(std::move(ranks), reps, ks);
  report.kind = "gold";
  report.encoder_id = encoder.id();
  report.seed = seed;
  return report;
}

MetricsReport random_baseline(std::span<const RetrievalPool> pools, std::uint64_t seed,
                              std::size_t reps, std::span<const std::size_t> ks) {
  if (reps == 0) throw ValidationError("reps must be >= 1");
  if (pools.empty()) throw ValidationError("random_baseline: no pools");
  std::vector<SegmentRank> ranks;
  ranks.reserve(pools.size() * reps);
  std::vector<std::size_t> permutation;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (const auto& pool : pools) {
      permutation.resize(pool.entries.size());
      std::iota(permutation.begin(), permutation.end(), 0);
      Rng rng(rep_seed(seed, rep, pool.segment_id));
      rng.shuffle(std::span(permutation));
      // permutation[r] is the entry ranked r + 1.
      std::size_t best = 0;
      for (std::size_t r = 0; r < permutation.size(); ++r) {
        if (pool.entries[permutation[r]].provenance == Provenance::kPositive) {
          best = r + 1;
          break;
        }
      }
      if (best == 0) throw ValidationError("pool " + pool.segment_id + " has no positive entry");
      ranks.push_back({pool.segment_id, rep, best});
    }
  }
  auto report = summarize(std::move(ranks), reps, ks);
  report.kind = "random";
  report.encoder_id = "random-permutation";
  report.seed = seed;
  return report;
}

MetricsReport single_positive_retrieval(std::span<const QAPair> pairs,
                                        const TextEncoder& encoder,
                                        std::span<const std::size_t> ks) {
  if (pairs.empty()) throw ValidationError("single_positive_retrieval: no QA pairs");
  std::vector<std::string> answer_ids, answer_texts;
  std::unordered_map<std::string_view, std::size_t> answer_index;
  for (const auto& p : pairs) {
    if (answer_index.contains(p.comment_id)) continue;
    answer_index.emplace(p.comment_id, answer_ids.size());
    answer_ids.push_back(p.comment_id);
    answer_texts.push_back(p.answer);
  }
  std::vector<std::string> questions;
  for (const auto& p : pairs) questions.push_back(p.question);
  const auto q_emb = encoder.embed(questions);
  const auto a_emb = encoder.embed(answer_texts);
  if (q_emb.size() != questions.size() || a_emb.size() != answer_texts.size()) {
    throw BackendError("encoder " + encoder.id() + " returned the wrong number of embeddings");
  }

  std::vector<SegmentRank> ranks;
  ranks.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto own = answer_index.at(pairs[i].comment_id);
    const double own_sim = cosine_sim(q_emb[i], a_emb[own]);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < a_emb.size(); ++j) {
      if (j == own) continue;
      const double s = cosine_sim(q_emb[i], a_emb[j]);
      if (s > own_sim || (s == own_sim && answer_ids[j] < answer_ids[own])) ++rank;
    }
    ranks.push_back({pairs[i].pair_id, 0, rank});
  }
  auto report = summarize(std::move(ranks), 1, ks);
  report.kind = "single_positive";
  report.encoder_id = encoder.id();
  return report;
}

double expected_random_recall(std::size_t L, std::size_t positives, std::size_t k) {
  if (L == 0 || positives == 0 || positives > L) {
    throw ValidationError("expected_random_recall: need 1 <= positives <= L");
  }
  if (k >= L) return 1.0;
  // C(L - p, k) / C(L, k) = prod_{i < k} (L - p - i) / (L - i)
  double miss = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (L - positives <= i) return 1.0;
    miss *= static_cast<double>(L - positives - i) / static_cast<double>(L - i);
  }
  return 1.0 - miss;
}

}  // namespace elicit
