#include "elicit/pool_builder.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"
#include "jsonl.hpp"
#include "text_util.hpp"

namespace elicit {

using detail::json;

std::string_view to_string(Provenance provenance) noexcept {
  switch (provenance) {
    case Provenance::kPositive:
      return "positive";
    case Provenance::kSameVideo:
      return "same_video";
    case Provenance::kSameScenario:
      return "same_scenario";
    case Provenance::kRandom:
      return "random";
  }
  return "random";
}

std::optional<Provenance> parse_provenance(std::string_view name) noexcept {
  if (name == "positive") return Provenance::kPositive;
  if (name == "same_video") return Provenance::kSameVideo;
  if (name == "same_scenario") return Provenance::kSameScenario;
  if (name == "random") return Provenance::kRandom;
  return std::nullopt;
}

std::string make_segment_id(std::string_view video_id, double t) {
  return std::string(video_id) + "@" + detail::format_double(t);
}

std::vector<Segment> group_segments(std::span<const FormattedComment> comments, double w) {
  std::map<std::pair<std::string, double>, std::vector<std::string>> groups;
  for (const auto& c : comments) groups[{c.video_id, c.t}].push_back(c.comment_id);
  std::vector<Segment> out;
  out.reserve(groups.size());
  for (auto& [key, ids] : groups) {
    out.push_back({make_segment_id(key.first, key.second), key.first, key.second,
                   key.second - w, std::move(ids)});
  }
  return out;
}

std::vector<FormattedComment> comments_from_pairs(std::span<const QAPair> pairs) {
  std::vector<FormattedComment> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : pairs) {
    if (!seen.insert(p.comment_id).second) continue;
    out.push_back({p.comment_id, p.video_id, p.t, p.type, p.answer, {p.comment_id}});
  }
  return out;
}

PoolCorpus::PoolCorpus(std::span<const FormattedComment> comments,
                       const std::map<std::string, std::string>& scenario_by_video)
    : scenario_by_video_(scenario_by_video.begin(), scenario_by_video.end()) {
  comments_.reserve(comments.size());
  for (const auto& c : comments) {
    auto it = scenario_by_video_.find(c.video_id);
    if (it == scenario_by_video_.end()) {
      throw ValidationError("no scenario known for video \"" + c.video_id + "\"");
    }
    comments_.push_back({c.comment_id, c.video_id, it->second, c.text});
  }
  std::sort(comments_.begin(), comments_.end(),
            [](const auto& a, const auto& b) { return a.comment_id < b.comment_id; });
  for (std::size_t i = 0; i < comments_.size(); ++i) {
    if (!index_.emplace(comments_[i].comment_id, i).second) {
      throw ValidationError("duplicate comment_id \"" + comments_[i].comment_id + "\" in corpus");
    }
  }
}

const PoolCorpus::Comment* PoolCorpus::find(std::string_view comment_id) const {
  auto it = index_.find(std::string(comment_id));
  return it == index_.end() ? nullptr : &comments_[it->second];
}

const std::string& PoolCorpus::scenario_of(std::string_view video_id) const {
  auto it = scenario_by_video_.find(video_id);
  if (it == scenario_by_video_.end()) {
    throw ValidationError("no scenario known for video \"" + std::string(video_id) + "\"");
  }
  return it->second;
}

RetrievalPool build_pool(const Segment& segment, const PoolCorpus& corpus, std::size_t L,
                         std::uint64_t seed) {
  const std::size_t n_pos = segment.positive_ids.size();
  if (n_pos == 0) throw ValidationError("segment " + segment.segment_id + " has no positives");
  if (n_pos > L) {
    throw ValidationError("segment " + segment.segment_id + " has " + std::to_string(n_pos) +
                          " positives, more than the pool size " + std::to_string(L));
  }
  if (corpus.size() < L) {
    throw ValidationError("corpus has " + std::to_string(corpus.size()) +
                          " comments but pools need " + std::to_string(L) + " (short by " +
                          std::to_string(L - corpus.size()) + ")");
  }

  RetrievalPool pool{segment.segment_id, seed, {}};
  pool.entries.reserve(L);
  std::unordered_set<std::string_view> taken;
  for (const auto& id : segment.positive_ids) {
    const auto* c = corpus.find(id);
    if (c == nullptr) {
      throw ValidationError("positive " + id + " of segment " + segment.segment_id +
                            " is not in the corpus");
    }
    if (!taken.insert(c->comment_id).second) {
      throw ValidationError("segment " + segment.segment_id + " lists positive " + id + " twice");
    }
    pool.entries.push_back({c->comment_id, c->text, Provenance::kPositive});
  }

  const auto& scenario = corpus.scenario_of(segment.video_id);
  std::vector<const PoolCorpus::Comment*> same_video, same_scenario;
  for (const auto& c : corpus.comments()) {
    if (taken.contains(c.comment_id)) continue;
    if (c.video_id == segment.video_id) {
      same_video.push_back(&c);
    } else if (c.scenario == scenario) {
      same_scenario.push_back(&c);
    }
  }

  Rng rng(seed);
  std::size_t rem = L - n_pos;
  auto draw = [&](std::vector<const PoolCorpus::Comment*>& candidates, Provenance tag) {
    const std::size_t k = std::min(candidates.size(), rem);
    rng.partial_shuffle(std::span(candidates), k);
    for (std::size_t i = 0; i < k; ++i) {
      taken.insert(candidates[i]->comment_id);
      pool.entries.push_back({candidates[i]->comment_id, candidates[i]->text, tag});
    }
    rem -= k;
  };

  draw(same_video, Provenance::kSameVideo);
  if (rem > 0) draw(same_scenario, Provenance::kSameScenario);
  if (rem > 0) {
    std::vector<const PoolCorpus::Comment*> others;
    for (const auto& c : corpus.comments()) {
      if (!taken.contains(c.comment_id)) others.push_back(&c);
    }
    draw(others, Provenance::kRandom);
  }
  ensure(pool.entries.size() == L, "pool for " + segment.segment_id + " has the wrong size");
  return pool;
}

std::vector<RetrievalPool> build_all_pools(std::span<const Segment> segments,
                                           const PoolCorpus& corpus, std::size_t L,
                                           std::uint64_t seed) {
  std::vector<RetrievalPool> pools;
  std::vector<std::string> problems;
  pools.reserve(segments.size());
  for (const auto& segment : segments) {
    try {
      pools.push_back(build_pool(segment, corpus, L, derive_seed(seed, segment.segment_id)));
    } catch (const ValidationError& e) {
      problems.emplace_back(e.what());
    }
  }
  if (!problems.empty()) {
    std::string message = std::to_string(problems.size()) + " segment(s) could not be pooled:";
    for (const auto& p : problems) message += "\n  " + p;
    throw ValidationError(message);
  }
  return pools;
}

void write_pools(std::ostream& out, std::span<const RetrievalPool> pools) {
  for (const auto& pool : pools) {
    json entries = json::array();
    for (const auto& e : pool.entries) {
      entries.push_back(
          {{"comment_id", e.comment_id}, {"text", e.text}, {"provenance", to_string(e.provenance)}});
    }
    detail::write_record(out, json{{"segment_id", pool.segment_id},
                                   {"L", pool.entries.size()},
                                   {"seed", pool.seed},
                                   {"entries", std::move(entries)}});
  }
}

std::vector<RetrievalPool> read_pools(std::istream& in, std::string_view source) {
  std::vector<RetrievalPool> pools;
  std::unordered_set<std::string> seen_segments;
  detail::for_each_record(in, source, [&](const detail::Origin& origin, const json& record) {
    RetrievalPool pool;
    pool.segment_id = detail::require_string(record, "segment_id", origin);
    pool.seed = detail::require_unsigned(record, "seed", origin);
    const auto L = detail::require_unsigned(record, "L", origin);
    const json& entries = detail::require_field(record, "entries", origin);
    if (!entries.is_array()) detail::fail_at(origin, "'entries' must be a list");
    std::unordered_set<std::string> ids;
    bool has_positive = false;
    for (const auto& e : entries) {
      if (!e.is_object()) detail::fail_at(origin, "pool entries must be objects");
      PoolEntry entry;
      entry.comment_id = detail::require_string(e, "comment_id", origin);
      entry.text = detail::require_string(e, "text", origin);
      const auto tag = detail::require_string(e, "provenance", origin);
      const auto provenance = parse_provenance(tag);
      if (!provenance) detail::fail_at(origin, "unknown provenance \"" + tag + "\"");
      entry.provenance = *provenance;
      has_positive |= entry.provenance == Provenance::kPositive;
      if (!ids.insert(entry.comment_id).second) {
        detail::fail_at(origin, "duplicate comment_id \"" + entry.comment_id + "\" in pool");
      }
      pool.entries.push_back(std::move(entry));
    }
    if (pool.entries.size() != L) {
      detail::fail_at(origin, "pool declares L=" + std::to_string(L) + " but has " +
                                  std::to_string(pool.entries.size()) + " entries");
    }
    if (!has_positive) detail::fail_at(origin, "pool has no positive entry");
    if (!seen_segments.insert(pool.segment_id).second) {
      detail::fail_at(origin, "duplicate segment_id \"" + pool.segment_id + "\"");
    }
    pools.push_back(std::move(pool));
  });
  return pools;
}

void save_pools(const std::filesystem::path& path, std::span<const RetrievalPool> pools) {
  auto out = detail::open_for_write(path);
  write_pools(out, pools);
}

std::vector<RetrievalPool> load_pools(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return read_pools(in, path.string());
}

}  // namespace elicit
