#pragma once

// Random corpora and an independent checker for retrieval-pool properties.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "elicit/pool_builder.hpp"
#include "elicit/rng.hpp"

namespace elicit::testing {

struct RandomCorpus {
  std::vector<FormattedComment> comments;
  std::map<std::string, std::string> scenario_by_video;
};

// 1..6 scenarios, 1..8 videos, 1..12 timestamps per video, 1..4 comments per
// timestamp. Sizes are small so that every tier is regularly exhausted.
inline RandomCorpus random_corpus(Rng& rng) {
  RandomCorpus out;
  const auto scenarios = 1 + rng.uniform_below(6);
  const auto videos = 1 + rng.uniform_below(8);
  std::size_t next_id = 0;
  for (std::uint64_t v = 0; v < videos; ++v) {
    const auto video = "vid" + std::to_string(v);
    out.scenario_by_video[video] = "scn" + std::to_string(rng.uniform_below(scenarios));
    const auto stamps = 1 + rng.uniform_below(12);
    for (std::uint64_t s = 0; s < stamps; ++s) {
      const double t = 5.0 * static_cast<double>(s) + 0.5;
      const auto n = 1 + rng.uniform_below(4);
      for (std::uint64_t k = 0; k < n; ++k) {
        const auto id = "c" + std::to_string(next_id++);
        out.comments.push_back(
            {id, video, t, CommentType::kGoodExecution, "text of " + id, {id}});
      }
    }
  }
  return out;
}

// Returns an empty string when `pool` satisfies every property, otherwise a
// description of the first violation.
inline std::string check_pool(const RetrievalPool& pool, const Segment& segment,
                              const RandomCorpus& corpus, std::size_t L) {
  std::map<std::string, const FormattedComment*> by_id;
  for (const auto& c : corpus.comments) by_id[c.comment_id] = &c;
  const auto& scenario = corpus.scenario_by_video.at(segment.video_id);
  const std::set<std::string> positives(segment.positive_ids.begin(), segment.positive_ids.end());

  if (pool.entries.size() != L) return "size " + std::to_string(pool.entries.size());
  if (pool.segment_id != segment.segment_id) return "segment id";
  std::set<std::string> seen;
  std::map<Provenance, std::size_t> tier_count;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    if (!seen.insert(e.comment_id).second) return "duplicate " + e.comment_id;
    const auto it = by_id.find(e.comment_id);
    if (it == by_id.end()) return "unknown " + e.comment_id;
    if (e.text != it->second->text) return "text of " + e.comment_id;
    const auto& c = *it->second;
    const bool is_positive = positives.contains(c.comment_id);
    Provenance want = Provenance::kRandom;
    if (is_positive) {
      want = Provenance::kPositive;
    } else if (c.video_id == segment.video_id) {
      want = Provenance::kSameVideo;
    } else if (corpus.scenario_by_video.at(c.video_id) == scenario) {
      want = Provenance::kSameScenario;
    }
    if (e.provenance != want) return "provenance of " + e.comment_id;
    if ((i < positives.size()) != is_positive) return "positives are not first";
    ++tier_count[want];
  }
  if (tier_count[Provenance::kPositive] != positives.size()) return "missing positives";

  // A lower tier may only be used once every higher tier is exhausted.
  std::size_t avail_video = 0, avail_scenario = 0;
  for (const auto& c : corpus.comments) {
    if (positives.contains(c.comment_id)) continue;
    if (c.video_id == segment.video_id) {
      ++avail_video;
    } else if (corpus.scenario_by_video.at(c.video_id) == scenario) {
      ++avail_scenario;
    }
  }
  const std::size_t video = tier_count[Provenance::kSameVideo];
  const std::size_t scen = tier_count[Provenance::kSameScenario];
  const std::size_t rnd = tier_count[Provenance::kRandom];
  if ((scen > 0 || rnd > 0) && video != avail_video) return "same-video tier not exhausted";
  if (rnd > 0 && scen != avail_scenario) return "same-scenario tier not exhausted";
  return {};
}

}  // namespace elicit::testing
