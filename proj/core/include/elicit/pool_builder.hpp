#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "elicit/corpus.hpp"

namespace elicit {

inline constexpr std::size_t kDefaultPoolSize = 50;

enum class Provenance { kPositive, kSameVideo, kSameScenario, kRandom };

std::string_view to_string(Provenance provenance) noexcept;
std::optional<Provenance> parse_provenance(std::string_view name) noexcept;

/// Comments of one video sharing one timestamp, attached to [t_end - w, t_end].
struct Segment {
  std::string segment_id;
  std::string video_id;
  double t_end = 0.0;
  double window_start = 0.0;
  std::vector<std::string> positive_ids;
};

/// video_id + "@" + shortest round-trip decimal of t.
std::string make_segment_id(std::string_view video_id, double t);

/// Exact-timestamp grouping, sorted by (video_id, t). Positives keep input order.
std::vector<Segment> group_segments(std::span<const FormattedComment> comments,
                                    double w = kDefaultWindowSeconds);

/// One formatted comment per distinct comment_id of `pairs` (first wins).
std::vector<FormattedComment> comments_from_pairs(std::span<const QAPair> pairs);

struct PoolEntry {
  std::string comment_id;
  std::string text;
  Provenance provenance = Provenance::kPositive;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct RetrievalPool {
  std::string segment_id;
  std::uint64_t seed = 0;
  std::vector<PoolEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  friend bool operator==(const RetrievalPool&, const RetrievalPool&) = default;
};

/// Immutable index of the comments negatives are drawn from.
class PoolCorpus {
 public:
  struct Comment {
    std::string comment_id;
    std::string video_id;
    std::string scenario;
    std::string text;
  };

  /// Every comment's video must have a scenario. Duplicate ids are rejected.
  PoolCorpus(std::span<const FormattedComment> comments,
             const std::map<std::string, std::string>& scenario_by_video);

  std::size_t size() const noexcept { return comments_.size(); }
  /// All comments, sorted by comment_id.
  std::span<const Comment> comments() const noexcept { return comments_; }
  const Comment* find(std::string_view comment_id) const;
  const std::string& scenario_of(std::string_view video_id) const;

 private:
  std::vector<Comment> comments_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string, std::less<>> scenario_by_video_;
};

/// Fixed-size pool: the segment's positives followed by negatives drawn
/// uniformly without replacement from, in strict priority, other segments of
/// the same video, other videos of the same scenario, then anything else.
RetrievalPool build_pool(const Segment& segment, const PoolCorpus& corpus, std::size_t L,
                         std::uint64_t seed);

/// One pool per segment, seeded with derive_seed(seed, segment_id) so that
/// contents do not depend on segment order.
std::vector<RetrievalPool> build_all_pools(std::span<const Segment> segments,
                                           const PoolCorpus& corpus, std::size_t L,
                                           std::uint64_t seed);

// Pool file: one {segment_id, L, seed, entries:[{comment_id, text, provenance}]}
// object per line.
void write_pools(std::ostream& out, std::span<const RetrievalPool> pools);
std::vector<RetrievalPool> read_pools(std::istream& in, std::string_view source = "<stream>");
void save_pools(const std::filesystem::path& path, std::span<const RetrievalPool> pools);
std::vector<RetrievalPool> load_pools(const std::filesystem::path& path);

}  // namespace elicit
