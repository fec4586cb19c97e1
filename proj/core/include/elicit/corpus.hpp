#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

/// Default temporal window (seconds) for descriptions and segments.
inline constexpr double kDefaultWindowSeconds = 7.0;

/// TYPE label attached to every expert comment.
enum class CommentType { kGoodExecution, kTipsForImprovement };

/// Wire name: "GoodExecution" / "TipsForImprovement".
std::string_view to_string(CommentType type) noexcept;
std::optional<CommentType> parse_comment_type(std::string_view name) noexcept;

/// Bracketed label used inside prompts: "[Good Execution]".
std::string_view prompt_label(CommentType type) noexcept;

struct RawComment {
  std::string comment_id;
  std::string video_id;
  std::string scenario;
  double t = 0.0;
  CommentType type = CommentType::kGoodExecution;
  std::string text;

  friend bool operator==(const RawComment&, const RawComment&) = default;
};

struct AtomicDescription {
  std::string video_id;
  double t = 0.0;
  std::string text;

  friend bool operator==(const AtomicDescription&, const AtomicDescription&) = default;
};

/// An expert comment after LLM rewriting. `t` is the earliest source stamp.
struct FormattedComment {
  std::string comment_id;
  std::string video_id;
  double t = 0.0;
  CommentType type = CommentType::kGoodExecution;
  std::string text;
  std::vector<std::string> source_ids;

  friend bool operator==(const FormattedComment&, const FormattedComment&) = default;
};

struct QAPair {
  std::string pair_id;
  std::string video_id;
  double t = 0.0;
  CommentType type = CommentType::kGoodExecution;
  std::string question;
  std::string answer;
  std::string comment_id;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct SplitManifest {
  std::set<std::string> train;
  std::set<std::string> seen;
  std::set<std::string> val;
};

struct DatasetSplits {
  std::vector<QAPair> train;
  std::vector<QAPair> seen;
  std::vector<QAPair> val;
};

// Newline-delimited JSON readers. Blank lines are skipped; every other line
// must be one object. Errors are ValidationError and name the 1-based line.

/// Synthesizes missing ids as video_id + "#" + six-digit line number.
std::vector<RawComment> read_commentary(std::istream& in, std::string_view source = "<stream>");
std::vector<RawComment> load_commentary(const std::filesystem::path& path);
void write_commentary(std::ostream& out, std::span<const RawComment> comments);
void save_commentary(const std::filesystem::path& path, std::span<const RawComment> comments);

std::vector<AtomicDescription> read_descriptions(std::istream& in, std::string_view source = "<stream>");
std::vector<AtomicDescription> load_descriptions(const std::filesystem::path& path);
void write_descriptions(std::ostream& out, std::span<const AtomicDescription> descs);
void save_descriptions(const std::filesystem::path& path, std::span<const AtomicDescription> descs);

std::vector<QAPair> read_qa_dataset(std::istream& in, std::string_view source = "<stream>");
std::vector<QAPair> load_qa_dataset(const std::filesystem::path& path);
void write_qa_dataset(std::ostream& out, std::span<const QAPair> pairs);
void save_qa_dataset(const std::filesystem::path& path, std::span<const QAPair> pairs);

/// Rejects overlapping sets.
SplitManifest read_manifest(std::istream& in, std::string_view source = "<stream>");
SplitManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const SplitManifest& manifest);

/// Descriptions of `video_id` with t - w <= desc.t <= t (closed interval),
/// ascending by time, exact duplicates removed. Requires w > 0.
std::vector<AtomicDescription> window_descriptions(std::span<const AtomicDescription> descs,
                                                   std::string_view video_id, double t,
                                                   double w = kDefaultWindowSeconds);

/// Order-preserving partition by manifest membership. Throws ValidationError
/// listing every video id that is not in the manifest.
DatasetSplits split_dataset(std::span<const QAPair> pairs, const SplitManifest& manifest);

/// video_id -> scenario. Throws if one video is tagged with two scenarios.
std::map<std::string, std::string> scenarios_by_video(std::span<const RawComment> comments);

}  // namespace elicit
