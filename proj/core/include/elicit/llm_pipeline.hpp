#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/chat_backend.hpp"
#include "elicit/corpus.hpp"
#include "elicit/prompts.hpp"

namespace elicit {

struct PipelineConfig {
  double window_seconds = kDefaultWindowSeconds;
  /// Raw comments of one video and TYPE within this many seconds of the
  /// group's first comment are formatted together.
  double grouping_window = 1.0;
  /// Formatted comments with fewer words are dropped as evidently short.
  std::size_t min_words = 8;
  /// The run fails when more than this fraction of raw comments failed.
  double failure_threshold = 0.05;
  double formatting_temperature = 0.0;
  double checker_temperature = 0.0;
  double generation_temperature = 0.7;
  double verification_temperature = 0.0;
  std::size_t max_in_flight = 4;
};

struct Verdict {
  bool ok = true;
  std::string reason;  // empty iff ok

  static Verdict pass() { return {}; }
  static Verdict fail(std::string reason);
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Mechanical pre-check: fails on a missing question mark or on two or more
/// interrogatives (what/why/how/when/where/which/who) outside quotes.
Verdict lint_question(std::string_view question);

/// "OK" (trimmed, any case) passes; otherwise the text after "Reason:", or the
/// whole trimmed response when that marker is absent.
Verdict parse_verdict(std::string_view response);

struct LabeledLine {
  CommentType type;
  std::string text;
};

/// Lines of the form "[Good Execution] ..." or "[Tip(s) for Improvement] ...".
std::vector<LabeledLine> parse_labeled_lines(std::string_view response);

/// Text after the "[question]" prefix on the first line carrying it.
std::optional<std::string> extract_question(std::string_view response);

/// Groups comments by (video, TYPE); within each, sorted by time, a group
/// holds comments no more than `delta` seconds after its first one. Groups
/// are ordered by (video, first time, TYPE).
std::vector<std::vector<RawComment>> group_raw_comments(std::span<const RawComment> comments,
                                                        double delta);

/// Number of whitespace-separated words.
std::size_t word_count(std::string_view text);

struct ProvenanceRecord {
  std::string pair_id;
  std::string comment_id;
  std::string initial_question;
  std::string verdict_reason;  // empty when the first question was accepted
  bool regenerated = false;
  bool lint_ok = true;  // lint result of the emitted question
};

struct SkipRecord {
  std::string id;
  std::string stage;
  std::string reason;
};

struct FailureRecord {
  std::string id;
  std::string stage;
  std::string message;
  std::vector<std::string> raw_comment_ids;
};

struct PipelineResult {
  std::vector<QAPair> pairs;
  std::vector<ProvenanceRecord> provenance;
  std::vector<SkipRecord> skips;
  std::vector<FailureRecord> failures;
  std::size_t raw_comment_count = 0;
  std::size_t failed_raw_comment_count = 0;
};

/// Comment formatting, shallow-comment filtering, question generation and
/// verification/regeneration against pluggable chat backends.
class QaPipeline {
 public:
  /// `checker` may be null, in which case filtering is length-only.
  QaPipeline(ChatBackend& chat, ChatBackend* checker, PromptLibrary prompts,
             PipelineConfig config = {});

  const PipelineConfig& config() const noexcept { return config_; }

  /// Rewrites one group of raw comments. A blank response discards the group;
  /// a non-blank response without labeled lines throws BackendError.
  std::vector<FormattedComment> format_comments(std::span<const RawComment> group,
                                                std::string_view scenario) const;

  /// Length rule, then the checker ("keep"/"exclude"). Checker failures keep
  /// the comment.
  std::vector<FormattedComment> filter_shallow(std::span<const FormattedComment> comments,
                                               std::string_view scenario) const;

  /// One request; a response without "[question]" is re-requested once.
  std::string generate_question(const FormattedComment& comment,
                                std::span<const AtomicDescription> descs,
                                std::string_view scenario) const;

  /// Lint failures are returned without contacting the backend.
  Verdict verify_question(std::string_view question, const FormattedComment& comment,
                          std::span<const AtomicDescription> descs) const;

  /// Single regeneration with the rejected question as a bad example.
  /// `reason` must be non-empty.
  std::string regenerate_question(std::string_view question, std::string_view reason,
                                  const FormattedComment& comment,
                                  std::span<const AtomicDescription> descs,
                                  std::string_view scenario) const;

  /// End-to-end construction over every video in `comments`. Throws
  /// BackendError when the failed fraction exceeds failure_threshold, and
  /// immediately on a replay miss.
  PipelineResult build_qa_dataset(std::span<const RawComment> comments,
                                  std::span<const AtomicDescription> descs) const;

 private:
  std::string ask_for_question(const PromptTemplate& tmpl, const PromptBindings& bindings,
                               const std::string& comment_id) const;
  PromptBindings question_bindings(const FormattedComment& comment,
                                   std::span<const AtomicDescription> descs,
                                   std::string_view scenario) const;

  ChatBackend& chat_;
  ChatBackend* checker_;
  PromptLibrary prompts_;
  PipelineConfig config_;
};

/// Scenario display name: underscores become spaces.
std::string scenario_display_name(std::string_view scenario);

}  // namespace elicit
