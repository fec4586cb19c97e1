#include "elicit/llm_pipeline.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <tuple>

#include "elicit/error.hpp"
#include "elicit/log.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

namespace elicit {

using detail::trim;

namespace {

// Reasoning models may wrap deliberation in <think> tags; it is never output.
std::string strip_think_blocks(std::string_view response) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = response.find("<think>", pos);
    if (open == std::string_view::npos) break;
    const auto close = response.find("</think>", open);
    out.append(response.substr(pos, open - pos));
    if (close == std::string_view::npos) return out;
    pos = close + 8;
  }
  out.append(response.substr(pos));
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    fn(text.substr(pos, end - pos));
    pos = end + 1;
  }
}

std::string_view strip_bullet(std::string_view line) {
  line = trim(line);
  if (line.starts_with("- ") || line.starts_with("* ")) line = trim(line.substr(2));
  return line;
}

std::optional<CommentType> parse_label(std::string_view label) {
  std::string letters;
  for (char c : label) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) letters.push_back(c);
  }
  letters = detail::to_lower_ascii(letters);
  if (letters == "goodexecution") return CommentType::kGoodExecution;
  if (letters == "tipforimprovement" || letters == "tipsforimprovement")
    return CommentType::kTipsForImprovement;
  return std::nullopt;
}

std::string render_comment_group(std::span<const RawComment> group) {
  double first = group.front().t;
  for (const auto& c : group) first = std::min(first, c.t);
  std::string out = "Timestamp: " + detail::format_double(first) + "s";
  for (const auto& c : group) out += "\n- " + c.text;
  return out;
}

std::string render_descriptions(std::span<const AtomicDescription> descs) {
  if (descs.empty()) return "(no narration available)";
  std::string out;
  for (const auto& d : descs) {
    if (!out.empty()) out += '\n';
    out += "- " + d.text;
  }
  return out;
}

// Returns the message of a recoverable per-item failure; rethrows anything else.
std::string recoverable_message(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ReplayMissError&) {
    throw;
  } catch (const BackendError& e) {
    return e.what();
  }
}

constexpr std::array<std::string_view, 7> kQuestionWords = {"what",  "why",   "how", "when",
                                                            "where", "which", "who"};

}  // namespace

Verdict Verdict::fail(std::string reason) {
  if (reason.empty()) reason = "unspecified";
  return Verdict{false, std::move(reason)};
}

Verdict lint_question(std::string_view question) {
  std::vector<std::string> found;
  bool in_ascii_quote = false;
  bool in_curly_quote = false;
  std::string word;
  auto flush_word = [&] {
    if (word.empty()) return;
    const auto lower = detail::to_lower_ascii(word);
    if (std::find(kQuestionWords.begin(), kQuestionWords.end(), lower) != kQuestionWords.end()) {
      found.push_back(lower);
    }
    word.clear();
  };
  for (std::size_t i = 0; i < question.size(); ++i) {
    const char c = question[i];
    if (c == '"') {
      flush_word();
      in_ascii_quote = !in_ascii_quote;
      continue;
    }
    // U+201C / U+201D
    if (question.substr(i, 3) == "\xE2\x80\x9C" || question.substr(i, 3) == "\xE2\x80\x9D") {
      flush_word();
      in_curly_quote = question.substr(i, 3) == "\xE2\x80\x9C";
      i += 2;
      continue;
    }
    const bool letter = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (letter && !in_ascii_quote && !in_curly_quote) {
      word.push_back(c);
    } else {
      flush_word();
    }
  }
  flush_word();

  std::vector<std::string> problems;
  if (found.size() >= 2) {
    std::string list;
    for (const auto& w : found) list += (list.empty() ? "" : ", ") + w;
    problems.push_back("contains multiple question words (" + list + ")");
  }
  const bool has_mark = question.find('?') != std::string_view::npos ||
                        question.find("\xEF\xBC\x9F") != std::string_view::npos;  // U+FF1F
  if (!has_mark) problems.push_back("has no question mark");
  if (problems.empty()) return Verdict::pass();
  std::string reason = "The question " + problems.front();
  for (std::size_t i = 1; i < problems.size(); ++i) reason += " and " + problems[i];
  return Verdict::fail(reason + ".");
}

Verdict parse_verdict(std::string_view response) {
  const auto cleaned = strip_think_blocks(response);
  const auto text = trim(cleaned);
  if (detail::iequals(text, "OK")) return Verdict::pass();
  if (text.empty()) return Verdict::fail("empty verification response");
  const auto lower = detail::to_lower_ascii(text);
  const auto marker = lower.find("reason:");
  if (marker != std::string::npos) {
    const auto reason = trim(text.substr(marker + 7));
    if (!reason.empty()) return Verdict::fail(std::string(reason));
  }
  return Verdict::fail(std::string(text));
}

std::vector<LabeledLine> parse_labeled_lines(std::string_view response) {
  std::vector<LabeledLine> out;
  const auto cleaned = strip_think_blocks(response);
  for_each_line(cleaned, [&](std::string_view raw) {
    const auto line = strip_bullet(raw);
    if (!line.starts_with('[')) return;
    const auto close = line.find(']');
    if (close == std::string_view::npos) return;
    const auto type = parse_label(line.substr(1, close - 1));
    if (!type) return;
    const auto text = trim(line.substr(close + 1));
    if (text.empty()) return;
    out.push_back({*type, std::string(text)});
  });
  return out;
}

std::optional<std::string> extract_question(std::string_view response) {
  const auto cleaned = strip_think_blocks(response);
  std::optional<std::string> found;
  for_each_line(cleaned, [&](std::string_view raw) {
    if (found) return;
    const auto line = strip_bullet(raw);
    constexpr std::string_view prefix = "[question]";
    if (line.size() < prefix.size() ||
        !detail::iequals(line.substr(0, prefix.size()), prefix)) {
      return;
    }
    const auto text = trim(line.substr(prefix.size()));
    if (!text.empty()) found = std::string(text);
  });
  return found;
}

std::vector<std::vector<RawComment>> group_raw_comments(std::span<const RawComment> comments,
                                                        double delta) {
  std::map<std::pair<std::string, CommentType>, std::vector<const RawComment*>> buckets;
  for (const auto& c : comments) buckets[{c.video_id, c.type}].push_back(&c);

  std::vector<std::vector<RawComment>> groups;
  for (auto& [key, members] : buckets) {
    std::stable_sort(members.begin(), members.end(),
                     [](const RawComment* a, const RawComment* b) { return a->t < b->t; });
    for (const RawComment* c : members) {
      if (groups.empty() || groups.back().front().video_id != c->video_id ||
          groups.back().front().type != c->type || c->t - groups.back().front().t > delta) {
        groups.emplace_back();
      }
      groups.back().push_back(*c);
    }
  }
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    const auto& x = a.front();
    const auto& y = b.front();
    return std::tie(x.video_id, x.t, x.type, x.comment_id) <
           std::tie(y.video_id, y.t, y.type, y.comment_id);
  });
  return groups;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string scenario_display_name(std::string_view scenario) {
  std::string out(scenario);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

QaPipeline::QaPipeline(ChatBackend& chat, ChatBackend* checker, PromptLibrary prompts,
                       PipelineConfig config)
    : chat_(chat), checker_(checker), prompts_(std::move(prompts)), config_(config) {
  if (!(config_.window_seconds > 0.0)) throw ValidationError("window_seconds must be positive");
  if (config_.grouping_window < 0.0) throw ValidationError("grouping_window must be >= 0");
  if (config_.failure_threshold < 0.0 || config_.failure_threshold > 1.0)
    throw ValidationError("failure_threshold must be in [0, 1]");
  if (config_.max_in_flight == 0) throw ValidationError("max_in_flight must be positive");
}

std::vector<FormattedComment> QaPipeline::format_comments(std::span<const RawComment> group,
                                                          std::string_view scenario) const {
  if (group.empty()) throw ValidationError("format_comments: empty group");
  const auto& first = group.front();
  double t_min = first.t;
  std::vector<std::string> source_ids;
  for (const auto& c : group) {
    if (c.video_id != first.video_id || c.type != first.type) {
      throw ValidationError("format_comments: group mixes videos or TYPE labels");
    }
    t_min = std::min(t_min, c.t);
    source_ids.push_back(c.comment_id);
  }

  const auto prompt = prompts_.comment_formatting.render({
      {"comment_text", render_comment_group(group)},
      {"scenario_name", scenario_display_name(scenario)},
      {"task_type", std::string(prompt_label(first.type))},
  });
  const auto response = chat_.complete(
      {prompts_.comment_formatting.id(), prompt, config_.formatting_temperature});

  if (trim(strip_think_blocks(response)).empty()) {
    log_warning("formatter discarded every comment of group " + first.comment_id);
    return {};
  }
  const auto lines = parse_labeled_lines(response);
  if (lines.empty()) {
    throw BackendError("formatter output for group " + first.comment_id +
                       " has no labeled lines: " + response);
  }
  std::vector<FormattedComment> out;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].type != first.type) {
      log_warning("formatter relabeled a comment of group " + first.comment_id +
                  "; keeping the source label");
    }
    out.push_back({first.comment_id + "/" + std::to_string(k + 1), first.video_id, t_min,
                   first.type, lines[k].text, source_ids});
  }
  return out;
}

namespace {

// Why a formatted comment was dropped, or nullopt when it survives.
std::optional<std::string> shallow_reason(const FormattedComment& comment,
                                          std::string_view scenario, ChatBackend* checker,
                                          const PromptLibrary& prompts,
                                          const PipelineConfig& config) {
  const auto words = word_count(comment.text);
  if (words < config.min_words) {
    return "shorter than " + std::to_string(config.min_words) + " words (" +
           std::to_string(words) + ")";
  }
  if (checker == nullptr) return std::nullopt;
  std::string response;
  try {
    const auto prompt = prompts.shallow_check.render({
        {"comment_text", comment.text},
        {"scenario_name", scenario_display_name(scenario)},
        {"task_type", std::string(prompt_label(comment.type))},
    });
    response = checker->complete({prompts.shallow_check.id(), prompt, config.checker_temperature});
  } catch (const ReplayMissError&) {
    throw;
  } catch (const BackendError& e) {
    log_warning("checker failed for " + comment.comment_id + ", keeping it: " + e.what());
    return std::nullopt;
  }
  const auto verdict = detail::to_lower_ascii(trim(strip_think_blocks(response)));
  if (verdict.starts_with("exclude")) return "checker: overall evaluation without explanation";
  if (!verdict.starts_with("keep")) {
    log_warning("checker reply for " + comment.comment_id + " is neither keep nor exclude (\"" +
                verdict + "\"), keeping it");
  }
  return std::nullopt;
}

}  // namespace

std::vector<FormattedComment> QaPipeline::filter_shallow(
    std::span<const FormattedComment> comments, std::string_view scenario) const {
  std::vector<std::optional<std::string>> dropped(comments.size());
  const auto errors = detail::run_indexed(comments.size(), config_.max_in_flight, [&](std::size_t i) {
    dropped[i] = shallow_reason(comments[i], scenario, checker_, prompts_, config_);
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<FormattedComment> out;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (!dropped[i]) out.push_back(comments[i]);
  }
  return out;
}

PromptBindings QaPipeline::question_bindings(const FormattedComment& comment,
                                             std::span<const AtomicDescription> descs,
                                             std::string_view scenario) const {
  return {
      {"desc_text", render_descriptions(descs)},
      {"A", comment.text},
      {"scenario_name", scenario_display_name(scenario)},
      {"task_type", std::string(prompt_label(comment.type))},
      {"goal_template", prompts_.goal_for(comment.type)},
  };
}

std::string QaPipeline::ask_for_question(const PromptTemplate& tmpl,
                                         const PromptBindings& bindings,
                                         const std::string& comment_id) const {
  const auto prompt = tmpl.render(bindings);
  const auto first = chat_.complete({tmpl.id(), prompt, config_.generation_temperature});
  if (auto q = extract_question(first)) return *q;
  // Same prompt, distinct transcript key, so replay can script the retry.
  const auto second = chat_.complete({tmpl.id() + "#retry", prompt, config_.generation_temperature});
  if (auto q = extract_question(second)) return *q;
  throw BackendError("no [question] line in the responses for comment " + comment_id);
}

std::string QaPipeline::generate_question(const FormattedComment& comment,
                                          std::span<const AtomicDescription> descs,
                                          std::string_view scenario) const {
  return ask_for_question(prompts_.question_generation,
                          question_bindings(comment, descs, scenario), comment.comment_id);
}

Verdict QaPipeline::verify_question(std::string_view question, const FormattedComment& comment,
                                    std::span<const AtomicDescription> descs) const {
  if (auto lint = lint_question(question); !lint.ok) return lint;
  const auto prompt = prompts_.question_verification.render({
      {"Qe", std::string(question)},
      {"A", comment.text},
      {"desc_text", render_descriptions(descs)},
  });
  return parse_verdict(chat_.complete(
      {prompts_.question_verification.id(), prompt, config_.verification_temperature}));
}

std::string QaPipeline::regenerate_question(std::string_view question, std::string_view reason,
                                            const FormattedComment& comment,
                                            std::span<const AtomicDescription> descs,
                                            std::string_view scenario) const {
  if (trim(reason).empty()) {
    throw ValidationError("regenerate_question needs the reason the question was rejected");
  }
  auto bindings = question_bindings(comment, descs, scenario);
  bindings.emplace("Qe", std::string(question));
  bindings.emplace("reason", std::string(reason));
  return ask_for_question(prompts_.question_regeneration, bindings, comment.comment_id);
}

PipelineResult QaPipeline::build_qa_dataset(std::span<const RawComment> comments,
                                            std::span<const AtomicDescription> descs) const {
  PipelineResult result;
  result.raw_comment_count = comments.size();
  const auto scenarios = scenarios_by_video(comments);
  std::set<std::string> failed_raw;

  auto record_failure = [&](std::string id, std::string stage, std::string message,
                            const std::vector<std::string>& raw_ids) {
    failed_raw.insert(raw_ids.begin(), raw_ids.end());
    result.failures.push_back({std::move(id), std::move(stage), std::move(message), raw_ids});
  };

  // Formatting, one request per group.
  const auto groups = group_raw_comments(comments, config_.grouping_window);
  std::vector<std::vector<FormattedComment>> formatted(groups.size());
  auto errors = detail::run_indexed(groups.size(), config_.max_in_flight, [&](std::size_t i) {
    formatted[i] = format_comments(groups[i], scenarios.at(groups[i].front().video_id));
  });
  std::vector<FormattedComment> survivors;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::vector<std::string> ids;
    for (const auto& c : groups[i]) ids.push_back(c.comment_id);
    if (errors[i]) {
      record_failure(groups[i].front().comment_id, "format", recoverable_message(errors[i]), ids);
    } else if (formatted[i].empty()) {
      result.skips.push_back({groups[i].front().comment_id, "format", "discarded by formatter"});
    }
    for (auto& f : formatted[i]) survivors.push_back(std::move(f));
  }

  // Shallow-comment filter.
  std::vector<std::optional<std::string>> dropped(survivors.size());
  errors = detail::run_indexed(survivors.size(), config_.max_in_flight, [&](std::size_t i) {
    dropped[i] = shallow_reason(survivors[i], scenarios.at(survivors[i].video_id), checker_,
                                prompts_, config_);
  });
  std::vector<FormattedComment> kept;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    if (dropped[i]) {
      result.skips.push_back({survivors[i].comment_id, "filter", *dropped[i]});
    } else {
      kept.push_back(std::move(survivors[i]));
    }
  }

  // Question generation, verification, single regeneration.
  struct Outcome {
    std::optional<QAPair> pair;
    ProvenanceRecord provenance;
    std::optional<SkipRecord> skip;
  };
  std::vector<Outcome> outcomes(kept.size());
  errors = detail::run_indexed(kept.size(), config_.max_in_flight, [&](std::size_t i) {
    const auto& comment = kept[i];
    const auto& scenario = scenarios.at(comment.video_id);
    const auto window = window_descriptions(descs, comment.video_id, comment.t,
                                            config_.window_seconds);
    const auto initial = generate_question(comment, window, scenario);
    const auto verdict = verify_question(initial, comment, window);
    auto question = initial;
    if (!verdict.ok) question = regenerate_question(initial, verdict.reason, comment, window, scenario);

    Outcome& out = outcomes[i];
    const std::string pair_id = comment.comment_id + "/qa";
    out.provenance = {pair_id, comment.comment_id, initial, verdict.reason, !verdict.ok,
                      lint_question(question).ok};
    if (question.find('?') == std::string::npos) {
      out.skip = SkipRecord{comment.comment_id, "question",
                            "regenerated question has no question mark: " + question};
      return;
    }
    out.pair = QAPair{pair_id,      comment.video_id, comment.t,         comment.type,
                      question,     comment.text,     comment.comment_id};
  });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (errors[i]) {
      record_failure(kept[i].comment_id, "question", recoverable_message(errors[i]),
                     kept[i].source_ids);
      continue;
    }
    auto& out = outcomes[i];
    if (out.skip) {
      result.skips.push_back(std::move(*out.skip));
      continue;
    }
    result.provenance.push_back(std::move(out.provenance));
    result.pairs.push_back(std::move(*out.pair));
  }

  result.failed_raw_comment_count = failed_raw.size();
  if (!result.failures.empty()) {
    const double ratio = result.raw_comment_count == 0
                             ? 0.0
                             : static_cast<double>(failed_raw.size()) /
                                   static_cast<double>(result.raw_comment_count);
    std::ostringstream summary;
    summary << failed_raw.size() << " of " << result.raw_comment_count
            << " raw comments failed (threshold " << config_.failure_threshold * 100.0 << "%)";
    if (ratio > config_.failure_threshold) {
      summary << ":";
      for (const auto& f : result.failures) {
        summary << "\n  [" << f.stage << "] " << f.id << ": " << f.message;
      }
      throw BackendError(summary.str());
    }
    log_warning(summary.str());
  }
  return result;
}

}  // namespace elicit
