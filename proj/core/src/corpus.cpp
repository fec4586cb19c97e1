#include "elicit/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "elicit/error.hpp"
#include "jsonl.hpp"

namespace elicit {

using detail::json;
using detail::Origin;

std::string_view to_string(CommentType type) noexcept {
  return type == CommentType::kGoodExecution ? "GoodExecution" : "TipsForImprovement";
}

std::optional<CommentType> parse_comment_type(std::string_view name) noexcept {
  if (name == "GoodExecution") return CommentType::kGoodExecution;
  if (name == "TipsForImprovement") return CommentType::kTipsForImprovement;
  return std::nullopt;
}

std::string_view prompt_label(CommentType type) noexcept {
  return type == CommentType::kGoodExecution ? "[Good Execution]" : "[Tips for Improvement]";
}

namespace {

CommentType require_type(const json& record, const Origin& origin) {
  const auto name = detail::require_string(record, "type", origin);
  const auto type = parse_comment_type(name);
  if (!type) {
    detail::fail_at(origin, "type must be \"GoodExecution\" or \"TipsForImprovement\", got \"" +
                                name + "\"");
  }
  return *type;
}

double require_timestamp(const json& record, const Origin& origin) {
  const double t = detail::require_number(record, "t", origin);
  if (t < 0.0) detail::fail_at(origin, "negative timestamp " + json(t).dump());
  return t;
}

std::string synthesized_comment_id(const std::string& video_id, std::size_t line) {
  char digits[32];
  std::snprintf(digits, sizeof digits, "%06zu", line);
  return video_id + "#" + digits;
}

template <typename T, typename Fn>
std::vector<T> load_with(const std::filesystem::path& path, Fn&& read) {
  auto in = detail::open_for_read(path);
  return read(in, path.string());
}

}  // namespace

std::vector<RawComment> read_commentary(std::istream& in, std::string_view source) {
  std::vector<RawComment> out;
  std::unordered_set<std::string> seen;
  detail::for_each_record(in, source, [&](const Origin& origin, const json& record) {
    RawComment c;
    c.video_id = detail::require_string(record, "video_id", origin);
    // Scenario is optional; unknown scenarios share the empty name.
    if (record.contains("scenario")) {
      c.scenario = detail::require_string(record, "scenario", origin, false);
    }
    c.t = require_timestamp(record, origin);
    c.type = require_type(record, origin);
    c.text = detail::require_string(record, "text", origin);
    if (record.contains("comment_id")) {
      c.comment_id = detail::require_string(record, "comment_id", origin);
    } else {
      c.comment_id = synthesized_comment_id(c.video_id, origin.line);
    }
    if (!seen.insert(c.comment_id).second) {
      detail::fail_at(origin, "duplicate comment_id \"" + c.comment_id + "\"");
    }
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<RawComment> load_commentary(const std::filesystem::path& path) {
  return load_with<RawComment>(path, [](std::istream& in, const std::string& name) {
    return read_commentary(in, name);
  });
}

void write_commentary(std::ostream& out, std::span<const RawComment> comments) {
  for (const auto& c : comments) {
    detail::write_record(out, json{{"comment_id", c.comment_id},
                                   {"video_id", c.video_id},
                                   {"scenario", c.scenario},
                                   {"t", c.t},
                                   {"type", to_string(c.type)},
                                   {"text", c.text}});
  }
}

void save_commentary(const std::filesystem::path& path, std::span<const RawComment> comments) {
  auto out = detail::open_for_write(path);
  write_commentary(out, comments);
}

std::vector<AtomicDescription> read_descriptions(std::istream& in, std::string_view source) {
  std::vector<AtomicDescription> out;
  detail::for_each_record(in, source, [&](const Origin& origin, const json& record) {
    AtomicDescription d;
    d.video_id = detail::require_string(record, "video_id", origin);
    d.t = require_timestamp(record, origin);
    d.text = detail::require_string(record, "text", origin);
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<AtomicDescription> load_descriptions(const std::filesystem::path& path) {
  return load_with<AtomicDescription>(path, [](std::istream& in, const std::string& name) {
    return read_descriptions(in, name);
  });
}

void write_descriptions(std::ostream& out, std::span<const AtomicDescription> descs) {
  for (const auto& d : descs) {
    detail::write_record(out, json{{"video_id", d.video_id}, {"t", d.t}, {"text", d.text}});
  }
}

void save_descriptions(const std::filesystem::path& path,
                       std::span<const AtomicDescription> descs) {
  auto out = detail::open_for_write(path);
  write_descriptions(out, descs);
}

std::vector<QAPair> read_qa_dataset(std::istream& in, std::string_view source) {
  std::vector<QAPair> out;
  std::unordered_set<std::string> seen;
  detail::for_each_record(in, source, [&](const Origin& origin, const json& record) {
    QAPair p;
    p.pair_id = detail::require_string(record, "pair_id", origin);
    p.video_id = detail::require_string(record, "video_id", origin);
    p.t = require_timestamp(record, origin);
    p.type = require_type(record, origin);
    p.question = detail::require_string(record, "question", origin);
    p.answer = detail::require_string(record, "answer", origin);
    p.comment_id = detail::require_string(record, "comment_id", origin);
    if (p.question.find('?') == std::string::npos) {
      detail::fail_at(origin, "question has no question mark");
    }
    if (!seen.insert(p.pair_id).second) {
      detail::fail_at(origin, "duplicate pair_id \"" + p.pair_id + "\"");
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<QAPair> load_qa_dataset(const std::filesystem::path& path) {
  return load_with<QAPair>(path, [](std::istream& in, const std::string& name) {
    return read_qa_dataset(in, name);
  });
}

void write_qa_dataset(std::ostream& out, std::span<const QAPair> pairs) {
  for (const auto& p : pairs) {
    detail::write_record(out, json{{"pair_id", p.pair_id},
                                   {"video_id", p.video_id},
                                   {"t", p.t},
                                   {"type", to_string(p.type)},
                                   {"question", p.question},
                                   {"answer", p.answer},
                                   {"comment_id", p.comment_id}});
  }
}

void save_qa_dataset(const std::filesystem::path& path, std::span<const QAPair> pairs) {
  auto out = detail::open_for_write(path);
  write_qa_dataset(out, pairs);
}

SplitManifest read_manifest(std::istream& in, std::string_view source) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source) + ": malformed JSON: " + e.what());
  }
  const Origin origin{source, 1};
  if (!doc.is_object()) detail::fail_at(origin, "manifest must be a JSON object");

  auto read_set = [&](std::string_view key) {
    const json& list = detail::require_field(doc, key, origin);
    if (!list.is_array()) detail::fail_at(origin, "'" + std::string(key) + "' must be a list");
    std::set<std::string> ids;
    for (const auto& v : list) {
      if (!v.is_string()) detail::fail_at(origin, "video ids must be strings");
      ids.insert(v.get<std::string>());
    }
    return ids;
  };
  SplitManifest m{read_set("train"), read_set("seen"), read_set("val")};

  auto check_disjoint = [&](const std::set<std::string>& a, const std::set<std::string>& b,
                            std::string_view names) {
    for (const auto& id : a) {
      if (b.contains(id)) {
        detail::fail_at(origin, "video \"" + id + "\" appears in both " + std::string(names));
      }
    }
  };
  check_disjoint(m.train, m.seen, "train and seen");
  check_disjoint(m.train, m.val, "train and val");
  check_disjoint(m.seen, m.val, "seen and val");
  return m;
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return read_manifest(in, path.string());
}

void save_manifest(const std::filesystem::path& path, const SplitManifest& manifest) {
  auto out = detail::open_for_write(path);
  out << json{{"train", manifest.train}, {"seen", manifest.seen}, {"val", manifest.val}}.dump(2)
      << '\n';
}

std::vector<AtomicDescription> window_descriptions(std::span<const AtomicDescription> descs,
                                                   std::string_view video_id, double t,
                                                   double w) {
  if (!(w > 0.0)) throw ValidationError("window_descriptions: w must be positive");
  std::vector<AtomicDescription> out;
  const double start = t - w;
  for (const auto& d : descs) {
    if (d.video_id == video_id && d.t >= start && d.t <= t) out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.text < b.text;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DatasetSplits split_dataset(std::span<const QAPair> pairs, const SplitManifest& manifest) {
  DatasetSplits splits;
  std::set<std::string> unassigned;
  for (const auto& p : pairs) {
    if (manifest.train.contains(p.video_id)) {
      splits.train.push_back(p);
    } else if (manifest.seen.contains(p.video_id)) {
      splits.seen.push_back(p);
    } else if (manifest.val.contains(p.video_id)) {
      splits.val.push_back(p);
    } else {
      unassigned.insert(p.video_id);
    }
  }
  if (!unassigned.empty()) {
    std::string list;
    for (const auto& id : unassigned) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("videos not assigned to any split: " + list);
  }
  return splits;
}

std::map<std::string, std::string> scenarios_by_video(std::span<const RawComment> comments) {
  std::map<std::string, std::string> out;
  for (const auto& c : comments) {
    auto [it, inserted] = out.emplace(c.video_id, c.scenario);
    if (!inserted && it->second != c.scenario) {
      throw ValidationError("video \"" + c.video_id + "\" is tagged with scenarios \"" +
                            it->second + "\" and \"" + c.scenario + "\"");
    }
  }
  return out;
}

}  // namespace elicit
