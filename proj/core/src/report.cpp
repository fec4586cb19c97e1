#include "elicit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elicit/error.hpp"
#include "jsonl.hpp"

namespace elicit {

using detail::json;

namespace {

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

double recall_or_throw(const MetricsReport& report, std::size_t k, const std::string& label) {
  auto it = report.recall_at.find(k);
  if (it == report.recall_at.end()) {
    throw ValidationError("report \"" + label + "\" has no R@" + std::to_string(k));
  }
  return it->second;
}

template <class T>
T get_or_throw(const json& object, const char* key, std::string_view source) {
  if (!object.is_object() || !object.contains(key)) {
    throw ValidationError(std::string(source) + ": report is missing \"" + key + "\"");
  }
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(source) + ": report field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  json recall = json::object();
  for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = v;
  json per_segment = json::array();
  for (const auto& r : report.per_segment) {
    per_segment.push_back(
        {{"segment_id", r.segment_id}, {"rep", r.rep}, {"best_positive_rank", r.best_positive_rank}});
  }
  const json doc = {
      {"metrics",
       {{"recall_at", recall},
        {"mean_rank", report.mean_rank},
        {"median_rank", report.median_rank},
        {"n_queries", report.n_queries}}},
      {"per_segment", per_segment},
      {"metadata",
       {{"kind", report.kind},
        {"encoder_id", report.encoder_id},
        {"seed", report.seed},
        {"reps", report.reps}}},
  };
  return doc.dump(2) + "\n";
}

MetricsReport report_from_json(std::string_view text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source) + ": invalid JSON: " + e.what());
  }
  const auto metrics = get_or_throw<json>(doc, "metrics", source);
  const auto metadata = get_or_throw<json>(doc, "metadata", source);
  const auto segments = get_or_throw<json>(doc, "per_segment", source);

  MetricsReport report;
  report.kind = get_or_throw<std::string>(metadata, "kind", source);
  report.encoder_id = get_or_throw<std::string>(metadata, "encoder_id", source);
  report.seed = get_or_throw<std::uint64_t>(metadata, "seed", source);
  report.reps = get_or_throw<std::size_t>(metadata, "reps", source);
  report.n_queries = get_or_throw<std::size_t>(metrics, "n_queries", source);
  report.mean_rank = get_or_throw<double>(metrics, "mean_rank", source);
  report.median_rank = get_or_throw<double>(metrics, "median_rank", source);
  const auto recall = get_or_throw<json>(metrics, "recall_at", source);
  if (!recall.is_object()) throw ValidationError(std::string(source) + ": recall_at must be an object");
  for (const auto& [key, value] : recall.items()) {
    std::size_t k = 0;
    auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), k);
    if (ec != std::errc{} || end != key.data() + key.size() || !value.is_number()) {
      throw ValidationError(std::string(source) + ": bad recall_at entry \"" + key + "\"");
    }
    report.recall_at[k] = value.get<double>();
  }
  if (!segments.is_array()) {
    throw ValidationError(std::string(source) + ": per_segment must be an array");
  }
  for (const auto& s : segments) {
    report.per_segment.push_back({get_or_throw<std::string>(s, "segment_id", source),
                                  get_or_throw<std::size_t>(s, "rep", source),
                                  get_or_throw<std::size_t>(s, "best_positive_rank", source)});
  }
  return report;
}

void save_report(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = detail::open_for_write(path);
  out << report_to_json(report);
  if (!out) throw ValidationError("failed writing " + path.string());
}

MetricsReport load_report(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str(), path.string());
}

std::string render_table(const std::vector<LabeledReport>& rows, TableLayout layout) {
  std::vector<std::string> header{""};
  if (layout == TableLayout::kBenchmark) {
    header.insert(header.end(), {"R@1", "R@5", "MeanR", "MedianR"});
  } else {
    header.insert(header.end(), {"R@1", "R@5", "R@10", "MeanR"});
  }

  std::vector<std::vector<std::string>> cells{header};
  for (const auto& [label, r] : rows) {
    std::vector<std::string> line{label, fixed(recall_or_throw(r, 1, label), 4),
                                  fixed(recall_or_throw(r, 5, label), 4)};
    if (layout == TableLayout::kBenchmark) {
      line.push_back(fixed(r.mean_rank, 2));
      // Medians averaged over reps need not be integral.
      line.push_back(fixed(r.median_rank, r.median_rank == std::floor(r.median_rank) ? 0 : 2));
    } else {
      line.push_back(fixed(recall_or_throw(r, 10, label), 4));
      line.push_back(fixed(r.mean_rank, 2));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c == 0) {
        text += line[c] + std::string(width[c] - line[c].size(), ' ');
      } else {
        text += "  " + std::string(width[c] - line[c].size(), ' ') + line[c];
      }
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out += text + "\n";
  }
  return out;
}

}  // namespace elicit
