#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "elicit/evaluator.hpp"

namespace elicit {

/// {metrics, per_segment, metadata} as one JSON document.
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view json, std::string_view source = "<string>");
void save_report(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport load_report(const std::filesystem::path& path);

enum class TableLayout {
  kBenchmark,  // R@1, R@5, MeanR, MedianR
  kRetriever,  // R@1, R@5, R@10, MeanR
};

using LabeledReport = std::pair<std::string, MetricsReport>;

/// Aligned plain-text table, one row per report.
std::string render_table(const std::vector<LabeledReport>& rows, TableLayout layout);

}  // namespace elicit
