#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/pipeline/metrics.hpp"

namespace dfd::pipe {

struct ModelResult {
  std::string name;
  Metrics metrics;
};

struct ComparisonReport {
  std::vector<ModelResult> rows;
  std::string reference;
  // reference accuracy − row accuracy, full precision, one per row.
  std::vector<double> deltas;

  bool operator==(const ComparisonReport& o) const;
};

// InputError when no row is named `reference`.
ComparisonReport compare(std::vector<ModelResult> rows, const std::string& reference);

// One decimal, half away from zero; never renders "-0.0".
std::string format_percent(double value);
// As format_percent with a leading '+' on positive values: "+3.7", "0.0".
std::string format_delta(double value);

// "95.0 | 92.8 | 96.8 | 94.8": accuracy, precision, recall, F1.
std::string render_row(const Metrics& m);

// Plain-text table, one row per model, with a delta column when the report
// has a reference.
std::string render_table(const ComparisonReport& report);

// Full-precision values, their rendered strings and the positive-class note.
nlohmann::json report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const nlohmann::json& j);

}  // namespace dfd::pipe
