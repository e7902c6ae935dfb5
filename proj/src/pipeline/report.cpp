#include "dfd/pipeline/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"

namespace dfd::pipe {

namespace {

constexpr const char* kPositiveNote = "precision, recall and F1 are for the deepfake class";

double round1(double v) { return std::round(v * 10.0) / 10.0; }

bool same_metrics(const Metrics& a, const Metrics& b) {
  return a.confusion == b.confusion && a.accuracy == b.accuracy && a.precision == b.precision &&
         a.recall == b.recall && a.f1 == b.f1;
}

}  // namespace

bool ComparisonReport::operator==(const ComparisonReport& o) const {
  if (reference != o.reference || deltas != o.deltas || rows.size() != o.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].name != o.rows[i].name || !same_metrics(rows[i].metrics, o.rows[i].metrics)) return false;
  }
  return true;
}

ComparisonReport compare(std::vector<ModelResult> rows, const std::string& reference) {
  const ModelResult* ref = nullptr;
  for (const auto& r : rows) {
    if (r.name == reference) ref = &r;
  }
  if (ref == nullptr) throw InputError("compare: reference model \"" + reference + "\" is not among the results");
  ComparisonReport report;
  report.reference = reference;
  for (const auto& r : rows) report.deltas.push_back(ref->metrics.accuracy - r.metrics.accuracy);
  report.rows = std::move(rows);
  return report;
}

std::string format_percent(double value) {
  double r = round1(value);
  if (r == 0.0) r = 0.0;  // drops the sign of -0.0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", r);
  return buf;
}

std::string format_delta(double value) {
  const std::string s = format_percent(value);
  return round1(value) > 0.0 ? "+" + s : s;
}

std::string render_row(const Metrics& m) {
  return format_percent(m.accuracy) + " | " + format_percent(m.precision) + " | " + format_percent(m.recall) +
         " | " + format_percent(m.f1);
}

std::string render_table(const ComparisonReport& report) {
  std::size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.name.size());
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  const bool deltas = !report.reference.empty();
  std::ostringstream out;
  out << pad("model") << " | Accuracy | Precision | Recall | F1-Score";
  if (deltas) out << " | delta vs " << report.reference;
  out << '\n';
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& m = report.rows[i].metrics;
    char line[128];
    std::snprintf(line, sizeof line, " | %8s | %9s | %6s | %8s", format_percent(m.accuracy).c_str(),
                  format_percent(m.precision).c_str(), format_percent(m.recall).c_str(),
                  format_percent(m.f1).c_str());
    out << pad(report.rows[i].name) << line;
    if (deltas) out << " | " << format_delta(report.deltas[i]);
    out << '\n';
  }
  out << "(" << kPositiveNote << ")\n";
  return out.str();
}

nlohmann::json report_to_json(const ComparisonReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& m = report.rows[i].metrics;
    nlohmann::json row{{"model", report.rows[i].name},
                       {"metrics", m.to_json()},
                       {"rendered", {{"accuracy", format_percent(m.accuracy)},
                                     {"precision", format_percent(m.precision)},
                                     {"recall", format_percent(m.recall)},
                                     {"f1", format_percent(m.f1)},
                                     {"row", render_row(m)}}}};
    if (!report.reference.empty()) {
      row["delta"] = report.deltas[i];
      row["rendered"]["delta"] = format_delta(report.deltas[i]);
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"rows", rows}, {"positive_class", "deepfake"}, {"note", kPositiveNote}};
  if (!report.reference.empty()) j["reference"] = report.reference;
  return j;
}

ComparisonReport report_from_json(const nlohmann::json& j) {
  try {
    std::vector<ModelResult> rows;
    for (const auto& r : j.at("rows")) {
      rows.push_back(ModelResult{jsonu::as_string(r.at("model")), Metrics::from_json(r.at("metrics"))});
    }
    if (j.contains("reference")) return compare(std::move(rows), jsonu::as_string(j.at("reference")));
    ComparisonReport report;
    report.rows = std::move(rows);
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace dfd::pipe
