#include "lot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lot/util.hpp"

namespace lot {

OddsRatio odds_ratio(const ContingencyTable& table) {
  if (table.total() == 0) throw Error("odds_ratio: all four cells are zero");
  OddsRatio result;
  const double a = static_cast<double>(table.a);
  const double b = static_cast<double>(table.b);
  const double c = static_cast<double>(table.c);
  const double d = static_cast<double>(table.d);

  if (b * c == 0.0 && a * d == 0.0)
    result.uncorrected = std::numeric_limits<double>::quiet_NaN();
  else if (b * c == 0.0)
    result.uncorrected = std::numeric_limits<double>::infinity();
  else
    result.uncorrected = (a * d) / (b * c);

  result.corrected = table.a == 0 || table.b == 0 || table.c == 0 || table.d == 0;
  const double shift = result.corrected ? 0.5 : 0.0;
  const double ca = a + shift, cb = b + shift, cc = c + shift, cd = d + shift;
  result.value = (ca * cd) / (cb * cc);
  const double se = std::sqrt(1.0 / ca + 1.0 / cb + 1.0 / cc + 1.0 / cd);
  result.ci_low = std::exp(std::log(result.value) - 1.96 * se);
  result.ci_high = std::exp(std::log(result.value) + 1.96 * se);
  return result;
}

namespace {

void require_analyzable(const EncodingMatrix& encodings) {
  if (encodings.rows() == 0) throw Error("analysis: empty encoding set");
  if (!encodings.fully_observed())
    throw Error("analysis: encodings contain missing cells; statistics are computed on fully "
                "observed test-split encodings only");
}

}  // namespace

double source_affinity(const EncodingMatrix& encodings, size_t feature_index,
                       const std::string& target_label) {
  require_analyzable(encodings);
  if (feature_index >= encodings.width()) throw Error("source_affinity: feature index out of range");
  size_t present = 0, from_target = 0;
  for (size_t r = 0; r < encodings.rows(); ++r) {
    const Encoding& row = encodings.row(r);
    if (row.values[feature_index] > 0) {
      ++present;
      if (row.label == target_label) ++from_target;
    }
  }
  if (present == 0) throw Error("source_affinity: feature is present in no trace");
  return static_cast<double>(from_target) / static_cast<double>(present);
}

ContingencyTable contingency_for_feature(const EncodingMatrix& encodings, size_t feature_index,
                                         const std::map<std::string, bool>& correctness_by_trace) {
  require_analyzable(encodings);
  if (feature_index >= encodings.width())
    throw Error("contingency_for_feature: feature index out of range");
  ContingencyTable t;
  for (size_t r = 0; r < encodings.rows(); ++r) {
    const Encoding& row = encodings.row(r);
    auto it = correctness_by_trace.find(row.trace_id);
    if (it == correctness_by_trace.end()) continue;
    const bool present = row.values[feature_index] > 0;
    const bool correct = it->second;
    if (correct && present) ++t.a;
    if (!correct && present) ++t.b;
    if (correct && !present) ++t.c;
    if (!correct && !present) ++t.d;
  }
  return t;
}

FeatureReport feature_report(const EncodingMatrix& encodings,
                             const std::vector<std::string>& names,
                             const std::map<std::string, bool>& correctness_by_trace) {
  require_analyzable(encodings);
  if (names.size() != encodings.width())
    throw Error("feature_report: name count does not match encoding width");

  std::set<std::string> labels;
  for (size_t r = 0; r < encodings.rows(); ++r) labels.insert(encodings.row(r).label);
  if (labels.size() != 2)
    throw Error("feature_report: expected exactly 2 labels, got " + std::to_string(labels.size()));

  FeatureReport report;
  report.label_a = *labels.begin();
  report.label_b = *std::next(labels.begin());

  std::map<std::string, size_t> rows_per_label;
  for (size_t r = 0; r < encodings.rows(); ++r) {
    const Encoding& row = encodings.row(r);
    ++rows_per_label[row.label];
    if (correctness_by_trace.count(row.trace_id))
      ++report.traces_used;
    else
      ++report.traces_excluded;
  }

  for (size_t f = 0; f < encodings.width(); ++f) {
    FeatureStats stats;
    stats.feature_id = static_cast<int>(f);
    stats.name = names[f];

    std::map<std::string, size_t> present_per_label;
    std::map<std::string, double> sum_per_label;
    for (size_t r = 0; r < encodings.rows(); ++r) {
      const Encoding& row = encodings.row(r);
      if (row.values[f] > 0) {
        ++stats.present_count;
        ++present_per_label[row.label];
      }
      sum_per_label[row.label] += row.values[f];
    }
    for (const auto& label : {report.label_a, report.label_b}) {
      const double n_label = static_cast<double>(rows_per_label[label]);
      stats.presence_frequency[label] =
          n_label > 0 ? static_cast<double>(present_per_label[label]) / n_label : 0.0;
      stats.mean_count[label] = n_label > 0 ? sum_per_label[label] / n_label : 0.0;
    }
    if (stats.present_count > 0) {
      stats.affinity[report.label_a] = source_affinity(encodings, f, report.label_a);
      stats.affinity[report.label_b] = source_affinity(encodings, f, report.label_b);
      ContingencyTable table = contingency_for_feature(encodings, f, correctness_by_trace);
      if (table.total() > 0) stats.odds = odds_ratio(table);
    }
    report.rows.push_back(std::move(stats));
  }
  return report;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const FeatureReport& report) {
  std::ostringstream out;
  out << "feature_id,name,present_count"
      << ",freq_" << csv_quote(report.label_a) << ",freq_" << csv_quote(report.label_b)
      << ",mean_" << csv_quote(report.label_a) << ",mean_" << csv_quote(report.label_b)
      << ",affinity_" << csv_quote(report.label_a) << ",affinity_" << csv_quote(report.label_b)
      << ",odds_ratio,or_uncorrected,or_ci_low,or_ci_high,or_corrected\n";
  for (const auto& row : report.rows) {
    out << row.feature_id << "," << csv_quote(row.name) << "," << row.present_count;
    out << "," << fmt(row.presence_frequency.at(report.label_a))
        << "," << fmt(row.presence_frequency.at(report.label_b));
    out << "," << fmt(row.mean_count.at(report.label_a))
        << "," << fmt(row.mean_count.at(report.label_b));
    if (row.affinity.empty()) {
      out << ",NA,NA";
    } else {
      out << "," << fmt(row.affinity.at(report.label_a))
          << "," << fmt(row.affinity.at(report.label_b));
    }
    if (row.odds) {
      out << "," << fmt(row.odds->value) << "," << fmt(row.odds->uncorrected) << ","
          << fmt(row.odds->ci_low) << "," << fmt(row.odds->ci_high) << ","
          << (row.odds->corrected ? "yes" : "no");
    } else {
      out << ",NA,NA,NA,NA,NA";
    }
    out << "\n";
  }
  write_file(path, out.str());
}

void write_report_markdown(const std::filesystem::path& path, const FeatureReport& report) {
  std::ostringstream out;
  out << "# Feature report\n\n";
  out << "Labels: " << report.label_a << " vs " << report.label_b << ". ";
  out << report.traces_used << " trace(s) with known correctness, " << report.traces_excluded
      << " excluded.\n\n";
  out << "| id | feature | freq " << report.label_a << " | freq " << report.label_b
      << " | affinity " << report.label_a << " | odds ratio | 95% CI |\n";
  out << "|---:|---------|-----:|-----:|-----:|-----:|:----|\n";
  for (const auto& row : report.rows) {
    out << "| " << row.feature_id << " | " << row.name << " | "
        << fmt(row.presence_frequency.at(report.label_a)) << " | "
        << fmt(row.presence_frequency.at(report.label_b)) << " | ";
    out << (row.affinity.empty() ? "NA" : fmt(row.affinity.at(report.label_a))) << " | ";
    if (row.odds) {
      out << fmt(row.odds->value) << (row.odds->corrected ? " (corrected)" : "") << " | ["
          << fmt(row.odds->ci_low) << ", " << fmt(row.odds->ci_high) << "] |\n";
    } else {
      out << "NA | NA |\n";
    }
  }
  write_file(path, out.str());
}

}  // namespace lot
