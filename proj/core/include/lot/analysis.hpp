#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lot/encoding.hpp"

namespace lot {

/// 2x2 correctness-vs-feature counts.
///   a: correct and feature present    b: wrong and present
///   c: correct and feature absent     d: wrong and absent
struct ContingencyTable {
  size_t a = 0;
  size_t b = 0;
  size_t c = 0;
  size_t d = 0;

  size_t total() const { return a + b + c + d; }
};

struct OddsRatio {
  double value = 0.0;  // corrected when any cell is zero
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool corrected = false;
  double uncorrected = 0.0;  // may be 0, inf, or nan
};

// (a*d)/(b*c); when any cell is zero, 0.5 is added to every cell first and
// the raw value is kept in `uncorrected`. The 95% interval comes from the
// normal approximation on the log scale.
OddsRatio odds_ratio(const ContingencyTable& table);

// Fraction of feature-bearing traces (value > 0) whose label is
// target_label. Affinities to the two labels sum to 1.
double source_affinity(const EncodingMatrix& encodings, size_t feature_index,
                       const std::string& target_label);

struct FeatureStats {
  int feature_id = 0;
  std::string name;
  size_t present_count = 0;
  // per label, keyed by the two codenames
  std::map<std::string, double> presence_frequency;
  std::map<std::string, double> mean_count;
  std::map<std::string, double> affinity;  // defined only when present somewhere
  std::optional<OddsRatio> odds;           // absent when the feature occurs nowhere
};

struct FeatureReport {
  std::string label_a;  // lexicographically first codename
  std::string label_b;
  size_t traces_used = 0;
  size_t traces_excluded = 0;  // correctness unknown
  std::vector<FeatureStats> rows;  // ordered by feature_id
};

// Behavioral statistics over fully observed test-split encodings; matrices
// containing imputed or missing cells are rejected. Traces without a known
// correctness flag are excluded from the odds ratios and counted.
FeatureReport feature_report(const EncodingMatrix& encodings,
                             const std::vector<std::string>& names,
                             const std::map<std::string, bool>& correctness_by_trace);

ContingencyTable contingency_for_feature(const EncodingMatrix& encodings, size_t feature_index,
                                         const std::map<std::string, bool>& correctness_by_trace);

void write_report_csv(const std::filesystem::path& path, const FeatureReport& report);
void write_report_markdown(const std::filesystem::path& path, const FeatureReport& report);

}  // namespace lot
