#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lot/dataset.hpp"
#include "lot/encoding.hpp"

namespace lot::testing {

inline ReasoningTrace make_trace(const std::string& id, const std::string& qid,
                                 const std::string& model, const std::string& codename,
                                 const std::string& text,
                                 std::optional<bool> correct = std::nullopt) {
  ReasoningTrace t;
  t.id = id;
  t.question_id = qid;
  t.dataset_id = "TEST";
  t.model_id = model;
  if (!codename.empty()) t.codename = codename;
  t.text = text;
  t.char_count = text.size();
  t.is_correct = correct;
  return t;
}

inline TracePair make_pair(const std::string& qid, const std::string& text_a,
                           const std::string& text_b) {
  TracePair p;
  p.question_id = qid;
  p.trace_a = make_trace("A:" + qid, qid, "model-a", "Omelet", text_a);
  p.trace_b = make_trace("B:" + qid, qid, "model-b", "Waffle", text_b);
  return p;
}

// Independent per-cell brute force mirroring the documented KNN contract:
// candidates are rows observing the column, ranked by distance over jointly
// observed dimensions scaled by their count, ties to the lower row index.
inline DenseMatrix knn_impute_brute_force(const EncodingMatrix& matrix, int k) {
  const size_t n = matrix.rows();
  const size_t width = matrix.width();
  DenseMatrix dense;
  dense.kind = matrix.kind();
  dense.taxonomy_version = matrix.current_version();
  dense.width = width;
  dense.values.assign(n, std::vector<double>(width, 0.0));
  for (size_t r = 0; r < n; ++r) {
    dense.labels.push_back(matrix.row(r).label);
    dense.trace_ids.push_back(matrix.row(r).trace_id);
    for (size_t c = 0; c < matrix.row(r).values.size(); ++c)
      dense.values[r][c] = matrix.row(r).values[c];
  }
  for (size_t c = 0; c < width; ++c) {
    for (size_t r = 0; r < n; ++r) {
      if (matrix.observed(r, c)) continue;
      std::vector<std::pair<double, size_t>> candidates;
      for (size_t o = 0; o < n; ++o) {
        if (o == r || !matrix.observed(o, c)) continue;
        size_t joint = std::min(matrix.row(r).values.size(), matrix.row(o).values.size());
        double sum = 0.0;
        for (size_t j = 0; j < joint; ++j) {
          double d = double(matrix.row(r).values[j]) - double(matrix.row(o).values[j]);
          sum += d * d;
        }
        double dist = joint == 0 ? std::numeric_limits<double>::infinity()
                                 : std::sqrt(sum / double(joint));
        candidates.emplace_back(dist, o);
      }
      if (candidates.empty()) continue;
      std::sort(candidates.begin(), candidates.end());
      size_t take = std::min<size_t>(size_t(k), candidates.size());
      double sum = 0.0;
      for (size_t i = 0; i < take; ++i) sum += matrix.row(candidates[i].second).values[c];
      dense.values[r][c] = sum / double(take);
    }
  }
  return dense;
}

}  // namespace lot::testing
