#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lot {

enum class EncodingKind { por, bor };

std::string to_string(EncodingKind kind);
EncodingKind encoding_kind_from_string(const std::string& s);

/// A trace projected into taxonomy space. PoR values are 0/1, BoR values are
/// non-negative sentence counts.
struct Encoding {
  std::string trace_id;
  int taxonomy_version = 0;
  EncodingKind kind = EncodingKind::por;
  std::vector<int> values;
  std::string label;  // codename

  void validate() const;
};

/// Dense, fully-valued view used to fit and evaluate the classifier.
struct DenseMatrix {
  EncodingKind kind = EncodingKind::por;
  int taxonomy_version = 0;
  size_t width = 0;
  std::vector<std::vector<double>> values;  // rows x width
  std::vector<std::string> labels;
  std::vector<std::string> trace_ids;

  size_t rows() const { return values.size(); }
};

struct LoadedEncodings;

/// Encoded traces accumulated across taxonomy versions. A row annotated at
/// version v observes exactly the first width(v) columns; later columns are
/// missing until imputation. Widths grow strictly with versions, so the
/// observed cells of any row form a prefix.
class EncodingMatrix {
 public:
  EncodingMatrix(EncodingKind kind, int version, size_t width);

  EncodingKind kind() const { return kind_; }
  int current_version() const { return current_version_; }
  size_t width() const { return width_; }
  size_t rows() const { return rows_.size(); }
  const Encoding& row(size_t r) const { return rows_.at(r); }
  const std::vector<Encoding>& all_rows() const { return rows_; }

  // Row must be annotated at the current version and width.
  void append(Encoding row);

  // Grows the matrix to a new taxonomy version. Existing rows keep their
  // values; the new columns are missing for them. Equal width is a no-op.
  void expand(int new_version, size_t new_width);

  bool observed(size_t r, size_t c) const;
  bool fully_observed() const;

  // Missing cells become 0. PoR only.
  DenseMatrix impute_zero() const;

  // Each missing cell becomes the mean of its column over the k nearest
  // rows that observe the column. Distance is the Euclidean distance over
  // jointly observed dimensions, scaled by their count; ties break toward
  // the lower row index. Columns observed by nobody fall back to 0 with a
  // warning. BoR only.
  DenseMatrix impute_knn(int k, std::vector<std::string>* warnings = nullptr) const;

  // Requires a fully observed matrix (the evaluation path).
  DenseMatrix dense_observed() const;

  void save(const std::filesystem::path& path, const std::vector<std::string>& feature_names) const;
  static LoadedEncodings load(const std::filesystem::path& path);

 private:
  EncodingKind kind_;
  int current_version_;
  size_t width_;
  std::vector<std::pair<int, size_t>> version_widths_;  // strictly increasing widths
  std::vector<Encoding> rows_;

  size_t width_at(int version) const;
};

struct LoadedEncodings {
  EncodingMatrix matrix;
  std::vector<std::string> feature_names;
};

// Per-dimension arithmetic mean over rows sharing kind, version, and label.
std::vector<double> average_encoding(const std::vector<Encoding>& rows, const std::string& label);

}  // namespace lot
