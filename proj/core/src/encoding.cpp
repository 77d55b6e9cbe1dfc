#include "lot/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lot/util.hpp"

namespace lot {

std::string to_string(EncodingKind kind) { return kind == EncodingKind::por ? "por" : "bor"; }

EncodingKind encoding_kind_from_string(const std::string& s) {
  std::string k = lower_copy(trim(s));
  if (k == "por") return EncodingKind::por;
  if (k == "bor") return EncodingKind::bor;
  throw Error("unknown encoding kind \"" + s + "\" (expected por or bor)");
}

void Encoding::validate() const {
  for (int v : values) {
    if (v < 0) throw Error("encoding for " + trace_id + " has a negative value");
    if (kind == EncodingKind::por && v > 1)
      throw Error("PoR encoding for " + trace_id + " has a non-binary value");
  }
}

EncodingMatrix::EncodingMatrix(EncodingKind kind, int version, size_t width)
    : kind_(kind), current_version_(version), width_(width) {
  if (version < 1) throw Error("EncodingMatrix: version must be >= 1");
  version_widths_.emplace_back(version, width);
}

void EncodingMatrix::append(Encoding row) {
  if (row.kind != kind_) throw Error("append: encoding kind mismatch");
  if (row.taxonomy_version != current_version_)
    throw Error("append: row is at version " + std::to_string(row.taxonomy_version) +
                ", matrix is at " + std::to_string(current_version_));
  if (row.values.size() != width_)
    throw Error("append: row width " + std::to_string(row.values.size()) +
                " != matrix width " + std::to_string(width_));
  row.validate();
  rows_.push_back(std::move(row));
}

void EncodingMatrix::expand(int new_version, size_t new_width) {
  if (new_version <= current_version_)
    throw Error("expand: new version must exceed " + std::to_string(current_version_));
  if (new_width < width_) throw Error("expand: cannot shrink width");
  if (new_width == width_) return;  // identity
  current_version_ = new_version;
  width_ = new_width;
  version_widths_.emplace_back(new_version, new_width);
}

size_t EncodingMatrix::width_at(int version) const {
  for (const auto& [v, w] : version_widths_)
    if (v == version) return w;
  throw Error("matrix has no record of taxonomy version " + std::to_string(version));
}

bool EncodingMatrix::observed(size_t r, size_t c) const {
  if (c >= width_) throw Error("observed: column out of range");
  return c < rows_.at(r).values.size();
}

bool EncodingMatrix::fully_observed() const {
  for (const auto& row : rows_)
    if (row.values.size() != width_) return false;
  return true;
}

DenseMatrix EncodingMatrix::impute_zero() const {
  if (kind_ != EncodingKind::por) throw Error("impute_zero applies to PoR matrices only");
  DenseMatrix dense;
  dense.kind = kind_;
  dense.taxonomy_version = current_version_;
  dense.width = width_;
  for (const auto& row : rows_) {
    std::vector<double> v(width_, 0.0);
    for (size_t c = 0; c < row.values.size(); ++c) v[c] = row.values[c];
    dense.values.push_back(std::move(v));
    dense.labels.push_back(row.label);
    dense.trace_ids.push_back(row.trace_id);
  }
  return dense;
}

DenseMatrix EncodingMatrix::impute_knn(int k, std::vector<std::string>* warnings) const {
  if (kind_ != EncodingKind::bor) throw Error("impute_knn applies to BoR matrices only");
  if (k < 1) throw Error("impute_knn: k must be >= 1");
  if (rows_.empty()) throw Error("impute_knn: matrix has no rows");

  const size_t n = rows_.size();
  DenseMatrix dense;
  dense.kind = kind_;
  dense.taxonomy_version = current_version_;
  dense.width = width_;
  dense.values.assign(n, std::vector<double>(width_, 0.0));
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < rows_[r].values.size(); ++c) dense.values[r][c] = rows_[r].values[c];
    dense.labels.push_back(rows_[r].label);
    dense.trace_ids.push_back(rows_[r].trace_id);
  }

  // distance over jointly observed dimensions, normalized by their count so
  // narrow early rows stay comparable to wide late rows
  const auto distance = [&](size_t r1, size_t r2) -> double {
    size_t joint = std::min(rows_[r1].values.size(), rows_[r2].values.size());
    if (joint == 0) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (size_t c = 0; c < joint; ++c) {
      double d = static_cast<double>(rows_[r1].values[c]) - static_cast<double>(rows_[r2].values[c]);
      sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(joint));
  };

  std::vector<size_t> empty_columns;
  for (size_t c = 0; c < width_; ++c) {
    std::vector<size_t> observers;
    for (size_t r = 0; r < n; ++r)
      if (c < rows_[r].values.size()) observers.push_back(r);
    if (observers.empty()) {
      empty_columns.push_back(c);
      continue;  // cells stay 0
    }
    for (size_t r = 0; r < n; ++r) {
      if (c < rows_[r].values.size()) continue;  // observed
      std::vector<std::pair<double, size_t>> candidates;
      candidates.reserve(observers.size());
      for (size_t o : observers)
        if (o != r) candidates.emplace_back(distance(r, o), o);
      if (candidates.empty()) continue;  // the row itself is the only observer; keep 0
      std::sort(candidates.begin(), candidates.end());
      size_t take = std::min<size_t>(static_cast<size_t>(k), candidates.size());
      double sum = 0.0;
      for (size_t i = 0; i < take; ++i) sum += rows_[candidates[i].second].values[c];
      dense.values[r][c] = sum / static_cast<double>(take);
    }
  }
  if (!empty_columns.empty()) {
    std::ostringstream msg;
    msg << "impute_knn: " << empty_columns.size()
        << " column(s) observed by no row were filled with 0 (first: column "
        << empty_columns.front() << ")";
    if (warnings) warnings->push_back(msg.str());
    warn(msg.str());
  }
  return dense;
}

DenseMatrix EncodingMatrix::dense_observed() const {
  if (!fully_observed())
    throw Error("matrix contains missing cells; only training matrices may be imputed");
  DenseMatrix dense;
  dense.kind = kind_;
  dense.taxonomy_version = current_version_;
  dense.width = width_;
  for (const auto& row : rows_) {
    dense.values.emplace_back(row.values.begin(), row.values.end());
    dense.labels.push_back(row.label);
    dense.trace_ids.push_back(row.trace_id);
  }
  return dense;
}

void EncodingMatrix::save(const std::filesystem::path& path,
                          const std::vector<std::string>& feature_names) const {
  if (feature_names.size() != width_)
    throw Error("save: feature name count does not match matrix width");
  std::ostringstream out;
  out << "# kind=" << to_string(kind_) << " versions=";
  for (size_t i = 0; i < version_widths_.size(); ++i) {
    if (i) out << ",";
    out << version_widths_[i].first << ":" << version_widths_[i].second;
  }
  out << "\n";
  out << "trace_id\tlabel\tversion";
  for (const auto& name : feature_names) out << "\t" << name;
  out << "\n";
  for (const auto& row : rows_) {
    out << row.trace_id << "\t" << row.label << "\t" << row.taxonomy_version;
    for (size_t c = 0; c < width_; ++c) {
      out << "\t";
      if (c < row.values.size())
        out << row.values[c];
      else
        out << "na";
    }
    out << "\n";
  }
  write_file(path, out.str());
}

LoadedEncodings EncodingMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open encoding file: " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("# kind=", 0) != 0)
    throw Error(path.string() + ": missing \"# kind=...\" header");
  std::istringstream hs(header.substr(2));
  std::string kind_field, versions_field;
  hs >> kind_field >> versions_field;
  if (kind_field.rfind("kind=", 0) != 0 || versions_field.rfind("versions=", 0) != 0)
    throw Error(path.string() + ": malformed header");
  EncodingKind kind = encoding_kind_from_string(kind_field.substr(5));

  std::vector<std::pair<int, size_t>> version_widths;
  {
    std::istringstream vs(versions_field.substr(9));
    std::string item;
    while (std::getline(vs, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw Error(path.string() + ": malformed versions header");
      version_widths.emplace_back(std::stoi(item.substr(0, colon)),
                                  static_cast<size_t>(std::stoul(item.substr(colon + 1))));
    }
  }
  if (version_widths.empty()) throw Error(path.string() + ": no versions in header");

  std::string columns_line;
  if (!std::getline(in, columns_line)) throw Error(path.string() + ": missing column header");
  std::vector<std::string> columns;
  {
    std::istringstream cs(columns_line);
    std::string col;
    while (std::getline(cs, col, '\t')) columns.push_back(col);
  }
  if (columns.size() < 3 || columns[0] != "trace_id" || columns[1] != "label" || columns[2] != "version")
    throw Error(path.string() + ": column header must start with trace_id, label, version");
  std::vector<std::string> names(columns.begin() + 3, columns.end());

  EncodingMatrix m(kind, version_widths.front().first, version_widths.front().second);
  for (size_t i = 1; i < version_widths.size(); ++i)
    m.expand(version_widths[i].first, version_widths[i].second);
  if (names.size() != m.width_) throw Error(path.string() + ": header width mismatch");

  std::string line;
  size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, '\t')) fields.push_back(field);
    if (fields.size() != 3 + m.width_)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    Encoding row;
    row.trace_id = fields[0];
    row.label = fields[1];
    row.taxonomy_version = std::stoi(fields[2]);
    row.kind = kind;
    bool in_missing = false;
    for (size_t c = 0; c < m.width_; ++c) {
      const std::string& cell = fields[3 + c];
      if (cell == "na") {
        in_missing = true;
        continue;
      }
      if (in_missing)
        throw Error(path.string() + ":" + std::to_string(line_no) +
                    ": observed cell after a missing one (mask must be a prefix)");
      row.values.push_back(std::stoi(cell));
    }
    if (row.values.size() != m.width_at(row.taxonomy_version))
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": observed width does not match the row's version");
    row.validate();
    m.rows_.push_back(std::move(row));
  }
  return LoadedEncodings{std::move(m), std::move(names)};
}

std::vector<double> average_encoding(const std::vector<Encoding>& rows, const std::string& label) {
  if (rows.empty()) throw Error("average_encoding: no rows");
  const int version = rows.front().taxonomy_version;
  const EncodingKind kind = rows.front().kind;
  const size_t width = rows.front().values.size();
  std::vector<double> mean(width, 0.0);
  size_t count = 0;
  for (const auto& row : rows) {
    if (row.taxonomy_version != version) throw Error("average_encoding: mixed taxonomy versions");
    if (row.kind != kind) throw Error("average_encoding: mixed encoding kinds");
    if (row.label != label) throw Error("average_encoding: row label \"" + row.label +
                                        "\" does not match \"" + label + "\"");
    if (row.values.size() != width) throw Error("average_encoding: ragged rows");
    for (size_t c = 0; c < width; ++c) mean[c] += row.values[c];
    ++count;
  }
  for (double& v : mean) v /= static_cast<double>(count);
  return mean;
}

}  // namespace lot
