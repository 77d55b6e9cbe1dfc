#include "lot/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "lot/util.hpp"

namespace lot {

using nlohmann::json;

namespace {

// Sorting the terms before summing makes the reduction independent of
// feature order, so permuting dimensions permutes nothing downstream.
double stable_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

std::vector<double>& scratch_terms(size_t n) {
  thread_local std::vector<double> terms;
  terms.resize(n);
  return terms;
}

double stable_dot(std::span<const double> a, std::span<const double> b) {
  auto& terms = scratch_terms(a.size());
  for (size_t i = 0; i < a.size(); ++i) terms[i] = a[i] * b[i];
  return stable_sum(terms);
}

double stable_sq_norm(std::span<const double> v) {
  auto& terms = scratch_terms(v.size());
  for (size_t i = 0; i < v.size(); ++i) terms[i] = v[i] * v[i];
  return stable_sum(terms);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z), overflow-safe
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

struct Standardized {
  std::vector<std::vector<double>> z;  // rows x width
  std::vector<double> means, stds;
};

Standardized standardize(const DenseMatrix& data) {
  const size_t n = data.rows();
  const size_t d = data.width;
  Standardized s;
  s.means.assign(d, 0.0);
  s.stds.assign(d, 1.0);
  if (data.kind == EncodingKind::bor) {
    for (size_t j = 0; j < d; ++j) {
      double sum = 0.0;
      for (size_t i = 0; i < n; ++i) sum += data.values[i][j];
      s.means[j] = sum / static_cast<double>(n);
      double var = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double c = data.values[i][j] - s.means[j];
        var += c * c;
      }
      var /= static_cast<double>(n);
      double sd = std::sqrt(var);
      s.stds[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  s.z.assign(n, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) s.z[i][j] = (data.values[i][j] - s.means[j]) / s.stds[j];
  return s;
}

double loss_standardized(const std::vector<std::vector<double>>& z, const std::vector<double>& y,
                         std::span<const double> w, double b, double l2) {
  const size_t n = z.size();
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double margin = stable_dot(w, z[i]) + b;
    total += softplus(margin) - y[i] * margin;
  }
  return total / static_cast<double>(n) +
         l2 / (2.0 * static_cast<double>(n)) * stable_sq_norm(w);
}

void gradient_standardized(const std::vector<std::vector<double>>& z, const std::vector<double>& y,
                           std::span<const double> w, double b, double l2,
                           std::vector<double>& gw, double& gb) {
  const size_t n = z.size();
  const size_t d = w.size();
  gw.assign(d, 0.0);
  gb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r = sigmoid(stable_dot(w, z[i]) + b) - y[i];
    for (size_t j = 0; j < d; ++j) gw[j] += r * z[i][j];
    gb += r;
  }
  for (size_t j = 0; j < d; ++j) gw[j] = gw[j] / static_cast<double>(n) + l2 / static_cast<double>(n) * w[j];
  gb /= static_cast<double>(n);
}

std::vector<double> targets_for(const DenseMatrix& data, const std::string& positive_label) {
  std::vector<double> y(data.rows());
  for (size_t i = 0; i < data.rows(); ++i) y[i] = data.labels[i] == positive_label ? 1.0 : 0.0;
  return y;
}

}  // namespace

double logistic_loss(const DenseMatrix& data, const std::string& positive_label,
                     std::span<const double> weights, double bias, double l2_strength) {
  Standardized s = standardize(data);
  return loss_standardized(s.z, targets_for(data, positive_label), weights, bias, l2_strength);
}

void logistic_gradient(const DenseMatrix& data, const std::string& positive_label,
                       std::span<const double> weights, double bias, double l2_strength,
                       std::vector<double>& grad_w, double& grad_b) {
  Standardized s = standardize(data);
  gradient_standardized(s.z, targets_for(data, positive_label), weights, bias, l2_strength,
                        grad_w, grad_b);
}

ClassifierModel fit_logistic(const DenseMatrix& data, const ClassifierHyperparams& hp,
                             [[maybe_unused]] uint64_t seed, const ClassifierModel* warm_start) {
  const size_t n = data.rows();
  const size_t d = data.width;
  if (n == 0) throw Error("fit: empty matrix");
  if (data.labels.size() != n) throw Error("fit: label count does not match rows");
  if (hp.max_iterations < 1) throw Error("fit: max_iterations must be >= 1");
  if (hp.l2_strength < 0) throw Error("fit: l2_strength must be >= 0");

  std::set<std::string> label_set(data.labels.begin(), data.labels.end());
  if (label_set.size() != 2)
    throw Error("fit: need exactly 2 classes, got " + std::to_string(label_set.size()));
  const std::string negative = *label_set.begin();
  const std::string positive = *std::next(label_set.begin());
  size_t n_pos = 0;
  for (const auto& l : data.labels) n_pos += l == positive ? 1 : 0;
  if (n_pos != n - n_pos)
    warn("fit: classes are unbalanced (" + std::to_string(n_pos) + " vs " +
         std::to_string(n - n_pos) + ")");

  for (const auto& row : data.values) {
    if (row.size() != d) throw Error("fit: ragged matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw Error("fit: non-finite value in matrix");
  }

  Standardized s = standardize(data);
  std::vector<double> y = targets_for(data, positive);

  // dims where the std fallback fired contribute nothing after centering;
  // their optimal weight is exactly 0
  std::vector<size_t> degenerate;
  if (data.kind == EncodingKind::bor)
    for (size_t j = 0; j < d; ++j) {
      bool constant = true;
      for (size_t i = 1; i < n && constant; ++i)
        constant = data.values[i][j] == data.values[0][j];
      if (constant) degenerate.push_back(j);
    }

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  if (warm_start && warm_start->positive_label == positive) {
    for (size_t j = 0; j < std::min(d, warm_start->weights.size()); ++j)
      w[j] = warm_start->weights[j];
    b = warm_start->bias;
    for (size_t j : degenerate) w[j] = 0.0;
  }
  double loss = loss_standardized(s.z, y, w, b, hp.l2_strength);
  double step = 1.0;
  std::vector<double> gw;
  double gb = 0.0;

  for (int iter = 0; iter < hp.max_iterations; ++iter) {
    gradient_standardized(s.z, y, w, b, hp.l2_strength, gw, gb);
    double gmax = std::abs(gb);
    for (double g : gw) gmax = std::max(gmax, std::abs(g));
    if (gmax <= hp.tolerance) break;

    double g2 = stable_sq_norm(gw) + gb * gb;
    double trial = std::min(step * 2.0, 1e6);
    std::vector<double> w_next(d);
    double b_next = 0.0, loss_next = 0.0;
    bool accepted = false;
    while (trial >= 1e-18) {
      for (size_t j = 0; j < d; ++j) w_next[j] = w[j] - trial * gw[j];
      b_next = b - trial * gb;
      loss_next = loss_standardized(s.z, y, w_next, b_next, hp.l2_strength);
      if (loss_next <= loss - 1e-4 * trial * g2) {
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;  // no descent direction at double precision
    w.swap(w_next);
    b = b_next;
    loss = loss_next;
    step = trial;
  }
  for (size_t j : degenerate) w[j] = 0.0;

  ClassifierModel model;
  model.weights = std::move(w);
  model.bias = b;
  model.positive_label = positive;
  model.negative_label = negative;
  model.feature_means = std::move(s.means);
  model.feature_stds = std::move(s.stds);
  model.hyperparams = hp;
  model.trained_version = data.taxonomy_version;
  model.kind = data.kind;
  return model;
}

Prediction predict(const ClassifierModel& model, std::span<const double> encoding) {
  if (encoding.size() != model.width())
    throw Error("predict: encoding width " + std::to_string(encoding.size()) +
                " != model width " + std::to_string(model.width()));
  std::vector<double> z(encoding.size());
  for (size_t j = 0; j < z.size(); ++j)
    z[j] = (encoding[j] - model.feature_means[j]) / model.feature_stds[j];
  double p = sigmoid(stable_dot(model.weights, z) + model.bias);
  return Prediction{p >= 0.5 ? model.positive_label : model.negative_label, p};
}

Evaluation evaluate(const ClassifierModel& model, const DenseMatrix& data) {
  if (data.rows() == 0) throw Error("evaluate: empty matrix");
  Evaluation eval;
  for (size_t i = 0; i < data.rows(); ++i) {
    const std::string& truth = data.labels[i];
    if (truth != model.positive_label && truth != model.negative_label)
      throw Error("evaluate: label \"" + truth + "\" unknown to the model");
    Prediction pred = predict(model, data.values[i]);
    const bool is_pos = truth == model.positive_label;
    const bool said_pos = pred.label == model.positive_label;
    if (is_pos && said_pos) ++eval.confusion.true_positive;
    if (is_pos && !said_pos) ++eval.confusion.false_negative;
    if (!is_pos && said_pos) ++eval.confusion.false_positive;
    if (!is_pos && !said_pos) ++eval.confusion.true_negative;
  }
  eval.accuracy = static_cast<double>(eval.confusion.true_positive + eval.confusion.true_negative) /
                  static_cast<double>(data.rows());
  return eval;
}

void ClassifierModel::save(const std::filesystem::path& path) const {
  json j;
  j["weights"] = weights;
  j["bias"] = bias;
  j["positive_label"] = positive_label;
  j["negative_label"] = negative_label;
  j["feature_means"] = feature_means;
  j["feature_stds"] = feature_stds;
  j["hyperparams"] = {{"l2_strength", hyperparams.l2_strength},
                      {"max_iterations", hyperparams.max_iterations},
                      {"tolerance", hyperparams.tolerance}};
  j["trained_version"] = trained_version;
  j["kind"] = to_string(kind);
  write_file(path, j.dump(2) + "\n");
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed model file " + path.string() + ": " + e.what());
  }
  ClassifierModel m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.positive_label = j.at("positive_label").get<std::string>();
    m.negative_label = j.at("negative_label").get<std::string>();
    m.feature_means = j.at("feature_means").get<std::vector<double>>();
    m.feature_stds = j.at("feature_stds").get<std::vector<double>>();
    m.hyperparams.l2_strength = j.at("hyperparams").at("l2_strength").get<double>();
    m.hyperparams.max_iterations = j.at("hyperparams").at("max_iterations").get<int>();
    m.hyperparams.tolerance = j.at("hyperparams").at("tolerance").get<double>();
    m.trained_version = j.at("trained_version").get<int>();
    m.kind = encoding_kind_from_string(j.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw Error("model file " + path.string() + " is missing fields: " + e.what());
  }
  if (m.feature_means.size() != m.weights.size() || m.feature_stds.size() != m.weights.size())
    throw Error("model file " + path.string() + ": standardization width mismatch");
  for (double sd : m.feature_stds)
    if (!(sd > 0)) throw Error("model file " + path.string() + ": stds must be positive");
  return m;
}

}  // namespace lot
