#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lot/encoding.hpp"

namespace lot {

struct ClassifierHyperparams {
  double l2_strength = 1.0;
  int max_iterations = 1000;
  double tolerance = 1e-6;  // on the max-norm of the gradient
};

/// Binary logistic weights over feature dimensions. BoR inputs are
/// standardized per dimension at fit time; PoR inputs are used raw
/// (means 0, stds 1).
struct ClassifierModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::string positive_label;
  std::string negative_label;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  ClassifierHyperparams hyperparams;
  int trained_version = 0;
  EncodingKind kind = EncodingKind::por;

  size_t width() const { return weights.size(); }

  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);
};

struct Prediction {
  std::string label;           // argmax; ties at exactly 0.5 go to positive_label
  double positive_probability; // logistic output for positive_label
};

struct ConfusionCounts {
  size_t true_positive = 0;
  size_t true_negative = 0;
  size_t false_positive = 0;
  size_t false_negative = 0;

  size_t total() const { return true_positive + true_negative + false_positive + false_negative; }
};

struct Evaluation {
  double accuracy = 0.0;
  ConfusionCounts confusion;
};

// Full-batch gradient descent with backtracking line search on the
// L2-regularized mean negative log-likelihood. Deterministic; the seed is
// accepted for interface stability but the optimizer draws nothing from it.
// warm_start, when given, only seeds the initial iterate: the objective is
// strictly convex, so the minimizer it converges to is the same.
ClassifierModel fit_logistic(const DenseMatrix& data, const ClassifierHyperparams& hp,
                             uint64_t seed = 0, const ClassifierModel* warm_start = nullptr);

Prediction predict(const ClassifierModel& model, std::span<const double> encoding);

Evaluation evaluate(const ClassifierModel& model, const DenseMatrix& data);

// Loss and gradient at (weights, bias), exposed for verification against
// finite differences.
double logistic_loss(const DenseMatrix& data, const std::string& positive_label,
                     std::span<const double> weights, double bias, double l2_strength);
void logistic_gradient(const DenseMatrix& data, const std::string& positive_label,
                       std::span<const double> weights, double bias, double l2_strength,
                       std::vector<double>& grad_w, double& grad_b);

}  // namespace lot
