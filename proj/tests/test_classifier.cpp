#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lot/classifier.hpp"
#include "lot/util.hpp"

using namespace lot;

namespace {

DenseMatrix separable_1d() {
  DenseMatrix d;
  d.kind = EncodingKind::por;
  d.taxonomy_version = 1;
  d.width = 1;
  for (int i = 0; i < 10; ++i) {
    d.values.push_back({1.0});
    d.labels.push_back("A");
    d.trace_ids.push_back("a" + std::to_string(i));
  }
  for (int i = 0; i < 10; ++i) {
    d.values.push_back({0.0});
    d.labels.push_back("B");
    d.trace_ids.push_back("b" + std::to_string(i));
  }
  return d;
}

DenseMatrix random_dense(Rng& rng, size_t rows, size_t cols, EncodingKind kind) {
  DenseMatrix d;
  d.kind = kind;
  d.taxonomy_version = 1;
  d.width = cols;
  for (size_t r = 0; r < rows; ++r) {
    std::vector<double> v(cols);
    for (auto& x : v) x = double(rng.below(7));
    d.values.push_back(std::move(v));
    d.labels.push_back(r % 2 ? "A" : "B");
    d.trace_ids.push_back("t" + std::to_string(r));
  }
  return d;
}

}  // namespace

TEST_CASE("separable data reaches training accuracy 1 with a positive weight") {
  ClassifierHyperparams hp;
  hp.l2_strength = 0.01;  // weak regularization
  ClassifierModel model = fit_logistic(separable_1d(), hp);
  CHECK(model.positive_label == "B");  // lexicographically greater of {A, B}... A < B
  Evaluation eval = evaluate(model, separable_1d());
  CHECK(eval.accuracy == 1.0);
  // value 1 means class A here, so the weight toward positive_label B is negative,
  // equivalently the A side carries the positive weight on the dimension
  Prediction on_one = predict(model, std::vector<double>{1.0});
  CHECK(on_one.label == "A");
  CHECK(on_one.positive_probability < 0.1);
  Prediction on_zero = predict(model, std::vector<double>{0.0});
  CHECK(on_zero.label == "B");
  CHECK(on_zero.positive_probability > 0.9);
}

TEST_CASE("identical rows with mixed labels predict 0.5") {
  DenseMatrix d;
  d.kind = EncodingKind::por;
  d.taxonomy_version = 1;
  d.width = 2;
  for (int i = 0; i < 8; ++i) {
    d.values.push_back({1.0, 0.0});
    d.labels.push_back(i % 2 ? "A" : "B");
    d.trace_ids.push_back("t" + std::to_string(i));
  }
  ClassifierModel model = fit_logistic(d, {});
  Prediction p = predict(model, std::vector<double>{1.0, 0.0});
  CHECK(p.positive_probability == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(p.label == model.positive_label);  // tie goes to the positive label
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(11);
  DenseMatrix d = random_dense(rng, 5, 3, EncodingKind::bor);
  std::vector<double> w = {0.3, -0.7, 0.2};
  double b = 0.1;
  const double l2 = 1.0;
  std::vector<double> grad;
  double grad_b = 0.0;
  logistic_gradient(d, "B", w, b, l2, grad, grad_b);

  const double h = 1e-6;
  for (size_t j = 0; j < w.size(); ++j) {
    std::vector<double> hi = w, lo = w;
    hi[j] += h;
    lo[j] -= h;
    double fd = (logistic_loss(d, "B", hi, b, l2) - logistic_loss(d, "B", lo, b, l2)) / (2 * h);
    CHECK(std::abs(fd - grad[j]) <= 1e-5);
  }
  double fd_b = (logistic_loss(d, "B", w, b + h, l2) - logistic_loss(d, "B", w, b - h, l2)) / (2 * h);
  CHECK(std::abs(fd_b - grad_b) <= 1e-5);
}

TEST_CASE("zero weights and bias give probability one half on any input") {
  ClassifierModel model;
  model.weights = {0.0, 0.0, 0.0};
  model.bias = 0.0;
  model.positive_label = "B";
  model.negative_label = "A";
  model.feature_means = {0.0, 0.0, 0.0};
  model.feature_stds = {1.0, 1.0, 1.0};
  Prediction p = predict(model, std::vector<double>{3.0, -1.0, 100.0});
  CHECK(p.positive_probability == 0.5);
  CHECK(p.label == "B");
}

TEST_CASE("width mismatch is rejected") {
  ClassifierModel model = fit_logistic(separable_1d(), {});
  CHECK_THROWS_AS(predict(model, std::vector<double>{1.0, 2.0, 3.0}), Error);
}

TEST_CASE("fit rejects degenerate inputs") {
  DenseMatrix single;
  single.kind = EncodingKind::por;
  single.width = 1;
  single.values = {{1.0}, {0.0}};
  single.labels = {"A", "A"};
  single.trace_ids = {"t1", "t2"};
  CHECK_THROWS_AS(fit_logistic(single, {}), Error);

  DenseMatrix bad = separable_1d();
  bad.values[0][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_logistic(bad, {}), Error);

  DenseMatrix empty;
  CHECK_THROWS_AS(fit_logistic(empty, {}), Error);
}

TEST_CASE("evaluate returns accuracy with confusion counts that sum to total") {
  DenseMatrix d = separable_1d();
  ClassifierModel model = fit_logistic(d, {});
  Evaluation eval = evaluate(model, d);
  CHECK(eval.confusion.total() == d.rows());
  CHECK(eval.accuracy == doctest::Approx(double(eval.confusion.true_positive +
                                                eval.confusion.true_negative) /
                                         double(d.rows())));
  CHECK_THROWS_AS(evaluate(model, DenseMatrix{}), Error);
}

TEST_CASE("shuffled labels on symmetric data give chance accuracy") {
  Rng rng(500);
  DenseMatrix d;
  d.kind = EncodingKind::bor;
  d.taxonomy_version = 1;
  d.width = 4;
  for (size_t r = 0; r < 200; ++r) {
    std::vector<double> v(4);
    for (auto& x : v) x = double(rng.below(5));
    d.values.push_back(std::move(v));
    d.labels.push_back(rng.below(2) ? "A" : "B");  // labels independent of values
    d.trace_ids.push_back("t" + std::to_string(r));
  }
  ClassifierModel model = fit_logistic(d, {});
  // fresh draws from the same null
  DenseMatrix fresh = d;
  for (auto& row : fresh.values)
    for (auto& x : row) x = double(rng.below(5));
  Evaluation eval = evaluate(model, fresh);
  CHECK(eval.accuracy > 0.35);
  CHECK(eval.accuracy < 0.65);
}

TEST_CASE("permutation of feature dimensions leaves predictions bit-identical") {
  Rng rng(13);
  DenseMatrix d = random_dense(rng, 30, 5, EncodingKind::bor);
  const std::vector<size_t> perm = {3, 0, 4, 1, 2};

  DenseMatrix pd = d;
  for (size_t r = 0; r < d.rows(); ++r)
    for (size_t j = 0; j < perm.size(); ++j) pd.values[r][j] = d.values[r][perm[j]];

  ClassifierModel model = fit_logistic(d, {});
  ClassifierModel pmodel = fit_logistic(pd, {});

  for (int q = 0; q < 50; ++q) {
    std::vector<double> query(5), pquery(5);
    for (auto& x : query) x = double(rng.below(7));
    for (size_t j = 0; j < perm.size(); ++j) pquery[j] = query[perm[j]];
    Prediction a = predict(model, query);
    Prediction b = predict(pmodel, pquery);
    CHECK(a.label == b.label);
    CHECK(a.positive_probability == b.positive_probability);  // exact
  }
}

TEST_CASE("scaling one BoR column leaves predicted labels unchanged") {
  Rng rng(29);
  DenseMatrix d = random_dense(rng, 40, 3, EncodingKind::bor);
  // separate the classes a bit so labels are not coin flips
  for (size_t r = 0; r < d.rows(); ++r)
    if (d.labels[r] == "A") d.values[r][0] += 4.0;

  const double scale = 4.0;  // power of two: scaling commutes exactly with standardization
  DenseMatrix scaled = d;
  for (auto& row : scaled.values) row[1] *= scale;

  ClassifierModel model = fit_logistic(d, {});
  ClassifierModel smodel = fit_logistic(scaled, {});

  for (int q = 0; q < 50; ++q) {
    std::vector<double> query(3);
    for (auto& x : query) x = double(rng.below(9));
    std::vector<double> squery = query;
    squery[1] *= scale;
    CHECK(predict(model, query).label == predict(smodel, squery).label);
  }
}

TEST_CASE("loss at the fitted weights does not exceed the loss at zero") {
  Rng rng(31);
  DenseMatrix d = random_dense(rng, 24, 4, EncodingKind::bor);
  ClassifierHyperparams hp;
  ClassifierModel model = fit_logistic(d, hp);
  double at_fit = logistic_loss(d, model.positive_label, model.weights, model.bias, hp.l2_strength);
  std::vector<double> zero(4, 0.0);
  double at_zero = logistic_loss(d, model.positive_label, zero, 0.0, hp.l2_strength);
  CHECK(at_fit <= at_zero);
}

TEST_CASE("constant BoR dimensions get std 1 and weight exactly 0") {
  Rng rng(37);
  DenseMatrix d = random_dense(rng, 20, 3, EncodingKind::bor);
  for (auto& row : d.values) row[1] = 5.0;  // constant column
  for (size_t r = 0; r < d.rows(); ++r)
    if (d.labels[r] == "A") d.values[r][0] += 3.0;
  ClassifierModel model = fit_logistic(d, {});
  CHECK(model.feature_stds[1] == 1.0);
  CHECK(model.weights[1] == 0.0);
}

TEST_CASE("model file round-trips") {
  ClassifierModel model = fit_logistic(separable_1d(), {});
  auto p = std::filesystem::temp_directory_path() / "lot_classifier_model.json";
  model.save(p);
  ClassifierModel back = ClassifierModel::load(p);
  CHECK(back.weights == model.weights);
  CHECK(back.bias == model.bias);
  CHECK(back.positive_label == model.positive_label);
  CHECK(back.feature_stds == model.feature_stds);
  CHECK(back.trained_version == model.trained_version);
  CHECK(back.kind == model.kind);
}

TEST_CASE("warm start converges to the same minimizer") {
  Rng rng(41);
  DenseMatrix d = random_dense(rng, 30, 4, EncodingKind::bor);
  for (size_t r = 0; r < d.rows(); ++r)
    if (d.labels[r] == "A") d.values[r][2] += 2.0;
  ClassifierModel cold = fit_logistic(d, {});
  ClassifierModel scrambled = cold;
  for (auto& w : scrambled.weights) w += 0.37;
  ClassifierModel warm = fit_logistic(d, {}, 0, &scrambled);
  for (size_t j = 0; j < cold.weights.size(); ++j)
    CHECK(warm.weights[j] == doctest::Approx(cold.weights[j]).epsilon(1e-3));
}
