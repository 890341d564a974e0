#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "freqlab/error.hpp"
#include "freqlab/linear.hpp"
#include "helpers.hpp"

using namespace freqlab;
using freqlab::testing::random_matrix;

namespace {

LabeledSet clouds(int per_class, int classes, double separation, std::uint64_t seed, int dims = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  LabeledSet s{Matrix(per_class * classes, dims), {}};
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      const int row = c * per_class + i;
      for (int d = 0; d < dims; ++d) s.X(row, d) = n(rng) + (d == c % dims ? separation * (c + 1) : 0.0);
      s.y.push_back(c);
    }
  return s;
}

TrainConfig quick(int epochs = 200) {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 32;
  cfg.max_epochs = epochs;
  cfg.early_stop_patience = epochs;
  cfg.rng_seed = 1;
  return cfg;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

void check_logistic_gradient(LinearModel model, const LabeledSet& data) {
  const LinearModel g = logistic_gradient(model, data);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
    const double keep = model.weights.data()[i];
    model.weights.data()[i] = keep + h;
    const double up = logistic_objective(model, data);
    model.weights.data()[i] = keep - h;
    const double down = logistic_objective(model, data);
    model.weights.data()[i] = keep;
    EXPECT_LT(relative_error((up - down) / (2 * h), g.weights.data()[i]), 1e-6) << "weight " << i;
  }
  for (Eigen::Index i = 0; i < model.bias.size(); ++i) {
    const double keep = model.bias[i];
    model.bias[i] = keep + h;
    const double up = logistic_objective(model, data);
    model.bias[i] = keep - h;
    const double down = logistic_objective(model, data);
    model.bias[i] = keep;
    EXPECT_LT(relative_error((up - down) / (2 * h), g.bias[i]), 1e-6) << "bias " << i;
  }
}

std::vector<int> brute_knn(const LabeledSet& train, const Matrix& q, int k) {
  std::vector<int> out;
  const int classes = count_classes(train.y);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    std::vector<std::pair<double, int>> d;
    for (int i = 0; i < train.count(); ++i) d.push_back({(train.X.row(i) - q.row(r)).norm(), train.y[static_cast<std::size_t>(i)]});
    std::sort(d.begin(), d.end());
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    std::vector<double> dist(static_cast<std::size_t>(classes), 0.0);
    for (int j = 0; j < k; ++j) {
      ++votes[static_cast<std::size_t>(d[static_cast<std::size_t>(j)].second)];
      dist[static_cast<std::size_t>(d[static_cast<std::size_t>(j)].second)] += d[static_cast<std::size_t>(j)].first;
    }
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      const auto cs = static_cast<std::size_t>(c), bs = static_cast<std::size_t>(best);
      if (votes[cs] > votes[bs] || (votes[cs] == votes[bs] && votes[cs] > 0 && dist[cs] < dist[bs])) best = c;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST(Logistic, GradientMatchesFiniteDifferencesBinary) {
  LabeledSet data{random_matrix(9, 5, 1, -2, 2), {0, 1, 1, 0, 1, 0, 0, 1, 1}};
  LinearModel m;
  m.weights = random_matrix(1, 5, 2, -0.5, 0.5);
  m.bias = Vector::Constant(1, 0.1);
  m.reg_kind = RegKind::L2;
  m.reg_lambda = 0.03;
  m.num_classes = 2;
  check_logistic_gradient(m, data);
}

TEST(Logistic, GradientMatchesFiniteDifferencesMultinomial) {
  LabeledSet data{random_matrix(12, 4, 3, -2, 2), {0, 1, 2, 2, 1, 0, 0, 1, 2, 2, 1, 0}};
  LinearModel m;
  m.weights = random_matrix(3, 4, 4, -0.5, 0.5);
  m.bias = Vector::LinSpaced(3, -0.2, 0.2);
  m.reg_kind = RegKind::L2;
  m.reg_lambda = 0.01;
  m.num_classes = 3;
  check_logistic_gradient(m, data);
}

TEST(Logistic, SeparableCloudsAreFit) {
  const LabeledSet data = clouds(50, 2, 8.0, 5);
  const LinearTrainResult r = train_logistic(data, nullptr, RegKind::L2, 1e-4, quick());
  EXPECT_EQ(evaluate(r.model, data).accuracy, 1.0);
}

TEST(Logistic, HugeRidgePenaltyCollapsesToPrior) {
  LabeledSet data = clouds(30, 2, 4.0, 6);
  data.X.conservativeResize(70, Eigen::NoChange);
  data.y.resize(70);
  for (int i = 60; i < 70; ++i) {
    data.X.row(i) = data.X.row(i - 40);
    data.y[static_cast<std::size_t>(i)] = 1;
  }
  // Adam settles within about one learning rate of the optimum, so the step
  // is kept below the tolerance.
  TrainConfig cfg = quick(300);
  cfg.learning_rate = 1e-3;
  const LinearTrainResult r = train_logistic(data, nullptr, RegKind::L2, 1e3, cfg);
  EXPECT_LT(r.model.weights.cwiseAbs().maxCoeff(), 5e-3);
  for (int p : r.model.predict(data.X)) EXPECT_EQ(p, 1);
}

TEST(Logistic, StrongLassoZeroesMostWeights) {
  LabeledSet data = clouds(60, 2, 3.0, 7, 40);
  const LinearTrainResult r = train_logistic(data, nullptr, RegKind::L1, 0.1, quick(100));
  const long zeros = (r.model.weights.array() == 0.0).count();
  EXPECT_GE(zeros, static_cast<long>(0.9 * r.model.weights.size()));
}

TEST(Logistic, ReturnsBestValidationSnapshot) {
  const LabeledSet train = clouds(40, 3, 2.0, 8, 3);
  const LabeledSet val = clouds(20, 3, 2.0, 9, 3);
  TrainConfig cfg = quick(40);
  cfg.early_stop_patience = 5;
  const LinearTrainResult r = train_logistic(train, &val, RegKind::L2, 1e-3, cfg);
  double best = 0.0;
  for (const auto& h : r.history) best = std::max(best, h.val_accuracy);
  EXPECT_DOUBLE_EQ(evaluate(r.model, val).accuracy, best);
}

TEST(Logistic, IsDeterministic) {
  const LabeledSet data = clouds(30, 2, 2.0, 10, 6);
  const auto a = train_logistic(data, nullptr, RegKind::L1, 1e-2, quick(20));
  const auto b = train_logistic(data, nullptr, RegKind::L1, 1e-2, quick(20));
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.model.bias, b.model.bias);
}

TEST(Logistic, Errors) {
  LabeledSet single{random_matrix(4, 2, 11), {1, 1, 1, 1}};
  try {
    train_logistic(single, nullptr, RegKind::L2, 0.1, quick(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateLabels);
  }
  LabeledSet bad{random_matrix(4, 2, 12), {0, 1, 0, 1}};
  bad.X(2, 1) = std::nan("");
  try {
    train_logistic(bad, nullptr, RegKind::L2, 0.1, quick(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Logistic, ArgmaxInvariantToPositiveLogitScaling) {
  LinearModel m;
  m.weights = random_matrix(4, 6, 13, -1, 1);
  m.bias = Vector::LinSpaced(4, -1, 1);
  m.num_classes = 4;
  const Matrix X = random_matrix(30, 6, 14, -3, 3);
  const auto base = m.predict(X);
  m.weights *= 3.7;
  m.bias *= 3.7;
  EXPECT_EQ(m.predict(X), base);
}

TEST(GridSearch, SingleAndDuplicateGrids) {
  const LabeledSet train = clouds(30, 2, 3.0, 15, 4);
  const LabeledSet val = clouds(15, 2, 3.0, 16, 4);
  const double one[] = {1e-3};
  EXPECT_EQ(grid_search_lambda(train, val, one, RegKind::L2, quick(10)).best_value, 1e-3);
  const double dup[] = {1e-2, 1e-3, 1e-2, 1e-3};
  const double dedup[] = {1e-2, 1e-3};
  const auto a = grid_search_lambda(train, val, dup, RegKind::L2, quick(10));
  const auto b = grid_search_lambda(train, val, dedup, RegKind::L2, quick(10));
  EXPECT_EQ(a.best_value, b.best_value);
  EXPECT_EQ(a.best.model.weights, b.best.model.weights);
}

TEST(GridSearch, EveryDefaultLambdaSolvesSeparableTask) {
  for (std::uint64_t seed : {17u, 18u}) {
    const LabeledSet train = clouds(40, 2, 6.0, seed, 4);
    const LabeledSet val = clouds(20, 2, 6.0, seed + 100, 4);
    const auto r = grid_search_lambda(train, val, kDefaultLambdaGrid, RegKind::L2, quick(60));
    for (const auto& p : r.points) EXPECT_GE(p.val_accuracy, 0.95) << p.value;
    EXPECT_EQ(r.best_value, 1e-1);
  }
}

TEST(Svm, SeparableForEveryDefaultC) {
  const LabeledSet data = clouds(40, 2, 8.0, 19);
  for (double c : kDefaultSvmCGrid) {
    TrainConfig cfg = quick(300);
    EXPECT_EQ(evaluate(train_linear_svm(data, nullptr, c, cfg).model, data).accuracy, 1.0) << c;
  }
}

TEST(Svm, SmallCShrinksWeights) {
  const LabeledSet data = clouds(40, 3, 3.0, 20, 3);
  const double big = train_linear_svm(data, nullptr, 1.0, quick(100)).model.weights.norm();
  const double tiny = train_linear_svm(data, nullptr, 1e-6, quick(100)).model.weights.norm();
  EXPECT_LT(tiny, 0.1 * big);
  LabeledSet single{random_matrix(4, 2, 21), {0, 0, 0, 0}};
  EXPECT_THROW(train_linear_svm(single, nullptr, 1.0, quick(2)), Error);
}

TEST(Knn, ExactMatchAndUniformLabels) {
  const LabeledSet train = clouds(10, 3, 1.0, 22, 3);
  const auto pred = knn_classify(train, train.X, 1);
  EXPECT_EQ(pred, train.y);
  LabeledSet same{random_matrix(7, 3, 23), std::vector<int>(7, 2)};
  for (int p : knn_classify(same, random_matrix(5, 3, 24), 5)) EXPECT_EQ(p, 2);
}

TEST(Knn, MatchesBruteForce) {
  const LabeledSet train = clouds(25, 4, 0.8, 25, 5);
  const Matrix q = random_matrix(40, 5, 26, -2, 4);
  for (int k : {1, 3, 5, 9, 17}) EXPECT_EQ(knn_classify(train, q, k), brute_knn(train, q, k)) << k;
}

TEST(Knn, TieGoesToCloserClass) {
  Matrix X(2, 1);
  X << 1.0, -2.0;
  LabeledSet train{X, {0, 1}};
  Matrix q(1, 1);
  q << 0.0;
  EXPECT_EQ(knn_classify(train, q, 2)[0], 0);
  train.y = {1, 0};
  EXPECT_EQ(knn_classify(train, q, 2)[0], 1);
}

TEST(Knn, KLargerThanTrainingSetRejected) {
  LabeledSet train{random_matrix(3, 2, 27), {0, 1, 0}};
  try {
    knn_classify(train, random_matrix(1, 2, 28), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Knn, GridIsOneAndPowersOfTwoPlusOne) {
  EXPECT_EQ(knn_k_grid(2000), (std::vector<int>{1, 3, 5, 9, 17, 33, 65, 129, 257, 513, 1025}));
  EXPECT_EQ(knn_k_grid(10), (std::vector<int>{1, 3, 5, 9}));
}

TEST(Pca, LineDataNeedsOneComponent) {
  Matrix X(20, 6);
  const Eigen::RowVectorXd dir = random_matrix(1, 6, 29, -1, 1);
  for (int i = 0; i < 20; ++i) X.row(i) = (i - 7.3) * dir;
  EXPECT_EQ(pca_fit(X, 0.95).rank(), 1);
}

TEST(Pca, FullThresholdKeepsFullRank) {
  EXPECT_EQ(pca_fit(random_matrix(30, 8, 30), 1.0).rank(), 8);
  EXPECT_EQ(pca_fit(random_matrix(6, 20, 31), 1.0).rank(), 5);
}

TEST(Pca, OrthonormalAndRetainsThreshold) {
  for (const auto& X : {random_matrix(40, 12, 32), random_matrix(10, 50, 33)}) {
    for (double t : kDefaultVarianceGrid) {
      const PcaBasis b = pca_fit(X, t);
      const Matrix gram = b.components.transpose() * b.components;
      EXPECT_LT((gram - Matrix::Identity(b.rank(), b.rank())).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_GE(b.retained_fraction, t - 1e-12);
    }
  }
}

TEST(Pca, GramPathMatchesCovariancePath) {
  const Matrix X = random_matrix(10, 12, 34);
  const PcaBasis wide = pca_fit(X, 0.9);  // d > n: Gram path
  Matrix centered = X.rowwise() - X.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cov((centered.transpose() * centered) / 9.0);
  const Vector ev = cov.eigenvalues().reverse();
  for (int j = 0; j < wide.rank(); ++j) EXPECT_NEAR(wide.explained[j], ev[j], 1e-8);
}

TEST(Pca, ReconstructionErrorFallsWithThreshold) {
  const Matrix X = random_matrix(60, 15, 35);
  double last = std::numeric_limits<double>::infinity();
  for (double t : {0.1, 0.25, 0.5, 0.75, 0.95, 1.0}) {
    const PcaBasis b = pca_fit(X, t);
    const double err = (pca_reconstruct(b, pca_project(b, X)) - X).squaredNorm();
    EXPECT_LE(err, last + 1e-9);
    last = err;
  }
  EXPECT_LT(last, 1e-12 * X.squaredNorm());
}

TEST(Pca, ThresholdOutsideUnitIntervalRejected) {
  const Matrix X = random_matrix(5, 3, 36);
  for (double t : {0.0, -0.5, 1.01}) {
    try {
      pca_fit(X, t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
  }
}

TEST(Pca, TruncateMatchesDirectFit) {
  const Matrix X = random_matrix(25, 10, 37);
  const PcaBasis full = pca_fit(X, 0.95);
  const PcaBasis cut = pca_truncate(full, 0.5);
  const PcaBasis direct = pca_fit(X, 0.5);
  ASSERT_EQ(cut.rank(), direct.rank());
  const Matrix a = pca_project(cut, X);
  const Matrix b = pca_project(direct, X);
  EXPECT_LT((a.cwiseAbs() - b.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigenfaces, GridSearchPicksFirstBest) {
  const LabeledSet train = clouds(30, 3, 4.0, 38, 6);
  const LabeledSet val = clouds(15, 3, 4.0, 39, 6);
  const auto r = grid_search_eigenfaces(train, val, kDefaultVarianceGrid, kDefaultSvmCGrid, quick(60));
  EXPECT_EQ(r.points.size(), 12u);
  double best = -1.0;
  for (const auto& p : r.points) best = std::max(best, p.val_accuracy);
  EXPECT_EQ(r.val_accuracy, best);
  for (const auto& p : r.points) {
    if (p.val_accuracy == best) {
      EXPECT_EQ(p.variance, r.best_variance);
      EXPECT_EQ(p.C, r.best_C);
      break;
    }
  }
  EXPECT_EQ(evaluate_predictions(r.model.predict(val.X), val.y, 3).accuracy, r.val_accuracy);
}

TEST(Metrics, PerfectAndInverted) {
  const std::vector<int> truth = {0, 1, 1, 0, 1, 0, 1};
  const Metrics perfect = evaluate_predictions(truth, truth, 2);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.confusion[0][1], 0);
  EXPECT_EQ(perfect.confusion[1][0], 0);
  EXPECT_EQ(perfect.confusion[0][0] + perfect.confusion[1][1], 7);
  std::vector<int> pred = {0, 1, 0, 0, 0, 1, 1};
  std::vector<int> flipped;
  for (int p : pred) flipped.push_back(1 - p);
  EXPECT_NEAR(evaluate_predictions(flipped, truth, 2).accuracy, 1.0 - evaluate_predictions(pred, truth, 2).accuracy,
              1e-15);
}

TEST(Metrics, ShapeErrors) {
  const std::vector<int> a = {0, 1};
  const std::vector<int> b = {0};
  EXPECT_THROW(evaluate_predictions(a, b, 2), Error);
  LinearModel m;
  m.weights = Matrix::Zero(1, 3);
  m.bias = Vector::Zero(1);
  LabeledSet data{random_matrix(2, 4, 40), {0, 1}};
  try {
    evaluate(m, data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
}
