#include "freqlab/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "freqlab/error.hpp"

namespace freqlab {

int count_classes(std::span<const int> labels) {
  int top = -1;
  for (int y : labels) {
    require(y >= 0, ErrorKind::InvalidInput, "labels must be non-negative");
    top = std::max(top, y);
  }
  return top + 1;
}

Matrix LinearModel::decision(const Matrix& X) const {
  require(X.cols() == weights.cols(), ErrorKind::ShapeError, "feature dimension does not match the model");
  Matrix scores = X * weights.transpose();
  scores.rowwise() += bias.transpose();
  return scores;
}

std::vector<int> LinearModel::predict(const Matrix& X) const {
  Matrix scores = decision(X);
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (scores.cols() == 1) {
      out[static_cast<std::size_t>(i)] = scores(i, 0) > 0.0 ? 1 : 0;
    } else {
      Eigen::Index arg = 0;
      scores.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
  }
  return out;
}

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Data term (without penalty) and d/d(scores), averaged over rows.
double logistic_data_term(const Matrix& scores, std::span<const int> y, Matrix* grad_scores) {
  const Eigen::Index n = scores.rows();
  double loss = 0.0;
  if (grad_scores) grad_scores->resize(n, scores.cols());
  if (scores.cols() == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = scores(i, 0);
      const double t = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
      loss += softplus(z) - t * z;
      if (grad_scores) (*grad_scores)(i, 0) = (sigmoid(z) - t) / static_cast<double>(n);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double peak = scores.row(i).maxCoeff();
      const double log_denom = std::log((scores.row(i).array() - peak).exp().sum()) + peak;
      const int label = y[static_cast<std::size_t>(i)];
      loss += log_denom - scores(i, label);
      if (grad_scores) {
        for (Eigen::Index k = 0; k < scores.cols(); ++k)
          (*grad_scores)(i, k) = (std::exp(scores(i, k) - log_denom) - (k == label ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
  }
  return loss / static_cast<double>(n);
}

double hinge_data_term(const Matrix& scores, std::span<const int> y, Matrix* grad_scores) {
  const Eigen::Index n = scores.rows();
  double loss = 0.0;
  if (grad_scores) grad_scores->setZero(n, scores.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < scores.cols(); ++k) {
      const double t = y[static_cast<std::size_t>(i)] == k ? 1.0 : -1.0;
      const double margin = 1.0 - t * scores(i, k);
      if (margin > 0.0) {
        loss += margin;
        if (grad_scores) (*grad_scores)(i, k) = -t / static_cast<double>(n);
      }
    }
  }
  return loss / static_cast<double>(n);
}

struct Objective {
  LinearKind kind;
  RegKind reg;
  /// Multiplier of sum(w^2) (L2) or sum(|w|) (L1).
  double strength;

  double data_term(const Matrix& scores, std::span<const int> y, Matrix* grad) const {
    return kind == LinearKind::Logistic ? logistic_data_term(scores, y, grad) : hinge_data_term(scores, y, grad);
  }
  double penalty(const Matrix& w) const {
    return reg == RegKind::L2 ? strength * w.squaredNorm() : strength * w.cwiseAbs().sum();
  }
};

Matrix scores_of(const Matrix& X, const Matrix& W, const Vector& b) {
  Matrix s = X * W.transpose();
  s.rowwise() += b.transpose();
  return s;
}

void check_training_set(const LabeledSet& data) {
  require(data.X.rows() == static_cast<Eigen::Index>(data.y.size()), ErrorKind::ShapeError,
          "feature rows and labels differ in length");
  require(data.count() >= 2, ErrorKind::InsufficientData, "training needs at least two samples");
  require(data.X.allFinite(), ErrorKind::InvalidInput, "features contain non-finite values");
  std::set<int> distinct(data.y.begin(), data.y.end());
  require(distinct.size() >= 2, ErrorKind::DegenerateLabels, "training labels contain a single class");
}

double accuracy_of(const LinearModel& model, const LabeledSet& data) {
  auto pred = model.predict(data.X);
  long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.y[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

LinearTrainResult run_training(const LabeledSet& train, const LabeledSet* val, const Objective& objective,
                               LinearModel model, const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index rows = model.weights.rows();
  const Eigen::Index dims = model.weights.cols();
  const std::size_t wcount = static_cast<std::size_t>(rows * dims);
  std::vector<double> params(wcount + static_cast<std::size_t>(rows), 0.0);
  std::vector<double> grads(params.size(), 0.0);
  Adam adam(params.size(), cfg);
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<int> order(static_cast<std::size_t>(train.count()));
  std::iota(order.begin(), order.end(), 0);

  const LabeledSet& monitor = val ? *val : train;
  LinearTrainResult result{model, {}, 0};
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  auto sync_model = [&] {
    model.weights = Eigen::Map<const Matrix>(params.data(), rows, dims);
    model.bias = Eigen::Map<const Vector>(params.data() + wcount, rows);
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < train.count(); start += cfg.batch_size) {
      const int n = std::min(cfg.batch_size, train.count() - start);
      std::vector<int> idx(order.begin() + start, order.begin() + start + n);
      Matrix Xb = train.X(idx, Eigen::all);
      std::vector<int> yb(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) yb[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(idx[i])];

      Eigen::Map<Matrix> W(params.data(), rows, dims);
      Eigen::Map<Vector> b(params.data() + wcount, rows);
      Matrix grad_scores;
      const double data_loss = objective.data_term(scores_of(Xb, W, b), yb, &grad_scores);
      loss_sum += data_loss + objective.penalty(W);
      ++batches;

      Eigen::Map<Matrix> gW(grads.data(), rows, dims);
      Eigen::Map<Vector> gb(grads.data() + wcount, rows);
      gW.noalias() = grad_scores.transpose() * Xb;
      gb = grad_scores.colwise().sum().transpose();
      if (objective.reg == RegKind::L2 && objective.strength > 0.0) gW += 2.0 * objective.strength * W;

      adam.step(params, grads);
      if (objective.reg == RegKind::L1 && objective.strength > 0.0) {
        for (std::size_t i = 0; i < wcount; ++i) {
          const double threshold = objective.strength * adam.effective_rate(i);
          const double w = params[i];
          params[i] = std::copysign(std::max(std::abs(w) - threshold, 0.0), w);
        }
      }
    }
    sync_model();
    Matrix scores = model.decision(monitor.X);
    const double val_loss = objective.data_term(scores, monitor.y, nullptr);
    const double val_acc = accuracy_of(model, monitor);
    result.history.push_back({epoch, loss_sum / std::max(1, batches), val_loss, val_acc});
    if (val_acc > best_acc || (val_acc == best_acc && val_loss < best_loss)) {
      best_acc = val_acc;
      best_loss = val_loss;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      break;
    }
  }
  if (result.best_epoch == 0) result.model = model;
  return result;
}

LinearModel blank_model(LinearKind kind, int classes, int dims, RegKind reg, double lambda) {
  LinearModel m;
  m.kind = kind;
  m.num_classes = classes;
  const int rows = (kind == LinearKind::Logistic && classes == 2) ? 1 : classes;
  m.weights = Matrix::Zero(rows, dims);
  m.bias = Vector::Zero(rows);
  m.reg_kind = reg;
  m.reg_lambda = lambda;
  return m;
}

std::vector<double> distinct_values(std::span<const double> grid) {
  std::vector<double> values(grid.begin(), grid.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

LinearTrainResult train_logistic(const LabeledSet& train, const LabeledSet* val, RegKind reg, double lambda,
                                 const TrainConfig& cfg) {
  check_training_set(train);
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidInput, "lambda must be finite and non-negative");
  if (val) require(val->dims() == train.dims(), ErrorKind::ShapeError, "validation dimension mismatch");
  const int classes = count_classes(train.y);
  LinearModel model = blank_model(LinearKind::Logistic, classes, train.dims(), reg, lambda);
  return run_training(train, val, Objective{LinearKind::Logistic, reg, lambda}, std::move(model), cfg);
}

double logistic_objective(const LinearModel& model, const LabeledSet& data) {
  Objective obj{LinearKind::Logistic, model.reg_kind, model.reg_lambda};
  return obj.data_term(model.decision(data.X), data.y, nullptr) + obj.penalty(model.weights);
}

LinearModel logistic_gradient(const LinearModel& model, const LabeledSet& data) {
  Objective obj{LinearKind::Logistic, model.reg_kind, model.reg_lambda};
  Matrix grad_scores;
  obj.data_term(model.decision(data.X), data.y, &grad_scores);
  LinearModel g = model;
  g.weights = grad_scores.transpose() * data.X;
  if (model.reg_kind == RegKind::L2) g.weights += 2.0 * model.reg_lambda * model.weights;
  g.bias = grad_scores.colwise().sum().transpose();
  return g;
}

GridSearchResult grid_search_lambda(const LabeledSet& train, const LabeledSet& val, std::span<const double> grid,
                                    RegKind reg, const TrainConfig& cfg) {
  require(!grid.empty(), ErrorKind::InvalidInput, "empty lambda grid");
  auto values = distinct_values(grid);
  GridSearchResult out;
  double best = -1.0;
  // Descending, so a later equal score never displaces a larger lambda.
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    LinearTrainResult r = train_logistic(train, &val, reg, *it, cfg);
    const double acc = evaluate(r.model, val).accuracy;
    out.points.push_back({*it, acc});
    if (acc > best) {
      best = acc;
      out.best_value = *it;
      out.best = std::move(r);
    }
  }
  return out;
}

LinearTrainResult train_linear_svm(const LabeledSet& train, const LabeledSet* val, double C, const TrainConfig& cfg) {
  check_training_set(train);
  require(C > 0.0 && std::isfinite(C), ErrorKind::InvalidInput, "C must be positive");
  if (val) require(val->dims() == train.dims(), ErrorKind::ShapeError, "validation dimension mismatch");
  const int classes = count_classes(train.y);
  const double strength = 1.0 / (2.0 * C * train.count());
  LinearModel model = blank_model(LinearKind::Svm, classes, train.dims(), RegKind::L2, strength);
  return run_training(train, val, Objective{LinearKind::Svm, RegKind::L2, strength}, std::move(model), cfg);
}

GridSearchResult grid_search_svm(const LabeledSet& train, const LabeledSet& val, std::span<const double> grid,
                                 const TrainConfig& cfg) {
  require(!grid.empty(), ErrorKind::InvalidInput, "empty C grid");
  auto values = distinct_values(grid);
  GridSearchResult out;
  double best = -1.0;
  for (double c : values) {
    LinearTrainResult r = train_linear_svm(train, &val, c, cfg);
    const double acc = evaluate(r.model, val).accuracy;
    out.points.push_back({c, acc});
    if (acc > best) {
      best = acc;
      out.best_value = c;
      out.best = std::move(r);
    }
  }
  return out;
}

Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  require(predicted.size() == truth.size(), ErrorKind::ShapeError, "prediction and label counts differ");
  require(!truth.empty(), ErrorKind::InsufficientData, "no samples to evaluate");
  Metrics m;
  m.confusion.assign(static_cast<std::size_t>(num_classes), std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < num_classes && predicted[i] >= 0 && predicted[i] < num_classes,
            ErrorKind::ShapeError, "label outside the class range");
    ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    correct += predicted[i] == truth[i];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.per_class_accuracy.resize(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const auto& row = m.confusion[static_cast<std::size_t>(c)];
    const long total = std::accumulate(row.begin(), row.end(), 0L);
    m.per_class_accuracy[static_cast<std::size_t>(c)] =
        total > 0 ? static_cast<double>(row[static_cast<std::size_t>(c)]) / static_cast<double>(total) : 0.0;
  }
  return m;
}

Metrics evaluate(const LinearModel& model, const LabeledSet& data) {
  require(data.X.cols() == model.weights.cols(), ErrorKind::ShapeError, "feature dimension does not match the model");
  auto pred = model.predict(data.X);
  return evaluate_predictions(pred, data.y, std::max(model.num_classes, count_classes(data.y)));
}

}  // namespace freqlab
