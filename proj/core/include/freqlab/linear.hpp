#ifndef FREQLAB_LINEAR_HPP
#define FREQLAB_LINEAR_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "freqlab/feature_cache.hpp"
#include "freqlab/image.hpp"
#include "freqlab/optim.hpp"

namespace freqlab {

enum class RegKind : std::uint8_t { L1, L2 };
enum class LinearKind : std::uint8_t { Logistic, Svm };

/// Feature matrix (one sample per row) with integer class labels.
struct LabeledSet {
  Matrix X;
  std::vector<int> y;

  int count() const { return static_cast<int>(X.rows()); }
  int dims() const { return static_cast<int>(X.cols()); }
};

/// Linear head. Binary logistic models carry a single logit row (positive
/// class = label 1); multinomial logistic and one-vs-rest SVM models carry
/// one row per class.
struct LinearModel {
  LinearKind kind = LinearKind::Logistic;
  Matrix weights;  // rows x D
  Vector bias;     // rows
  RegKind reg_kind = RegKind::L2;
  double reg_lambda = 0.0;
  FeatureKind feature_kind = FeatureKind::DctLogStd;
  int num_classes = 2;

  int dims() const { return static_cast<int>(weights.cols()); }

  /// Raw scores, one row per sample.
  Matrix decision(const Matrix& X) const;
  std::vector<int> predict(const Matrix& X) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct LinearTrainResult {
  LinearModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Mean cross-entropy + lambda * penalty. L2 penalty is lambda * sum(w^2)
/// and enters the gradient. L1 penalty lambda * sum(|w|) is applied as a
/// proximal soft-threshold after every Adam step, using Adam's
/// per-coordinate step size as the threshold scale so coordinates whose
/// gradient stays below lambda land on exact zeros. Early stopping monitors
/// validation accuracy (ties broken by validation loss); `val` may be null,
/// in which case the training set is monitored.
LinearTrainResult train_logistic(const LabeledSet& train, const LabeledSet* val, RegKind reg, double lambda,
                                 const TrainConfig& cfg);

/// Objective value (data term + penalty) and its gradient with respect to
/// weights and bias; the L1 term contributes only to the value.
double logistic_objective(const LinearModel& model, const LabeledSet& data);
LinearModel logistic_gradient(const LinearModel& model, const LabeledSet& data);

struct GridPoint {
  double value = 0.0;
  double val_accuracy = 0.0;
};

struct GridSearchResult {
  double best_value = 0.0;
  LinearTrainResult best;
  std::vector<GridPoint> points;
};

/// Trains one model per distinct grid value and keeps the best validation
/// accuracy; ties go to the larger value.
GridSearchResult grid_search_lambda(const LabeledSet& train, const LabeledSet& val, std::span<const double> grid,
                                    RegKind reg, const TrainConfig& cfg);

/// One-vs-rest hinge loss with l2 penalty ||w||^2 / (2 C n), n the training
/// size, optimized with the same Adam loop.
LinearTrainResult train_linear_svm(const LabeledSet& train, const LabeledSet* val, double C, const TrainConfig& cfg);

/// Grid over C; ties go to the smaller C (stronger regularization).
GridSearchResult grid_search_svm(const LabeledSet& train, const LabeledSet& val, std::span<const double> grid,
                                 const TrainConfig& cfg);

inline constexpr double kDefaultLambdaGrid[] = {1e-1, 1e-2, 1e-3, 1e-4};
inline constexpr double kDefaultSvmCGrid[] = {1e-4, 1e-3, 1e-2, 1e-1};
inline constexpr double kDefaultVarianceGrid[] = {0.25, 0.5, 0.95};

// ---------------------------------------------------------------- kNN

/// Euclidean k-nearest-neighbour majority vote. Ties between classes go to
/// the smallest summed neighbour distance, then to the smaller label.
std::vector<int> knn_classify(const LabeledSet& train, const Matrix& queries, int k);

/// Sorted neighbour lists for a batch of queries, so several k can be scored
/// from one distance computation.
class KnnNeighbors {
public:
  KnnNeighbors(const LabeledSet& train, const Matrix& queries, int max_k);
  std::vector<int> vote(int k) const;
  int num_classes() const { return num_classes_; }

private:
  std::vector<std::vector<std::pair<double, int>>> lists_;  // (distance, label)
  int num_classes_ = 0;
};

/// k in {1} U {2^kappa + 1 : kappa = 1..10}, restricted to k <= train size.
std::vector<int> knn_k_grid(int train_size);

// ---------------------------------------------------------------- PCA

struct PcaBasis {
  Matrix components;  // D x M, orthonormal columns
  Vector mean;        // D
  Vector explained;   // eigenvalues of the retained components (descending)
  double variance_threshold = 1.0;
  double retained_fraction = 0.0;
  double total_variance = 0.0;

  int dims() const { return static_cast<int>(components.rows()); }
  int rank() const { return static_cast<int>(components.cols()); }
};

/// Exact eigen-decomposition of the sample covariance. When D exceeds the
/// sample count the n x n Gram matrix is decomposed instead (same non-zero
/// spectrum). Keeps the smallest prefix whose cumulative explained variance
/// reaches `variance_threshold`.
PcaBasis pca_fit(const Matrix& X, double variance_threshold);
/// Truncates an existing basis to a smaller threshold without refitting.
PcaBasis pca_truncate(const PcaBasis& basis, double variance_threshold);
Matrix pca_project(const PcaBasis& basis, const Matrix& X);
Matrix pca_reconstruct(const PcaBasis& basis, const Matrix& reduced);

struct KnnSearchResult {
  int best_k = 1;
  double val_accuracy = 0.0;
  std::vector<GridPoint> points;  // value = k
};

/// Scores every k of knn_k_grid on the validation set; ties go to the
/// smaller k.
KnnSearchResult grid_search_knn(const LabeledSet& train, const LabeledSet& val);

/// PCA followed by a linear SVM on the projected features.
struct EigenfacesModel {
  PcaBasis basis;
  LinearModel svm;

  std::vector<int> predict(const Matrix& X) const;
};

struct EigenfacesPoint {
  double variance = 0.0;
  double C = 0.0;
  int components = 0;
  double val_accuracy = 0.0;
};

struct EigenfacesSearchResult {
  EigenfacesModel model;
  double best_variance = 0.0;
  double best_C = 0.0;
  double val_accuracy = 0.0;
  std::vector<EigenfacesPoint> points;
};

/// Joint grid over retained variance (ascending) and C (ascending); the
/// first best validation accuracy wins. PCA is fitted once at the largest
/// threshold and truncated for the smaller ones.
EigenfacesSearchResult grid_search_eigenfaces(const LabeledSet& train, const LabeledSet& val,
                                              std::span<const double> variance_grid, std::span<const double> c_grid,
                                              const TrainConfig& cfg);

// ---------------------------------------------------------------- metrics

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<long>> confusion;  // [truth][predicted]
};

Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth, int num_classes);
Metrics evaluate(const LinearModel& model, const LabeledSet& data);

int count_classes(std::span<const int> labels);

}  // namespace freqlab

#endif  // FREQLAB_LINEAR_HPP
