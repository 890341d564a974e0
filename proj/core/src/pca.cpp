#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "freqlab/error.hpp"
#include "freqlab/linear.hpp"

namespace freqlab {
namespace {

/// Smallest prefix whose cumulative share reaches the threshold, capped at
/// the numerical rank.
int components_for(const Vector& eigenvalues, double threshold, double total) {
  const int available = static_cast<int>(eigenvalues.size());
  if (available == 0) return 0;
  const double target = threshold * total * (1.0 - 1e-12);
  double cumulative = 0.0;
  for (int m = 0; m < available; ++m) {
    cumulative += eigenvalues[m];
    if (cumulative >= target) return m + 1;
  }
  return available;
}

}  // namespace

PcaBasis pca_fit(const Matrix& X, double variance_threshold) {
  require(variance_threshold > 0.0 && variance_threshold <= 1.0, ErrorKind::InvalidInput,
          "variance threshold must lie in (0, 1]");
  require(X.rows() >= 2, ErrorKind::InsufficientData, "PCA needs at least two samples");
  require(X.allFinite(), ErrorKind::InvalidInput, "PCA input contains non-finite values");
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  PcaBasis basis;
  basis.mean = X.colwise().mean().transpose();
  Eigen::MatrixXd centered = X.rowwise() - basis.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  basis.total_variance = centered.squaredNorm() / denom;

  Vector values;
  Eigen::MatrixXd vectors;
  const bool gram = d > n;
  if (gram) {
    Eigen::MatrixXd g = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
    values = solver.eigenvalues().reverse();
    vectors = solver.eigenvectors().rowwise().reverse();
  } else {
    Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    values = solver.eigenvalues().reverse();
    vectors = solver.eigenvectors().rowwise().reverse();
  }
  const double peak = values.size() > 0 ? std::max(values[0], 0.0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < values.size() && values[rank] > 1e-12 * std::max(peak, 1e-300)) ++rank;
  values.conservativeResize(rank);

  const int m = components_for(values, variance_threshold, basis.total_variance);
  basis.components.resize(d, m);
  if (gram) {
    // v = X_c^T u / ||X_c^T u||, which equals X_c^T u / sqrt(lambda (n - 1)).
    Eigen::MatrixXd v = centered.transpose() * vectors.leftCols(m);
    for (int j = 0; j < m; ++j) v.col(j).normalize();
    basis.components = v;
  } else {
    basis.components = vectors.leftCols(m);
  }
  basis.explained = values.head(m);
  basis.variance_threshold = variance_threshold;
  basis.retained_fraction = basis.total_variance > 0.0 ? basis.explained.sum() / basis.total_variance : 1.0;
  return basis;
}

PcaBasis pca_truncate(const PcaBasis& basis, double variance_threshold) {
  require(variance_threshold > 0.0 && variance_threshold <= 1.0, ErrorKind::InvalidInput,
          "variance threshold must lie in (0, 1]");
  require(variance_threshold <= basis.variance_threshold, ErrorKind::InvalidInput,
          "cannot truncate to a larger variance threshold");
  const int m = components_for(basis.explained, variance_threshold, basis.total_variance);
  PcaBasis out;
  out.components = basis.components.leftCols(m);
  out.mean = basis.mean;
  out.explained = basis.explained.head(m);
  out.variance_threshold = variance_threshold;
  out.total_variance = basis.total_variance;
  out.retained_fraction = basis.total_variance > 0.0 ? out.explained.sum() / basis.total_variance : 1.0;
  return out;
}

Matrix pca_project(const PcaBasis& basis, const Matrix& X) {
  require(X.cols() == basis.dims(), ErrorKind::ShapeError, "PCA input dimension mismatch");
  Matrix centered = X.rowwise() - basis.mean.transpose();
  return centered * basis.components;
}

Matrix pca_reconstruct(const PcaBasis& basis, const Matrix& reduced) {
  require(reduced.cols() == basis.rank(), ErrorKind::ShapeError, "reduced dimension mismatch");
  Matrix out = reduced * basis.components.transpose();
  out.rowwise() += basis.mean.transpose();
  return out;
}

std::vector<int> EigenfacesModel::predict(const Matrix& X) const { return svm.predict(pca_project(basis, X)); }

EigenfacesSearchResult grid_search_eigenfaces(const LabeledSet& train, const LabeledSet& val,
                                              std::span<const double> variance_grid, std::span<const double> c_grid,
                                              const TrainConfig& cfg) {
  require(!variance_grid.empty() && !c_grid.empty(), ErrorKind::InvalidInput, "empty eigenfaces grid");
  std::vector<double> variances(variance_grid.begin(), variance_grid.end());
  std::sort(variances.begin(), variances.end());
  variances.erase(std::unique(variances.begin(), variances.end()), variances.end());
  std::vector<double> cs(c_grid.begin(), c_grid.end());
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());

  const PcaBasis full = pca_fit(train.X, variances.back());
  EigenfacesSearchResult out;
  out.val_accuracy = -1.0;
  for (double v : variances) {
    PcaBasis basis = pca_truncate(full, v);
    const LabeledSet train_p{pca_project(basis, train.X), train.y};
    const LabeledSet val_p{pca_project(basis, val.X), val.y};
    for (double c : cs) {
      LinearTrainResult r = train_linear_svm(train_p, &val_p, c, cfg);
      const double acc = evaluate(r.model, val_p).accuracy;
      out.points.push_back({v, c, basis.rank(), acc});
      if (acc > out.val_accuracy) {
        out.val_accuracy = acc;
        out.best_variance = v;
        out.best_C = c;
        out.model = EigenfacesModel{basis, std::move(r.model)};
      }
    }
  }
  return out;
}

}  // namespace freqlab
