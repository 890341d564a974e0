#include <algorithm>
#include <cmath>

#include "freqlab/error.hpp"
#include "freqlab/linear.hpp"
#include "freqlab/parallel.hpp"

namespace freqlab {

KnnNeighbors::KnnNeighbors(const LabeledSet& train, const Matrix& queries, int max_k) {
  require(train.X.rows() == static_cast<Eigen::Index>(train.y.size()), ErrorKind::ShapeError,
          "feature rows and labels differ in length");
  require(max_k >= 1 && max_k <= train.count(), ErrorKind::InvalidInput, "k must lie in [1, training size]");
  require(queries.cols() == train.X.cols(), ErrorKind::ShapeError, "query dimension does not match training data");
  num_classes_ = count_classes(train.y);
  const Vector train_norms = train.X.rowwise().squaredNorm();
  lists_.resize(static_cast<std::size_t>(queries.rows()));

  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index blocks = (queries.rows() + kBlock - 1) / kBlock;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index n = std::min(kBlock, queries.rows() - start);
    const auto q = queries.middleRows(start, n);
    Matrix dist = -2.0 * (q * train.X.transpose());
    dist.colwise() += q.rowwise().squaredNorm();
    dist.rowwise() += train_norms.transpose();
    std::vector<std::pair<double, int>> row(static_cast<std::size_t>(train.count()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < train.count(); ++j)
        row[static_cast<std::size_t>(j)] = {std::sqrt(std::max(0.0, dist(i, j))), j};
      std::partial_sort(row.begin(), row.begin() + max_k, row.end());
      auto& out = lists_[static_cast<std::size_t>(start + i)];
      out.resize(static_cast<std::size_t>(max_k));
      for (int j = 0; j < max_k; ++j) {
        out[static_cast<std::size_t>(j)] = {row[static_cast<std::size_t>(j)].first,
                                            train.y[static_cast<std::size_t>(row[static_cast<std::size_t>(j)].second)]};
      }
    }
  });
}

std::vector<int> KnnNeighbors::vote(int k) const {
  std::vector<int> out(lists_.size());
  std::vector<int> votes(static_cast<std::size_t>(num_classes_));
  std::vector<double> dist(static_cast<std::size_t>(num_classes_));
  for (std::size_t q = 0; q < lists_.size(); ++q) {
    require(k >= 1 && static_cast<std::size_t>(k) <= lists_[q].size(), ErrorKind::InvalidInput,
            "k exceeds the prepared neighbour count");
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(dist.begin(), dist.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      const auto& [d, label] = lists_[q][static_cast<std::size_t>(j)];
      ++votes[static_cast<std::size_t>(label)];
      dist[static_cast<std::size_t>(label)] += d;
    }
    int best = 0;
    for (int c = 1; c < num_classes_; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      const auto bs = static_cast<std::size_t>(best);
      if (votes[cs] > votes[bs] || (votes[cs] == votes[bs] && votes[cs] > 0 && dist[cs] < dist[bs])) best = c;
    }
    out[q] = best;
  }
  return out;
}

std::vector<int> knn_classify(const LabeledSet& train, const Matrix& queries, int k) {
  require(k >= 1 && k <= train.count(), ErrorKind::InvalidInput, "k must lie in [1, training size]");
  return KnnNeighbors(train, queries, k).vote(k);
}

std::vector<int> knn_k_grid(int train_size) {
  std::vector<int> ks;
  if (train_size >= 1) ks.push_back(1);
  for (int kappa = 1; kappa <= 10; ++kappa) {
    const int k = (1 << kappa) + 1;
    if (k <= train_size) ks.push_back(k);
  }
  return ks;
}


KnnSearchResult grid_search_knn(const LabeledSet& train, const LabeledSet& val) {
  const auto ks = knn_k_grid(train.count());
  require(!ks.empty(), ErrorKind::InsufficientData, "kNN needs training samples");
  KnnNeighbors neighbors(train, val.X, ks.back());
  KnnSearchResult out;
  out.val_accuracy = -1.0;
  const int classes = std::max(count_classes(train.y), count_classes(val.y));
  for (int k : ks) {
    const double acc = evaluate_predictions(neighbors.vote(k), val.y, classes).accuracy;
    out.points.push_back({static_cast<double>(k), acc});
    if (acc > out.val_accuracy) {
      out.val_accuracy = acc;
      out.best_k = k;
    }
  }
  return out;
}

}  // namespace freqlab
