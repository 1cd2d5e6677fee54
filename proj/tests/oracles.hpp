#pragma once

// Slow, obviously-correct reference implementations used only by tests.

#include "leakdrift/leakdrift.hpp"

#include <random>

namespace oracle {

using leakdrift::Matrix;
using leakdrift::Vector;

/// Single-source shortest paths by repeated edge relaxation.
inline std::vector<double> bellman_ford(const leakdrift::WdnGraph& g, std::size_t src) {
  std::vector<double> d(g.node_count(), std::numeric_limits<double>::infinity());
  d[src] = 0.0;
  for (std::size_t round = 0; round + 1 < g.node_count(); ++round) {
    bool changed = false;
    for (const auto& e : g.edges()) {
      if (d[e.a] + e.length < d[e.b]) d[e.b] = d[e.a] + e.length, changed = true;
      if (d[e.b] + e.length < d[e.a]) d[e.a] = d[e.b] + e.length, changed = true;
    }
    if (!changed) break;
  }
  return d;
}

/// AUC by counting every (negative, positive) pair; ties count one half.
inline double pairwise_auc(const std::vector<double>& neg, const std::vector<double>& pos) {
  double wins = 0.0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / (static_cast<double>(neg.size()) * static_cast<double>(pos.size()));
}

/// KS statistic by evaluating both empirical CDFs at every pooled point.
inline double ks_grid(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> grid = a;
  grid.insert(grid.end(), b.begin(), b.end());
  double best = 0.0;
  for (double x : grid) {
    double fa = 0, fb = 0;
    for (double v : a) fa += v <= x;
    for (double v : b) fb += v <= x;
    best = std::max(best, std::abs(fa / a.size() - fb / b.size()));
  }
  return best;
}

inline double rbf(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double h) {
  return std::exp(-(x - y).squaredNorm() / (2 * h * h));
}

/// Median-heuristic bandwidth from an explicit list of pairwise distances.
inline double median_bandwidth(const Matrix& X) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) d.push_back((X.row(i) - X.row(j)).norm());
  std::sort(d.begin(), d.end());
  if (d.empty()) return 1.0;
  const auto n = d.size();
  const double med = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return med > 0 ? med : 1.0;
}

/// Unbiased MMD^2 as three explicit double sums.
inline double mmd2(const Matrix& a, const Matrix& b) {
  Matrix pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  const double h = median_bandwidth(pooled);
  const auto m = a.rows(), n = b.rows();
  double xx = 0, yy = 0, xy = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) xx += rbf(a.row(i), a.row(j), h);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) yy += rbf(b.row(i), b.row(j), h);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) xy += rbf(a.row(i), b.row(j), h);
  return xx / (m * (m - 1.0)) + yy / (n * (n - 1.0)) - 2 * xy / (double(m) * n);
}

/// Biased HSIC as tr(K H L H) / m^2 with an explicit centering matrix.
inline double hsic(const Matrix& X, const std::vector<double>& t) {
  const auto m = X.rows();
  const double lo = *std::min_element(t.begin(), t.end());
  const double hi = *std::max_element(t.begin(), t.end());
  Matrix T(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) T(i, 0) = hi > lo ? (t[static_cast<std::size_t>(i)] - lo) / (hi - lo) : 0.0;
  const double hx = median_bandwidth(X), ht = median_bandwidth(T);
  Eigen::MatrixXd K(m, m), L(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      K(i, j) = rbf(X.row(i), X.row(j), hx);
      L(i, j) = rbf(T.row(i), T.row(j), ht);
    }
  const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, 1.0 / m);
  return (K * H * L * H).trace() / (double(m) * m);
}

/// Exhaustive-sort kNN regression with index tie-break.
inline double knn(const Matrix& X, const Vector& y, const Eigen::RowVectorXd& q, std::size_t k) {
  std::vector<std::pair<double, Eigen::Index>> d;
  for (Eigen::Index i = 0; i < X.rows(); ++i) d.push_back({(X.row(i) - q).squaredNorm(), i});
  std::sort(d.begin(), d.end());
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += y(d[i].second);
  return s / k;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double shift = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng) + shift;
  return m;
}

/// Random connected graph: a random spanning tree plus extra chords.
inline leakdrift::WdnGraph random_graph(std::mt19937_64& rng, std::size_t nodes, std::size_t extra) {
  leakdrift::WdnGraph g;
  for (std::size_t i = 0; i < nodes; ++i) g.add_node("n" + std::to_string(i));
  std::uniform_real_distribution<double> len(1.0, 100.0);
  std::size_t e = 0;
  for (std::size_t i = 1; i < nodes; ++i) {
    const auto parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    g.add_edge("e" + std::to_string(e++), parent, i, len(rng));
  }
  std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
  for (std::size_t k = 0; k < extra; ++k) g.add_edge("e" + std::to_string(e++), pick(rng), pick(rng), len(rng));
  return g;
}

}  // namespace oracle
