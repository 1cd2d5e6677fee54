#pragma once

// Distribution-based drift detectors over two windows: feature-wise KS, the
// kernel two-sample (MMD) test, the D3 virtual classifier, the HSIC
// data-vs-time independence test (DAWIDD), and the sliding MMD magnitude
// curve with its shape post-processing.

#include "leakdrift/core.hpp"
#include "leakdrift/modelloss.hpp"

#include <algorithm>
#include <functional>
#include <numbers>
#include <random>

namespace leakdrift {

struct TwoSampleResult {
  double statistic = 0.0;
  std::optional<double> p_value;
  std::vector<std::pair<double, double>> per_feature;  // (statistic, p) per feature
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw SizeError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic two-sided Kolmogorov tail probability.
inline double ks_p_value(double d, std::size_t n_a, std::size_t n_b) {
  if (n_a == 0 || n_b == 0) throw SizeError("ks_p_value: sample sizes must be positive");
  if (!(d >= 0.0 && d <= 1.0)) throw ValueError("ks_p_value: D must lie in [0, 1]");
  const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
  const double lambda = d * std::sqrt(na * nb / (na + nb));
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  double q = 0.0;
  if (lambda < 1.18) {
    // Jacobi theta form; the alternating series converges too slowly here
    double cdf = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi * pi / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-16 * cdf) break;
    }
    q = 1.0 - std::sqrt(2.0 * pi) / lambda * cdf;
  } else {
    for (int k = 1; k < 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      q += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
  }
  return std::clamp(q, 0.0, 1.0);
}

/// Per-sensor KS with Bonferroni-combined p and max-D combined statistic.
inline TwoSampleResult ks_feature_wise(const Window& a, const Window& b) {
  if (a.width() != b.width()) throw ShapeError("ks_feature_wise: window widths differ");
  TwoSampleResult out;
  double min_p = 1.0;
  for (std::size_t j = 0; j < a.width(); ++j) {
    const double d = ks_statistic(a.column(j), b.column(j));
    const double p = ks_p_value(d, a.size(), b.size());
    out.per_feature.emplace_back(d, p);
    out.statistic = std::max(out.statistic, d);
    min_p = std::min(min_p, p);
  }
  out.p_value = std::min(1.0, static_cast<double>(a.width()) * min_p);
  return out;
}

/// Largest per-column KS statistic between two row samples.
inline double ks_max_statistic(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("ks_max_statistic: widths differ");
  double d = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    std::vector<double> x(a.col(j).begin(), a.col(j).end()), y(b.col(j).begin(), b.col(j).end());
    d = std::max(d, ks_statistic(std::move(x), std::move(y)));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Kernels

/// RBF kernel k(x, y) = exp(-||x - y||^2 / (2 h^2)). A bandwidth <= 0 selects
/// the median heuristic on the pooled sample.
struct KernelSpec {
  double bandwidth = 0.0;
  bool median_heuristic() const { return !(bandwidth > 0.0); }
};

inline Matrix squared_distances(const Matrix& X) {
  const Vector norms = X.rowwise().squaredNorm();
  Matrix d = -2.0 * X * X.transpose();
  d.colwise() += norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

/// Median pairwise Euclidean distance over distinct pairs; 1.0 if that is 0.
inline double median_distance(const Matrix& sq_dist) {
  const auto n = sq_dist.rows();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) v.push_back(sq_dist(i, j));
  if (v.empty()) return 1.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double med = std::sqrt(*mid);
  if (v.size() % 2 == 0) med = 0.5 * (med + std::sqrt(*std::max_element(v.begin(), mid)));
  return med > 0.0 ? med : 1.0;
}

inline Matrix rbf_gram(const Matrix& sq_dist, double bandwidth) {
  return (-sq_dist / (2.0 * bandwidth * bandwidth)).array().exp();
}

inline Matrix stack_rows(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("sample widths differ");
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

/// Every `stride`-th row, starting at row 0.
inline Matrix subsample_rows(const Matrix& X, std::size_t stride) {
  if (stride <= 1) return X;
  const auto rows = (X.rows() + static_cast<Eigen::Index>(stride) - 1) / static_cast<Eigen::Index>(stride);
  Matrix out(rows, X.cols());
  for (Eigen::Index i = 0; i < rows; ++i) out.row(i) = X.row(i * static_cast<Eigen::Index>(stride));
  return out;
}

namespace detail {

/// Unbiased MMD^2 on a pooled Gram matrix where `in_a[i]` marks membership.
inline double mmd2_from_gram(const Matrix& K, const std::vector<std::size_t>& a_idx,
                             const std::vector<std::size_t>& b_idx) {
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a_idx.size(); ++i) {
    const auto ri = static_cast<Eigen::Index>(a_idx[i]);
    for (std::size_t j = 0; j < a_idx.size(); ++j)
      if (i != j) saa += K(ri, static_cast<Eigen::Index>(a_idx[j]));
    for (auto bj : b_idx) sab += K(ri, static_cast<Eigen::Index>(bj));
  }
  for (std::size_t i = 0; i < b_idx.size(); ++i) {
    const auto ri = static_cast<Eigen::Index>(b_idx[i]);
    for (std::size_t j = 0; j < b_idx.size(); ++j)
      if (i != j) sbb += K(ri, static_cast<Eigen::Index>(b_idx[j]));
  }
  const double m = static_cast<double>(a_idx.size()), n = static_cast<double>(b_idx.size());
  return saa / (m * (m - 1)) + sbb / (n * (n - 1)) - 2.0 * sab / (m * n);
}

inline std::vector<std::size_t> iota_vec(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MMD

inline double mmd2_unbiased(const Matrix& a, const Matrix& b, const KernelSpec& kernel = {}) {
  if (a.rows() < 2 || b.rows() < 2) throw SizeError("mmd2_unbiased needs at least two rows per sample");
  const Matrix pooled = stack_rows(a, b);
  const Matrix sq = squared_distances(pooled);
  const double h = kernel.median_heuristic() ? median_distance(sq) : kernel.bandwidth;
  const Matrix K = rbf_gram(sq, h);
  const auto m = static_cast<std::size_t>(a.rows());
  return detail::mmd2_from_gram(K, detail::iota_vec(0, m), detail::iota_vec(m, static_cast<std::size_t>(pooled.rows())));
}

inline double mmd2_unbiased(const Window& a, const Window& b, const KernelSpec& kernel = {}) {
  return mmd2_unbiased(a.to_matrix(), b.to_matrix(), kernel);
}

using StatFn = std::function<double(const Matrix&, const Matrix&)>;

/// Generic two-sample permutation test: pooled rows are reshuffled into
/// groups of the original sizes, and
///   p = (1 + #{permuted >= observed}) / (1 + n_perm).
inline double permutation_test(const StatFn& stat, const Matrix& a, const Matrix& b, std::size_t n_perm,
                               std::uint64_t seed) {
  if (n_perm < 1) throw ValueError("permutation_test needs n_perm >= 1");
  const double observed = stat(a, b);
  const Matrix pooled = stack_rows(a, b);
  std::vector<std::size_t> idx = detail::iota_vec(0, static_cast<std::size_t>(pooled.rows()));
  std::mt19937_64 rng(seed);
  std::size_t exceed = 0;
  Matrix pa(a.rows(), a.cols()), pb(b.rows(), b.cols());
  for (std::size_t r = 0; r < n_perm; ++r) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Eigen::Index i = 0; i < a.rows(); ++i) pa.row(i) = pooled.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      pb.row(i) = pooled.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a.rows() + i)]));
    if (stat(pa, pb) >= observed) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(1 + n_perm);
}

/// Kernel two-sample test. The Gram matrix of the pooled sample (and hence the
/// median-heuristic bandwidth) is invariant under relabeling, so it is built
/// once and permutations only reindex it. Gives the same p-value as
/// permutation_test(mmd2_unbiased, ...) for the same seed.
inline TwoSampleResult mmd_test(const Matrix& a, const Matrix& b, std::size_t n_perm, std::uint64_t seed,
                                const KernelSpec& kernel = {}) {
  if (a.rows() < 2 || b.rows() < 2) throw SizeError("mmd_test needs at least two rows per sample");
  if (n_perm < 1) throw ValueError("mmd_test needs n_perm >= 1");
  const Matrix pooled = stack_rows(a, b);
  const Matrix sq = squared_distances(pooled);
  const double h = kernel.median_heuristic() ? median_distance(sq) : kernel.bandwidth;
  const Matrix K = rbf_gram(sq, h);
  const auto m = static_cast<std::size_t>(a.rows());
  const auto total = static_cast<std::size_t>(pooled.rows());
  const double observed = detail::mmd2_from_gram(K, detail::iota_vec(0, m), detail::iota_vec(m, total));

  std::vector<std::size_t> idx = detail::iota_vec(0, total);
  std::mt19937_64 rng(seed);
  std::size_t exceed = 0;
  std::vector<std::size_t> ia(m), ib(total - m);
  for (std::size_t r = 0; r < n_perm; ++r) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::copy(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), ia.begin());
    std::copy(idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), ib.begin());
    if (detail::mmd2_from_gram(K, ia, ib) >= observed) ++exceed;
  }
  return {observed, static_cast<double>(1 + exceed) / static_cast<double>(1 + n_perm), {}};
}

// ---------------------------------------------------------------------------
// HSIC / DAWIDD

namespace detail {

inline Matrix double_center(const Matrix& K) {
  const Eigen::RowVectorXd col_mean = K.colwise().mean();
  const Vector row_mean = K.rowwise().mean();
  const double grand = K.mean();
  Matrix C = K;
  C.rowwise() -= col_mean;
  C.colwise() -= row_mean;
  C.array() += grand;
  return C;
}

inline Matrix time_gram(const std::vector<double>& t) {
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const double span = *hi - *lo;
  Matrix T(static_cast<Eigen::Index>(t.size()), 1);
  for (std::size_t i = 0; i < t.size(); ++i)
    T(static_cast<Eigen::Index>(i), 0) = span > 0 ? (t[i] - *lo) / span : 0.0;
  const Matrix sq = squared_distances(T);
  return rbf_gram(sq, median_distance(sq));
}

inline double hsic_from(const Matrix& Kc, const Matrix& L, const std::vector<std::size_t>& perm) {
  const auto m = static_cast<double>(Kc.rows());
  double s = 0.0;
  for (Eigen::Index i = 0; i < Kc.rows(); ++i) {
    const auto pi = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < Kc.cols(); ++j) s += Kc(i, j) * L(pi, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
  }
  return s / (m * m);
}

}  // namespace detail

/// Biased HSIC estimate (1/m^2) tr(K H L H) between data rows and their time
/// stamps; RBF kernels with median-heuristic bandwidths, time rescaled to [0, 1].
inline double hsic(const Matrix& X, const std::vector<double>& t) {
  if (X.rows() < 4) throw SizeError("hsic needs at least four rows");
  if (static_cast<std::size_t>(X.rows()) != t.size()) throw ShapeError("hsic: one time stamp per row required");
  const Matrix sq = squared_distances(X);
  const Matrix Kc = detail::double_center(rbf_gram(sq, median_distance(sq)));
  return detail::hsic_from(Kc, detail::time_gram(t), detail::iota_vec(0, t.size()));
}

/// HSIC independence test with p-value from permuting the time stamps.
inline TwoSampleResult hsic_test(const Matrix& X, const std::vector<double>& t, std::size_t n_perm,
                                 std::uint64_t seed) {
  if (X.rows() < 4) throw SizeError("hsic needs at least four rows");
  if (static_cast<std::size_t>(X.rows()) != t.size()) throw ShapeError("hsic: one time stamp per row required");
  if (n_perm < 1) throw ValueError("hsic_test needs n_perm >= 1");
  const Matrix sq = squared_distances(X);
  const Matrix Kc = detail::double_center(rbf_gram(sq, median_distance(sq)));
  const Matrix L = detail::time_gram(t);
  std::vector<std::size_t> perm = detail::iota_vec(0, t.size());
  const double observed = detail::hsic_from(Kc, L, perm);
  std::mt19937_64 rng(seed);
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < n_perm; ++r) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (detail::hsic_from(Kc, L, perm) >= observed) ++exceed;
  }
  return {observed, static_cast<double>(1 + exceed) / static_cast<double>(1 + n_perm), {}};
}

/// DAWIDD over a window pair: pooled rows in time order against their index.
inline TwoSampleResult dawidd(const Matrix& a, const Matrix& b, std::size_t n_perm, std::uint64_t seed) {
  const Matrix pooled = stack_rows(a, b);
  std::vector<double> t(static_cast<std::size_t>(pooled.rows()));
  std::iota(t.begin(), t.end(), 0.0);
  return hsic_test(pooled, t, n_perm, seed);
}

// ---------------------------------------------------------------------------
// D3 virtual classifier

enum class D3Classifier { linear, knn };

struct D3Options {
  D3Classifier classifier = D3Classifier::linear;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double threshold = 0.7;
  double l2 = 1e-2;     // logistic penalty on standardized weights
  std::size_t k = 10;   // neighbors for the knn scorer
  std::size_t max_newton = 50;
};

struct D3Result {
  TwoSampleResult result;  // statistic = cross-validated AUC
  bool drift = false;
};

namespace detail {

/// L2-regularized logistic regression by Newton iterations on standardized
/// features. Returns decision values for `query`.
inline Vector logistic_scores(const Matrix& X, const Vector& y, const Matrix& query, double l2, std::size_t max_newton) {
  const auto scaler = Standardizer::fit(X);
  const Matrix Z = scaler.apply(X);
  const Matrix Q = scaler.apply(query);
  const auto p = Z.cols();
  const auto m = static_cast<double>(Z.rows());
  Vector w = Vector::Zero(p);
  double b = 0.0;
  for (std::size_t it = 0; it < max_newton; ++it) {
    const Vector eta = (Z * w).array() + b;
    const Vector prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Vector wt = prob.array() * (1.0 - prob.array());
    // gradient and Hessian of mean log-loss + (l2/2)||w||^2, intercept unpenalized
    Vector g(p + 1);
    g.head(p) = Z.transpose() * (prob - y) / m + l2 * w;
    g(p) = (prob - y).sum() / m;
    Matrix H = Matrix::Zero(p + 1, p + 1);
    const Matrix Zw = Z.array().colwise() * wt.array().sqrt();
    H.topLeftCorner(p, p) = Zw.transpose() * Zw / m;
    H.topLeftCorner(p, p).diagonal().array() += l2;
    const Vector zw = Z.transpose() * wt / m;
    H.block(0, p, p, 1) = zw;
    H.block(p, 0, 1, p) = zw.transpose();
    H(p, p) = wt.sum() / m + 1e-12;
    const Vector step = H.ldlt().solve(g);
    w -= step.head(p);
    b -= step(p);
    if (step.lpNorm<Eigen::Infinity>() < 1e-9) break;
  }
  return (Q * w).array() + b;
}

inline Vector knn_fraction_scores(const Matrix& X, const Vector& y, const Matrix& query, std::size_t k) {
  const auto scaler = Standardizer::fit(X);
  const Matrix Z = scaler.apply(X);
  const Matrix Q = scaler.apply(query);
  k = std::min<std::size_t>(k, static_cast<std::size_t>(Z.rows()));
  const Matrix cross = Q * Z.transpose();
  const Vector zn = Z.rowwise().squaredNorm();
  const Vector qn = Q.rowwise().squaredNorm();
  const auto n = static_cast<std::size_t>(Z.rows());
  std::vector<std::pair<double, std::size_t>> d(n);
  Vector out(Q.rows());
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      d[i] = {qn(r) - 2.0 * cross(r, ii) + zn(ii), i};
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double pos = 0.0;
    for (std::size_t i = 0; i < k; ++i) pos += y(static_cast<Eigen::Index>(d[i].second));
    out(r) = pos / static_cast<double>(k);
  }
  return out;
}

}  // namespace detail

/// Cross-validated separability of window A (label 0) from window B (label 1).
inline D3Result d3_score(const Matrix& a, const Matrix& b, const D3Options& opt = {}) {
  if (opt.folds < 2) throw ValueError("d3 needs at least two folds");
  if (static_cast<std::size_t>(a.rows()) < opt.folds || static_cast<std::size_t>(b.rows()) < opt.folds)
    throw SizeError("d3: window smaller than the fold count");
  const Matrix X = stack_rows(a, b);
  const auto n = static_cast<std::size_t>(X.rows());
  const auto na = static_cast<std::size_t>(a.rows());
  Vector y(X.rows());
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = i < na ? 0.0 : 1.0;

  // stratified folds; each window is shuffled from the same seed so a row's
  // fold depends only on its position, which keeps swapped windows symmetric
  std::vector<std::size_t> fold(n);
  for (auto [lo, hi] : {std::pair{std::size_t{0}, na}, std::pair{na, n}}) {
    std::mt19937_64 rng(opt.seed);
    auto idx = detail::iota_vec(lo, hi);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = i % opt.folds;
  }

  std::vector<LabeledScore> scores(n);
  for (std::size_t f = 0; f < opt.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Matrix Xtr = X(train, Eigen::all);
    const Vector ytr = y(train);
    const Matrix Xte = X(test, Eigen::all);
    const Vector s = opt.classifier == D3Classifier::linear
                         ? detail::logistic_scores(Xtr, ytr, Xte, opt.l2, opt.max_newton)
                         : detail::knn_fraction_scores(Xtr, ytr, Xte, opt.k);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto row = static_cast<std::size_t>(test[i]);
      scores[row] = {row < na ? 0 : 1, s(static_cast<Eigen::Index>(i))};
    }
  }
  D3Result out;
  out.result.statistic = roc_auc(scores);
  out.drift = out.result.statistic > opt.threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Shape analysis

struct MagnitudeCurve {
  std::vector<std::size_t> t;  // split index of each evaluation
  std::vector<double> m;       // MMD^2, clipped at 0 unless asked otherwise
};

/// m(t) = max(0, MMD^2([t - w, t), [t, t + w))) for t = w, w + step, ...
/// `subsample` keeps every k-th row inside each window. With `clip` false the
/// raw unbiased estimate is kept, negative values included.
inline MagnitudeCurve mmd_curve(const SensorStream& stream, std::size_t window_len, std::size_t step,
                                std::size_t subsample = 1, bool clip = true) {
  if (window_len < 2 || step < 1) throw ValueError("mmd_curve: window_len >= 2 and step >= 1 required");
  if (stream.size() < 2 * window_len) throw SizeError("mmd_curve: stream shorter than two windows");
  MagnitudeCurve out;
  for (std::size_t t = window_len; t + window_len <= stream.size(); t += step) {
    const Matrix a = subsample_rows(Window(stream, t - window_len, window_len).to_matrix(), subsample);
    const Matrix b = subsample_rows(Window(stream, t, window_len).to_matrix(), subsample);
    out.t.push_back(t);
    const double v = mmd2_unbiased(a, b);
    out.m.push_back(clip ? std::max(0.0, v) : v);
  }
  return out;
}

struct ShapeCandidate {
  std::size_t index = 0;
  double magnitude = 0.0;
};

struct ShapeCurve {
  std::vector<double> magnitude;
  std::vector<double> shape;
  std::vector<ShapeCandidate> candidates;
};

/// s(t) = sum_{i=1..h} m(t + i) - sum_{i=1..h} m(t - i), evaluated where the
/// kernel fits inside the series and 0 elsewhere. Candidates are the points
/// where s leaves a positive run and next turns negative; each sits on the
/// side of the sign change closer to zero.
inline ShapeCurve shape_curve(const std::vector<double>& m, std::size_t half_width) {
  if (half_width < 1) throw ValueError("shape_curve: half_width must be >= 1");
  if (m.size() <= 2 * half_width) throw SizeError("shape_curve: series too short for the kernel");
  ShapeCurve out;
  out.magnitude = m;
  out.shape.assign(m.size(), 0.0);
  for (std::size_t t = half_width; t + half_width < m.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = 1; i <= half_width; ++i) s += m[t + i] - m[t - i];
    out.shape[t] = s;
  }
  const auto& s = out.shape;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (!(s[i] > 0.0) || s[i + 1] > 0.0) continue;
    std::size_t j = i + 1;
    while (j < s.size() && s[j] == 0.0) ++j;
    if (j >= s.size() || !(s[j] < 0.0)) continue;
    // zero run between the signs: its first index; otherwise the side nearer zero
    const std::size_t at = j > i + 1 ? i + 1 : (s[i] < -s[j] ? i : j);
    out.candidates.push_back({at, m[at]});
  }
  return out;
}

}  // namespace leakdrift
