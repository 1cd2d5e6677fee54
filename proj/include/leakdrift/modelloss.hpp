#pragma once

// Model-loss drift detection: regressors trained on leak-free data, their
// per-sample error series on later data, and ROC-AUC scoring of how well
// those errors separate leak from no-leak samples.

#include "leakdrift/core.hpp"
#include "leakdrift/preprocess.hpp"

#include <algorithm>
#include <concepts>
#include <map>
#include <numeric>

namespace leakdrift {

// ---------------------------------------------------------------------------
// ROC-AUC

/// Mann-Whitney AUC with midranks, so ties count one half.
inline double roc_auc(const std::vector<LabeledScore>& scores) {
  std::size_t n1 = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw ValueError("roc_auc: non-finite score");
    if (s.label != 0 && s.label != 1) throw ValueError("roc_auc: labels must be 0 or 1");
    n1 += static_cast<std::size_t>(s.label);
  }
  const std::size_t n0 = scores.size() - n1;
  if (n0 == 0 || n1 == 0) throw UndefinedMetricError("roc_auc needs both labels present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a].score < scores[b].score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t positives = 0;
    while (j < order.size() && scores[order[j]].score == scores[order[i]].score) {
      positives += static_cast<std::size_t>(scores[order[j]].label);
      ++j;
    }
    // ranks i+1 .. j share the midrank (i + 1 + j) / 2
    rank_sum += static_cast<double>(positives) * static_cast<double>(i + 1 + j) / 2.0;
    i = j;
  }
  const double u = rank_sum - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;
  return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

inline double roc_auc(const std::vector<double>& negatives, const std::vector<double>& positives) {
  std::vector<LabeledScore> s;
  s.reserve(negatives.size() + positives.size());
  for (double v : negatives) s.push_back({0, v});
  for (double v : positives) s.push_back({1, v});
  return roc_auc(s);
}

// ---------------------------------------------------------------------------
// Feature scaling

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    const double m = static_cast<double>(X.rows());
    s.mean = X.colwise().mean();
    s.scale = ((X.rowwise() - s.mean).cwiseAbs2().colwise().sum() / m).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (!(s.scale(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j))))) s.scale(j) = 1.0;
    return s;
  }

  Matrix apply(const Matrix& X) const {
    return (X.rowwise() - mean).array().rowwise() / scale.array();
  }
};

/// All monomials of total degree 1..degree, in graded lexicographic order.
inline Matrix polynomial_features(const Matrix& X, int degree, std::size_t max_features) {
  if (degree < 1) throw ValueError("polynomial degree must be >= 1");
  const auto p = static_cast<std::size_t>(X.cols());
  // count = C(p + degree, degree) - 1
  double count = 1.0;
  for (int k = 1; k <= degree; ++k) count = count * static_cast<double>(p + static_cast<std::size_t>(k)) / k;
  count -= 1.0;
  if (count > static_cast<double>(max_features))
    throw CapacityError("polynomial expansion would create " + std::to_string(static_cast<long long>(count)) +
                        " features (cap " + std::to_string(max_features) + ")");
  Matrix out(X.rows(), static_cast<Eigen::Index>(std::llround(count)));
  Eigen::Index col = 0;
  std::vector<std::size_t> idx;
  Vector current = Vector::Ones(X.rows());
  // depth-first over non-decreasing index tuples
  auto recurse = [&](auto&& self, std::size_t from, const Vector& prod, int depth) -> void {
    for (std::size_t j = from; j < p; ++j) {
      Vector next = prod.cwiseProduct(X.col(static_cast<Eigen::Index>(j)));
      if (depth == 1) out.col(col++) = next;
      else self(self, j, next, depth - 1);
    }
  };
  for (int d = 1; d <= degree; ++d) recurse(recurse, 0, current, d);
  return out;
}

// ---------------------------------------------------------------------------
// Regressors

enum class ModelKind { knn, ridge, poly_ridge, elastic_net };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::ridge: return "ridge";
    case ModelKind::poly_ridge: return "poly_ridge";
    case ModelKind::elastic_net: return "elastic_net";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "knn") return ModelKind::knn;
  if (s == "ridge") return ModelKind::ridge;
  if (s == "poly_ridge") return ModelKind::poly_ridge;
  if (s == "elastic_net") return ModelKind::elastic_net;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct ModelParams {
  std::size_t k = 5;
  double ridge_lambda = 1.0;
  int degree = 2;
  double alpha = 0.01;
  double l1_ratio = 0.5;
  std::size_t max_iter = 1000;
  double tol = 1e-6;
  std::size_t max_poly_features = 5000;
};

/// Mean of the k nearest rows' targets under Euclidean distance; ties on
/// distance go to the lower row index.
inline double knn_predict(const Matrix& train_X, const Vector& train_y, const Eigen::RowVectorXd& query,
                          std::size_t k) {
  const auto n = static_cast<std::size_t>(train_X.rows());
  if (n == 0) throw SizeError("knn: empty training set");
  if (k == 0 || k > n) throw ValueError("knn: k must lie in [1, rows]");
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = {(train_X.row(static_cast<Eigen::Index>(i)) - query).squaredNorm(), i};
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += train_y(static_cast<Eigen::Index>(d[i].second));
  return sum / static_cast<double>(k);
}

class Regressor {
 public:
  ModelKind kind() const { return kind_; }
  bool fitted() const { return fitted_; }
  std::size_t input_width() const { return width_; }

  /// Weights on standardized features (linear kinds).
  const Vector& weights() const { return weights_; }
  double intercept_standardized() const { return intercept_; }

  /// Weights and intercept in the original feature units (ridge, elastic net).
  Vector coefficients() const {
    require_linear();
    return weights_.cwiseQuotient(scaler_.scale.transpose());
  }
  double intercept() const {
    require_linear();
    return intercept_ - scaler_.mean.dot(coefficients());
  }

  bool converged() const { return converged_; }
  std::size_t iterations() const { return iterations_; }
  /// Elastic-net objective after each coordinate sweep.
  const std::vector<double>& objective_trace() const { return trace_; }

  Vector predict(const Matrix& X) const {
    if (!fitted_) throw ContractError("predict called before fit");
    if (static_cast<std::size_t>(X.cols()) != width_) throw ShapeError("predict: feature width mismatch");
    if (kind_ == ModelKind::knn) return predict_knn(scaler_.apply(X));
    Matrix Z = kind_ == ModelKind::poly_ridge
                   ? poly_scaler_.apply(polynomial_features(input_scaler_.apply(X), degree_, max_features_))
                   : scaler_.apply(X);
    return (Z * weights_).array() + intercept_;
  }

  double predict(const Eigen::RowVectorXd& x) const { return predict(Matrix(x))(0); }

 private:
  friend Regressor fit_ridge(const Matrix&, const Vector&, double);
  friend Regressor fit_poly_ridge(const Matrix&, const Vector&, int, double, std::size_t);
  friend Regressor fit_elastic_net(const Matrix&, const Vector&, double, double, std::size_t, double, bool);
  friend Regressor fit_knn(const Matrix&, const Vector&, std::size_t);

  void require_linear() const {
    if (!fitted_) throw ContractError("model not fitted");
    if (kind_ != ModelKind::ridge && kind_ != ModelKind::elastic_net)
      throw ContractError("coefficients only defined for linear models");
  }

  Vector predict_knn(const Matrix& Q) const {
    // squared distances via ||q||^2 - 2 q.x + ||x||^2 in row blocks; the k
    // best (distance, index) pairs are kept sorted, so ties go to the lower index
    constexpr Eigen::Index block = 256;
    const auto n = train_.rows();
    Vector out(Q.rows());
    std::vector<double> best_d(k_);
    std::vector<Eigen::Index> best_i(k_);
    for (Eigen::Index b = 0; b < Q.rows(); b += block) {
      const auto rows = std::min(block, Q.rows() - b);
      const Matrix cross = Q.middleRows(b, rows) * train_.transpose();
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double qn = Q.row(b + r).squaredNorm();
        std::size_t filled = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = std::max(0.0, qn - 2.0 * cross(r, i) + train_norms_(i));
          if (filled == k_ && !(d < best_d[k_ - 1])) continue;
          std::size_t pos = filled < k_ ? filled++ : k_ - 1;
          while (pos > 0 && d < best_d[pos - 1]) {
            best_d[pos] = best_d[pos - 1];
            best_i[pos] = best_i[pos - 1];
            --pos;
          }
          best_d[pos] = d;
          best_i[pos] = i;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < k_; ++i) sum += train_y_(best_i[i]);
        out(b + r) = sum / static_cast<double>(k_);
      }
    }
    return out;
  }

  ModelKind kind_ = ModelKind::ridge;
  bool fitted_ = false;
  std::size_t width_ = 0;
  Standardizer scaler_;        // on model inputs (ridge/en/knn)
  Standardizer input_scaler_;  // poly: raw -> standardized before expansion
  Standardizer poly_scaler_;   // poly: expanded features
  int degree_ = 1;
  std::size_t max_features_ = 0;
  Vector weights_;
  double intercept_ = 0.0;
  Matrix train_;
  Vector train_norms_;
  Vector train_y_;
  std::size_t k_ = 0;
  bool converged_ = true;
  std::size_t iterations_ = 0;
  std::vector<double> trace_;
};

namespace detail {

inline void check_xy(const Matrix& X, const Vector& y) {
  if (X.rows() < 1) throw SizeError("regression needs at least one row");
  if (X.rows() != y.size()) throw ShapeError("X rows and y length differ");
  if (!X.allFinite() || !y.allFinite()) throw ValueError("regression data must be finite");
}

/// Solves (Z'Z + lambda I) w = Z'(y - mean(y)) on standardized Z.
inline Vector ridge_solve(const Matrix& Z, const Vector& yc, double lambda) {
  const auto p = Z.cols();
  Matrix A = Matrix::Zero(p, p);
  A.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
  A = A.selfadjointView<Eigen::Lower>();
  A.diagonal().array() += lambda;
  const Vector b = Z.transpose() * yc;
  Eigen::LDLT<Matrix> ldlt(A);
  const Vector D = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(D.minCoeff() > 1e-12 * D.cwiseAbs().maxCoeff()))
    throw NumericalError("ridge system is singular; use lambda > 0");
  return ldlt.solve(b);
}

}  // namespace detail

inline Regressor fit_ridge(const Matrix& X, const Vector& y, double lambda) {
  detail::check_xy(X, y);
  if (!(lambda >= 0)) throw ValueError("ridge lambda must be >= 0");
  Regressor r;
  r.kind_ = ModelKind::ridge;
  r.width_ = static_cast<std::size_t>(X.cols());
  r.scaler_ = Standardizer::fit(X);
  const double ybar = y.mean();
  r.weights_ = detail::ridge_solve(r.scaler_.apply(X), y.array() - ybar, lambda);
  r.intercept_ = ybar;
  r.fitted_ = true;
  return r;
}

/// Ridge on the polynomial expansion of the standardized inputs.
inline Regressor fit_poly_ridge(const Matrix& X, const Vector& y, int degree, double lambda,
                                std::size_t max_features = 5000) {
  detail::check_xy(X, y);
  if (degree < 1) throw ValueError("polynomial degree must be >= 1");
  Regressor r;
  r.kind_ = ModelKind::poly_ridge;
  r.width_ = static_cast<std::size_t>(X.cols());
  r.degree_ = degree;
  r.max_features_ = max_features;
  r.input_scaler_ = Standardizer::fit(X);
  const Matrix P = polynomial_features(r.input_scaler_.apply(X), degree, max_features);
  r.poly_scaler_ = Standardizer::fit(P);
  const double ybar = y.mean();
  r.weights_ = detail::ridge_solve(r.poly_scaler_.apply(P), y.array() - ybar, lambda);
  r.intercept_ = ybar;
  r.fitted_ = true;
  return r;
}

inline Regressor fit_knn(const Matrix& X, const Vector& y, std::size_t k) {
  if (X.rows() == 0) throw SizeError("knn: empty training set");
  detail::check_xy(X, y);
  if (k == 0 || k > static_cast<std::size_t>(X.rows())) throw ValueError("knn: k must lie in [1, rows]");
  Regressor r;
  r.kind_ = ModelKind::knn;
  r.width_ = static_cast<std::size_t>(X.cols());
  r.scaler_ = Standardizer::fit(X);
  r.train_ = r.scaler_.apply(X);
  r.train_norms_ = r.train_.rowwise().squaredNorm();
  r.train_y_ = y;
  r.k_ = k;
  r.fitted_ = true;
  return r;
}

/// Coordinate descent for
///   (1/2m)||y - b - Zw||^2 + alpha*l1*||w||_1 + (alpha/2)(1 - l1)||w||^2
/// on standardized Z with unpenalized intercept b. Stops when the largest
/// coordinate change in a sweep drops below tol; running out of iterations is
/// reported through converged(), not thrown.
inline Regressor fit_elastic_net(const Matrix& X, const Vector& y, double alpha, double l1_ratio,
                                 std::size_t max_iter = 1000, double tol = 1e-6, bool track_objective = false) {
  detail::check_xy(X, y);
  if (!(alpha >= 0)) throw ValueError("elastic net alpha must be >= 0");
  if (!(l1_ratio >= 0 && l1_ratio <= 1)) throw ValueError("elastic net l1_ratio must lie in [0, 1]");
  Regressor r;
  r.kind_ = ModelKind::elastic_net;
  r.width_ = static_cast<std::size_t>(X.cols());
  r.scaler_ = Standardizer::fit(X);
  const Eigen::MatrixXd Z = r.scaler_.apply(X);  // column-major for coordinate sweeps
  const double m = static_cast<double>(X.rows());
  const double ybar = y.mean();
  Vector resid = y.array() - ybar;
  const auto p = Z.cols();
  Vector w = Vector::Zero(p);
  const Vector col_sq = Z.colwise().squaredNorm().transpose() / m;
  const double l1 = alpha * l1_ratio;
  const double l2 = alpha * (1.0 - l1_ratio);

  auto objective = [&]() {
    return 0.5 * resid.squaredNorm() / m + l1 * w.lpNorm<1>() + 0.5 * l2 * w.squaredNorm();
  };

  r.converged_ = false;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double denom = col_sq(j) + l2;
      if (!(denom > 0)) continue;
      const double old = w(j);
      const double rho = Z.col(j).dot(resid) / m + col_sq(j) * old;
      const double mag = std::max(0.0, std::abs(rho) - l1);
      const double updated = rho > 0 ? mag / denom : -mag / denom;
      if (updated != old) {
        resid.noalias() -= (updated - old) * Z.col(j);
        w(j) = updated;
        max_delta = std::max(max_delta, std::abs(updated - old));
      }
    }
    if (track_objective) r.trace_.push_back(objective());
    if (max_delta < tol) {
      r.converged_ = true;
      ++it;
      break;
    }
  }
  r.iterations_ = it;
  r.weights_ = w;
  r.intercept_ = ybar;
  r.fitted_ = true;
  return r;
}

inline Regressor fit_model(ModelKind kind, const ModelParams& p, const Matrix& X, const Vector& y) {
  switch (kind) {
    case ModelKind::knn: return fit_knn(X, y, std::min<std::size_t>(p.k, static_cast<std::size_t>(X.rows())));
    case ModelKind::ridge: return fit_ridge(X, y, p.ridge_lambda);
    case ModelKind::poly_ridge: return fit_poly_ridge(X, y, p.degree, p.ridge_lambda, p.max_poly_features);
    case ModelKind::elastic_net: return fit_elastic_net(X, y, p.alpha, p.l1_ratio, p.max_iter, p.tol);
  }
  throw ContractError("unknown model kind");
}

// ---------------------------------------------------------------------------
// Tasks and error series

enum class Task { forecast, interpolate };

inline std::string to_string(Task t) { return t == Task::forecast ? "forecast" : "interpolate"; }

inline Task parse_task(const std::string& s) {
  if (s == "forecast") return Task::forecast;
  if (s == "interpolate") return Task::interpolate;
  throw ConfigError("unknown task '" + s + "'");
}

/// Forecast: the sensor's own lagged values. Interpolate: all other sensors at
/// the same time step. Only stream rows satisfying `keep` become design rows.
template <typename Pred>
Design build_task_where(const SensorStream& stream, Task task, std::size_t sensor, const LagSpec& spec, Pred keep) {
  if (sensor >= stream.width()) throw RangeError("sensor index out of range");
  std::size_t first = 0;
  if (task == Task::forecast) {
    spec.validate();
    first = spec.max_lag();
    if (stream.size() <= first) throw SizeError("stream too short for the largest lag");
  } else if (stream.width() < 2) {
    throw SizeError("interpolation needs at least two sensors");
  }
  Design d;
  for (std::size_t t = first; t < stream.size(); ++t)
    if (keep(t)) d.rows.push_back(t);
  const auto m = static_cast<Eigen::Index>(d.rows.size());
  const auto n = static_cast<Eigen::Index>(stream.width());
  const auto j = static_cast<Eigen::Index>(sensor);
  const auto& v = stream.values();
  d.X.resize(m, task == Task::forecast ? static_cast<Eigen::Index>(spec.lags.size()) : n - 1);
  d.y.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto t = static_cast<Eigen::Index>(d.rows[static_cast<std::size_t>(r)]);
    if (task == Task::forecast) {
      for (std::size_t c = 0; c < spec.lags.size(); ++c)
        d.X(r, static_cast<Eigen::Index>(c)) = v(t - static_cast<Eigen::Index>(spec.lags[c]), j);
    } else {
      d.X.row(r).head(j) = v.row(t).head(j);
      d.X.row(r).tail(n - 1 - j) = v.row(t).tail(n - 1 - j);
    }
    d.y(r) = v(t, j);
  }
  return d;
}

inline Design build_task(const SensorStream& stream, Task task, std::size_t sensor, const LagSpec& spec = {}) {
  return build_task_where(stream, task, sensor, spec, [](std::size_t) { return true; });
}

/// Keeps design rows whose stream row satisfies `keep`.
template <typename Pred>
Design filter_rows(const Design& d, Pred keep) {
  std::vector<Eigen::Index> sel;
  for (std::size_t r = 0; r < d.rows.size(); ++r)
    if (keep(d.rows[r])) sel.push_back(static_cast<Eigen::Index>(r));
  Design out;
  out.X.resize(static_cast<Eigen::Index>(sel.size()), d.X.cols());
  out.y.resize(static_cast<Eigen::Index>(sel.size()));
  for (std::size_t i = 0; i < sel.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(sel[i]);
    out.y(static_cast<Eigen::Index>(i)) = d.y(sel[i]);
    out.rows.push_back(d.rows[static_cast<std::size_t>(sel[i])]);
  }
  return out;
}

/// A regressor bound to the task it was trained for.
struct TaskModel {
  Regressor regressor;
  Task task = Task::forecast;
  std::size_t sensor = 0;
  std::size_t width = 0;
  LagSpec lags;
};

/// Fits on the stream rows in [train_begin, train_end). Lag features may reach
/// back before train_begin.
inline TaskModel train_task_model(const SensorStream& stream, Task task, std::size_t sensor, ModelKind kind,
                                  const ModelParams& params, std::size_t train_begin, std::size_t train_end,
                                  const LagSpec& lags = {}) {
  auto design =
      build_task_where(stream, task, sensor, lags, [&](std::size_t t) { return t >= train_begin && t < train_end; });
  if (design.y.size() == 0) throw SizeError("no training rows in the requested range");
  return {fit_model(kind, params, design.X, design.y), task, sensor, stream.width(), lags};
}

enum class Provenance { baseline, leak };

struct ErrorSeries {
  std::vector<std::size_t> t;
  std::vector<double> errors;  // squared errors, m^2
  Provenance provenance = Provenance::baseline;

  double mean() const {
    if (errors.empty()) return 0.0;
    return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  }
};

/// Squared prediction errors on every evaluable row t with t % stride == 0
/// (and `keep(t)`).
template <typename Pred>
  requires std::predicate<Pred, std::size_t>
ErrorSeries error_series(const TaskModel& model, const SensorStream& stream, Task task, std::size_t sensor,
                         Pred keep, std::size_t stride = 1, Provenance provenance = Provenance::baseline) {
  if (!model.regressor.fitted()) throw ContractError("error_series: model not fitted");
  if (model.task != task || model.sensor != sensor || model.width != stream.width())
    throw ContractError("error_series: model was trained for a different task, sensor or stream width");
  if (stride == 0) throw ValueError("stride must be positive");
  auto design =
      build_task_where(stream, task, sensor, model.lags, [&](std::size_t t) { return t % stride == 0 && keep(t); });
  ErrorSeries out;
  out.provenance = provenance;
  out.t = design.rows;
  if (design.y.size() == 0) return out;
  const Vector pred = model.regressor.predict(design.X);
  out.errors.resize(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double e = pred(i) - design.y(i);
    out.errors[static_cast<std::size_t>(i)] = e * e;
  }
  return out;
}

inline ErrorSeries error_series(const TaskModel& model, const SensorStream& stream, Task task, std::size_t sensor,
                                std::size_t stride = 1, Provenance provenance = Provenance::baseline) {
  return error_series(model, stream, task, sensor, [](std::size_t) { return true; }, stride, provenance);
}

/// Per-time-step mean over sensors. All series must cover the same indices.
inline ErrorSeries pool_mean(const std::vector<ErrorSeries>& per_sensor) {
  if (per_sensor.empty()) throw SizeError("nothing to pool");
  ErrorSeries out;
  out.t = per_sensor.front().t;
  out.provenance = per_sensor.front().provenance;
  out.errors.assign(out.t.size(), 0.0);
  for (const auto& s : per_sensor) {
    if (s.t != out.t) throw ShapeError("pooled error series cover different samples");
    for (std::size_t i = 0; i < s.errors.size(); ++i) out.errors[i] += s.errors[i];
  }
  for (auto& e : out.errors) e /= static_cast<double>(per_sensor.size());
  return out;
}

// ---------------------------------------------------------------------------
// Fold evaluation

struct FoldResult {
  std::size_t fold = 0;  // training split start
  ModelKind model = ModelKind::ridge;
  Task task = Task::forecast;
  std::map<double, double> auc;       // leak size (mm) -> ROC-AUC
  std::map<double, double> mse;       // leak size (mm) -> mean pooled error on E_1
  double baseline_mse = 0.0;          // mean pooled error on E_0
  double training_mse = 0.0;          // mean pooled error on the training block
};

struct FoldOptions {
  ModelParams params;
  LagSpec lags;
  std::size_t train_len = 2 * kWeek;
  std::size_t eval_stride = 1;
};

/// Trains one model per sensor on baseline[fold_start, fold_start + train_len),
/// never updates it, and scores per-sensor-averaged squared errors: E_0 on the
/// rest of the baseline, E_1 on each whole leak stream. AUC per leak size
/// pools all scenarios of that size.
inline FoldResult evaluate_fold(const SensorStream& baseline, const std::vector<const LeakScenario*>& scenarios,
                                ModelKind kind, Task task, std::size_t fold_start, const FoldOptions& opt = {}) {
  if (fold_start + opt.train_len > baseline.size())
    throw SizeError("fold [" + std::to_string(fold_start) + ", +" + std::to_string(opt.train_len) +
                    ") exceeds baseline of length " + std::to_string(baseline.size()));
  for (const auto* s : scenarios)
    if (s->stream.width() != baseline.width() || s->stream.size() != baseline.size())
      throw ShapeError("scenario stream does not match the baseline");
  const auto fold_end = fold_start + opt.train_len;
  const auto in_fold = [&](std::size_t t) { return t >= fold_start && t < fold_end; };

  // Leak streams normally equal the baseline before onset; then their early
  // errors are taken from the baseline pass and only t >= onset is predicted.
  std::vector<std::size_t> reuse_until(scenarios.size(), 0);
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const auto rows = static_cast<Eigen::Index>(std::min(scenarios[s]->onset, baseline.size()));
    if (scenarios[s]->stream.values().topRows(rows) == baseline.values().topRows(rows))
      reuse_until[s] = static_cast<std::size_t>(rows);
  }
  const auto split = [](const ErrorSeries& all, auto pred, Provenance prov) {
    ErrorSeries out;
    out.provenance = prov;
    for (std::size_t i = 0; i < all.t.size(); ++i)
      if (pred(all.t[i])) {
        out.t.push_back(all.t[i]);
        out.errors.push_back(all.errors[i]);
      }
    return out;
  };
  std::vector<ErrorSeries> e0_parts, train_parts;
  std::vector<std::vector<ErrorSeries>> e1_parts(scenarios.size());
  for (std::size_t j = 0; j < baseline.width(); ++j) {
    const auto model = train_task_model(baseline, task, j, kind, opt.params, fold_start, fold_end, opt.lags);
    const auto all = error_series(model, baseline, task, j, opt.eval_stride, Provenance::baseline);
    e0_parts.push_back(split(all, [&](std::size_t t) { return !in_fold(t); }, Provenance::baseline));
    train_parts.push_back(split(all, in_fold, Provenance::baseline));
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const auto onset = reuse_until[s];
      auto e1 = split(all, [&](std::size_t t) { return t < onset; }, Provenance::leak);
      const auto late = error_series(model, scenarios[s]->stream, task, j, [&](std::size_t t) { return t >= onset; },
                                     opt.eval_stride, Provenance::leak);
      e1.t.insert(e1.t.end(), late.t.begin(), late.t.end());
      e1.errors.insert(e1.errors.end(), late.errors.begin(), late.errors.end());
      e1_parts[s].push_back(std::move(e1));
    }
  }
  const auto e0 = pool_mean(e0_parts);
  FoldResult out;
  out.fold = fold_start;
  out.model = kind;
  out.task = task;
  out.baseline_mse = e0.mean();
  out.training_mse = pool_mean(train_parts).mean();

  std::map<double, std::vector<double>> by_size;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const auto e1 = pool_mean(e1_parts[s]);
    auto& bucket = by_size[scenarios[s]->diameter_mm];
    bucket.insert(bucket.end(), e1.errors.begin(), e1.errors.end());
  }
  for (const auto& [size, errors] : by_size) {
    out.auc[size] = roc_auc(e0.errors, errors);
    out.mse[size] = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relevance profile

struct RelevanceProfile {
  std::vector<std::size_t> lags;
  std::vector<double> mean;  // mean |w| per lag
  std::vector<double> std;   // population std of |w| per lag
};

/// Mean and spread of absolute standardized weights across fitted forecast
/// models that share one lag spec.
inline RelevanceProfile relevance_profile(const std::vector<TaskModel>& runs) {
  if (runs.empty()) throw SizeError("relevance profile needs at least one run");
  const auto& lags = runs.front().lags;
  for (const auto& r : runs) {
    if (!(r.lags == lags)) throw ShapeError("relevance profile runs use different lag specs");
    if (!r.regressor.fitted() || r.regressor.kind() == ModelKind::knn || r.regressor.kind() == ModelKind::poly_ridge)
      throw ContractError("relevance profile needs fitted linear models");
    if (static_cast<std::size_t>(r.regressor.weights().size()) != lags.lags.size())
      throw ShapeError("weight vector does not match the lag spec");
  }
  const auto p = lags.lags.size();
  RelevanceProfile out{lags.lags, std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs)
    for (std::size_t i = 0; i < p; ++i) out.mean[i] += std::abs(r.regressor.weights()(static_cast<Eigen::Index>(i))) / n;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < p; ++i) {
      const double d = std::abs(r.regressor.weights()(static_cast<Eigen::Index>(i))) - out.mean[i];
      out.std[i] += d * d / n;
    }
  for (auto& s : out.std) s = std::sqrt(s);
  return out;
}

}  // namespace leakdrift
