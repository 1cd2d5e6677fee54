#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace leakdrift;
using Catch::Approx;

namespace {

SensorStream tile(const Matrix& week, std::size_t weeks, const std::function<double(std::size_t)>& offset = {}) {
  Matrix m(static_cast<Eigen::Index>(weeks * kWeek), week.cols());
  for (std::size_t w = 0; w < weeks; ++w) {
    m.middleRows(static_cast<Eigen::Index>(w * kWeek), kWeek) = week;
    if (offset) m.middleRows(static_cast<Eigen::Index>(w * kWeek), kWeek).array() += offset(w);
  }
  std::vector<std::string> ids;
  for (Eigen::Index j = 0; j < week.cols(); ++j) ids.push_back("s" + std::to_string(j));
  return SensorStream(ids, m);
}

SensorStream from_column(const std::vector<double>& v) {
  return SensorStream({"x"}, Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace

TEST_CASE("standard week of a repeated week is that week with zero spread", "[preprocess]") {
  std::mt19937_64 rng(1);
  const Matrix w = oracle::random_matrix(rng, kWeek, 3);
  auto sw = standard_week(tile(w, 4));
  CHECK(sw.mean.isApprox(w, 1e-12));
  CHECK(sw.std.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standard week of w and w + c", "[preprocess]") {
  std::mt19937_64 rng(2);
  const Matrix w = oracle::random_matrix(rng, kWeek, 2);
  const double c = 3.0;
  auto sw = standard_week(tile(w, 2, [&](std::size_t k) { return k * c; }));
  CHECK((sw.mean.array() - (w.array() + c / 2)).abs().maxCoeff() < 1e-12);
  CHECK((sw.std.array() - c / 2).abs().maxCoeff() < 1e-12);
}

TEST_CASE("standard week ignores a trailing partial week and needs one full week", "[preprocess]") {
  std::mt19937_64 rng(3);
  const Matrix w = oracle::random_matrix(rng, kWeek, 1);
  Matrix m(kWeek + 100, 1);
  m << w, Matrix::Constant(100, 1, 1e6);
  auto sw = standard_week(SensorStream({"x"}, m));
  CHECK(sw.mean.isApprox(w));
  CHECK_THROWS_AS(standard_week(SensorStream({"x"}, Matrix::Zero(671, 1))), SizeError);
}

TEST_CASE("subtracting the template", "[preprocess]") {
  std::mt19937_64 rng(4);
  const Matrix w = oracle::random_matrix(rng, kWeek, 2);
  auto s = tile(w, 3);
  auto sw = standard_week(s);
  CHECK(subtract_standard_week(s, sw).values().cwiseAbs().maxCoeff() < 1e-12);

  auto shifted = tile(w, 3, [](std::size_t) { return 2.5; });
  auto r = subtract_standard_week(shifted, sw);
  CHECK((r.values().array() - 2.5).abs().maxCoeff() < 1e-12);

  StandardWeek wrong{Matrix::Zero(kWeek, 5), Matrix::Zero(kWeek, 5)};
  CHECK_THROWS_AS(subtract_standard_week(s, wrong), ShapeError);
}

TEST_CASE("template phase follows the absolute sample index", "[preprocess]") {
  std::mt19937_64 rng(5);
  const Matrix w = oracle::random_matrix(rng, kWeek, 1);
  auto s = tile(w, 3);
  auto sw = standard_week(s);
  auto tail = materialize(slice(s, 100, 2 * kWeek));
  CHECK(subtract_standard_week(tail, sw).values().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("week difference", "[preprocess]") {
  std::mt19937_64 rng(6);
  auto periodic = tile(oracle::random_matrix(rng, kWeek, 2), 3);
  auto d = week_difference(periodic);
  CHECK(d.size() == 2 * kWeek);
  CHECK(d.first_index() == static_cast<std::int64_t>(kWeek));
  CHECK(d.values().cwiseAbs().maxCoeff() == 0.0);

  const double a = 0.25;
  std::vector<double> trend(2000);
  for (std::size_t t = 0; t < trend.size(); ++t) trend[t] = a * static_cast<double>(t);
  auto dt = week_difference(from_column(trend));
  CHECK((dt.values().array() - 672 * a).abs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(week_difference(from_column(std::vector<double>(kWeek, 1.0))), SizeError);
}

TEST_CASE("window pair partitions the stream around the split", "[preprocess]") {
  std::vector<double> v(2 * kWeek);
  std::iota(v.begin(), v.end(), 0.0);
  auto s = from_column(v);
  auto [ref, test] = window_pair(s, kWeek);
  CHECK(ref.start() == 0);
  CHECK(ref.size() == kWeek);
  CHECK(test.start() == kWeek);
  CHECK(test.size() == kWeek);
  CHECK(ref.column(0).back() + 1 == test.column(0).front());
  CHECK_THROWS_AS(window_pair(s, kWeek - 1), RangeError);
  CHECK_THROWS_AS(window_pair(s, kWeek + 1), RangeError);

  auto [a, b] = window_pair(s, 500, 96);
  CHECK(a.start() == 404);
  CHECK(b.start() == 500);
  CHECK_THROWS_AS(window_pair(s, 500, 0), RangeError);
}

TEST_CASE("lag matrix layout", "[preprocess]") {
  auto s = from_column({1, 2, 3, 4});
  LagSpec one;
  one.lags = {1};
  auto d = lag_matrix(s, one, 0);
  REQUIRE(d.X.rows() == 3);
  CHECK(d.X(0, 0) == 1.0);
  CHECK(d.X(2, 0) == 3.0);
  CHECK(d.y(0) == 2.0);
  CHECK(d.y(2) == 4.0);
  CHECK(d.rows == std::vector<std::size_t>{1, 2, 3});

  LagSpec two;
  two.lags = {2, 1};
  auto e = lag_matrix(s, two, 0);
  REQUIRE(e.X.rows() == 2);
  CHECK(e.X(0, 0) == 1.0);
  CHECK(e.X(0, 1) == 2.0);
  CHECK(e.y(0) == 3.0);

  std::vector<double> three_weeks(21 * kDay, 1.0);
  auto big = lag_matrix(from_column(three_weeks), LagSpec{}, 0);
  CHECK(big.X.rows() == static_cast<Eigen::Index>(21 * kDay - 1344));
  CHECK(big.X.cols() == 4);

  CHECK_THROWS_AS(lag_matrix(s, LagSpec::range(1, 4), 0), SizeError);
  CHECK_THROWS_AS(lag_matrix(s, one, 1), RangeError);
  LagSpec bad;
  bad.lags = {1, 1};
  CHECK_THROWS_AS(lag_matrix(s, bad, 0), ValueError);
  bad.lags = {0};
  CHECK_THROWS_AS(lag_matrix(s, bad, 0), ValueError);
}

TEST_CASE("lag matrix rows satisfy X[r][c] = x[t - lag_c] for random specs", "[preprocess][property]") {
  std::mt19937_64 rng(7);
  const Matrix data = oracle::random_matrix(rng, 400, 3);
  SensorStream s({"a", "b", "c"}, data);
  for (int trial = 0; trial < 25; ++trial) {
    LagSpec spec;
    spec.lags.clear();
    std::set<std::size_t> picked;
    const auto count = std::uniform_int_distribution<int>(1, 6)(rng);
    while (static_cast<int>(picked.size()) < count) picked.insert(std::uniform_int_distribution<std::size_t>(1, 150)(rng));
    spec.lags.assign(picked.begin(), picked.end());
    std::shuffle(spec.lags.begin(), spec.lags.end(), rng);
    const auto sensor = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
    auto d = lag_matrix(s, spec, sensor);
    REQUIRE(d.X.rows() == static_cast<Eigen::Index>(400 - spec.max_lag()));
    for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
      const auto t = d.rows[static_cast<std::size_t>(r)];
      REQUIRE(d.y(r) == data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(sensor)));
      for (std::size_t c = 0; c < spec.lags.size(); ++c)
        REQUIRE(d.X(r, static_cast<Eigen::Index>(c)) ==
                data(static_cast<Eigen::Index>(t - spec.lags[c]), static_cast<Eigen::Index>(sensor)));
    }
  }
}
