#include <cmath>
#include <random>

#include "doctest.h"
#include "fsb/error.hpp"
#include "fsb/tensor_ops.hpp"
#include "oracles.hpp"

using fsb::TransformMode;
using Md = fsb::Matrix<double>;
using Vd = fsb::Vector<double>;

TEST_CASE("pooling a single cell is the identity") {
  auto fm = fsb::make_feature_map<double>(1, 1, 1);
  fm.values(0, 0) = 7.5;
  CHECK(fsb::adaptive_avg_pool(fm)(0) == 7.5);
}

TEST_CASE("pooling averages each channel") {
  auto fm = fsb::make_feature_map<double>(2, 2, 2);
  fm.values.row(0) << 1, 2, 3, 4;
  fm.values.row(1) << 0, 0, 0, 8;
  const Vd pooled = fsb::adaptive_avg_pool(fm);
  CHECK(pooled(0) == doctest::Approx(2.5));
  CHECK(pooled(1) == doctest::Approx(2.0));
}

TEST_CASE("pooling a constant map gives the constant") {
  auto fm = fsb::make_feature_map<float>(3, 4, 5);
  fm.values.setConstant(-1.25f);
  const auto pooled = fsb::adaptive_avg_pool(fm);
  for (int c = 0; c < 3; ++c) CHECK(pooled(c) == -1.25f);
}

TEST_CASE("pooling is linear") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  auto a = fsb::make_feature_map<double>(4, 3, 3);
  auto b = fsb::make_feature_map<double>(4, 3, 3);
  for (auto* fm : {&a, &b})
    for (Eigen::Index i = 0; i < fm->values.size(); ++i) fm->values.data()[i] = n(gen);
  auto combo = a;
  combo.values = 2.0 * a.values - 0.5 * b.values;
  const Vd expected = 2.0 * fsb::adaptive_avg_pool(a) - 0.5 * fsb::adaptive_avg_pool(b);
  CHECK((fsb::adaptive_avg_pool(combo) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pooling rejects bad input") {
  CHECK_THROWS_AS(fsb::make_feature_map<double>(0, 1, 1), fsb::DimensionError);
  auto fm = fsb::make_feature_map<double>(1, 2, 2);
  fm.values(0, 1) = std::nan("");
  CHECK_THROWS_AS(fsb::adaptive_avg_pool(fm), fsb::ValidationError);
  fsb::FeatureMap<double> wrong{2, 2, Md::Zero(1, 3)};
  CHECK_THROWS_AS(fsb::adaptive_avg_pool(wrong), fsb::DimensionError);
}

TEST_CASE("UN leaves vectors untouched") {
  Md m(2, 3);
  m << 1, -2, 3, 0.5, 0, 9;
  CHECK(fsb::transform(m, TransformMode::un) == m);
}

TEST_CASE("L2N on a 3-4-5 vector") {
  Md m(1, 2);
  m << 3, 4;
  const Md t = fsb::transform(m, TransformMode::l2n);
  CHECK(t(0, 0) == doctest::Approx(0.6));
  CHECK(t(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("CL2N subtracts the center then normalizes") {
  Md m(2, 2);
  m << 2, 0, 0, 2;
  const Vd center = Vd::Constant(2, 1.0);
  const Md t = fsb::transform(m, TransformMode::cl2n, center);
  const double h = std::sqrt(2.0) / 2;
  CHECK(t(0, 0) == doctest::Approx(h));
  CHECK(t(0, 1) == doctest::Approx(-h));
  CHECK(t(1, 0) == doctest::Approx(-h));
  CHECK(t(1, 1) == doctest::Approx(h));
}

TEST_CASE("CL2N with a zero center equals L2N") {
  Md m = Md::Random(5, 4);
  const Md a = fsb::transform(m, TransformMode::cl2n, Vd::Zero(4).eval());
  const Md b = fsb::transform(m, TransformMode::l2n);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero rows are reported with their index") {
  Md m(3, 2);
  m << 1, 1, 0, 0, 2, 2;
  try {
    (void)fsb::transform(m, TransformMode::l2n, std::nullopt, 10);
    FAIL("expected an error");
  } catch (const fsb::DegenerateVectorError& e) {
    CHECK(e.row() == 11);
  }
  Md c(1, 2);
  c << 1, 1;
  CHECK_THROWS_AS(fsb::transform(c, TransformMode::cl2n, Vd::Ones(2).eval()),
                  fsb::DegenerateVectorError);
  CHECK_THROWS_AS(fsb::transform(c, TransformMode::cl2n), fsb::ProtocolError);
  CHECK_NOTHROW(fsb::transform(Md::Zero(2, 2).eval(), TransformMode::un));
}

TEST_CASE("squared Euclidean distance") {
  Vd a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(fsb::euclidean_distance_sq(a, b) == 25.0);
  CHECK(fsb::euclidean_distance_sq(b, b) == 0.0);
  CHECK_THROWS_AS(fsb::euclidean_distance_sq(a, Vd::Zero(3)), fsb::DimensionError);

  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    oracle::Row x(8), y(8);
    Vd ex(8), ey(8);
    for (int i = 0; i < 8; ++i) {
      ex(i) = x[i] = u(gen);
      ey(i) = y[i] = u(gen);
    }
    CHECK(std::abs(fsb::euclidean_distance_sq(ex, ey) - oracle::dist_sq(x, y)) < 1e-12);
  }
}

TEST_CASE("transform names") {
  CHECK(fsb::parse_transform("L2N") == TransformMode::l2n);
  CHECK(fsb::parse_transform("cl2n") == TransformMode::cl2n);
  CHECK(fsb::parse_transform("un") == TransformMode::un);
  CHECK(fsb::to_string(TransformMode::cl2n) == "cl2n");
  CHECK_THROWS_AS(fsb::parse_transform("l3n"), fsb::ConfigError);
}
