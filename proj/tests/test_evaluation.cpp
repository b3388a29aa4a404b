#include <cmath>

#include "doctest.h"
#include "fsb/error.hpp"
#include "fsb/evaluation.hpp"
#include "fsb/report.hpp"
#include "fsb/synthetic.hpp"
#include "oracles.hpp"

using fsb::TransformMode;

namespace {

fsb::EmbeddingDataset far_apart(double noise) {
  fsb::GaussianClusters spec;
  spec.means = Eigen::MatrixXd(2, 4);
  spec.means.row(0).setConstant(-10.0);
  spec.means.row(1).setConstant(10.0);
  spec.per_class = {40, 40};
  spec.sigma = noise;
  spec.seed = 3;
  return fsb::make_gaussian_clusters(spec);
}

fsb::EpisodeResult result_with(const fsb::CountMatrix& confusion) {
  fsb::EpisodeResult r;
  r.confusion = confusion;
  const auto k = static_cast<std::size_t>(confusion.rows());
  r.correct.assign(k, 0);
  r.total.assign(k, 0);
  std::int64_t hit = 0, all = 0;
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    r.correct[static_cast<std::size_t>(i)] = confusion(i, i);
    r.total[static_cast<std::size_t>(i)] = confusion.row(i).sum();
    hit += confusion(i, i);
    all += confusion.row(i).sum();
  }
  r.accuracy = static_cast<double>(hit) / static_cast<double>(all);
  return r;
}

}  // namespace

TEST_CASE("separable clusters are classified perfectly") {
  const auto ds = far_apart(0.1);
  for (int m : {1, 3, 10}) {
    for (auto mode : {TransformMode::un, TransformMode::l2n, TransformMode::cl2n}) {
      fsb::CellSpec cell;
      cell.n_way = 2;
      cell.m_shot = m;
      cell.query_count = 20;
      cell.episodes = 10;
      cell.mode = mode;
      const auto s = fsb::run_cell(ds, cell);
      CHECK(s.accuracy.mean == 1.0);
      CHECK(s.accuracy.half_width == 0.0);
    }
  }
}

TEST_CASE("swapped supports misclassify every query") {
  const auto ds = far_apart(0.1);
  const auto by_class = ds.indices_by_class();
  fsb::Episode ep;
  ep.class_ids = {0, 1};
  // Class 0's prototype is built from class 1 records and vice versa.
  ep.support = {{by_class[1][0], by_class[1][1]}, {by_class[0][0], by_class[0][1]}};
  for (int i = 5; i < 10; ++i) {
    ep.query.push_back(by_class[0][static_cast<std::size_t>(i)]);
    ep.query_labels.push_back(0);
    ep.query.push_back(by_class[1][static_cast<std::size_t>(i)]);
    ep.query_labels.push_back(1);
  }
  ep.spec = {2, 2, 10, 0, 0};
  const auto r = fsb::evaluate_episode(ds, ds, ep, TransformMode::un);
  CHECK(r.accuracy == 0.0);
  CHECK(r.confusion(0, 1) == 5);
  CHECK(r.confusion(1, 0) == 5);
  CHECK(r.confusion.trace() == 0);
}

TEST_CASE("episode results cover the whole class list") {
  const auto ds = oracle::random_dataset({20, 20, 20, 20}, 3, 5);
  const auto ep = fsb::sample_episode(ds, {2, 3, 10, 4, 1});
  const auto r = fsb::evaluate_episode(ds, ds, ep, TransformMode::l2n);
  CHECK(r.confusion.rows() == 4);
  CHECK(r.confusion.sum() == 10);
  CHECK(r.class_ids == ep.class_ids);
  std::int64_t total = 0;
  for (auto t : r.total) total += t;
  CHECK(total == 10);
}

TEST_CASE("aggregation sums confusions") {
  fsb::CountMatrix a(2, 2), b(2, 2);
  a << 3, 1, 0, 4;
  b << 2, 2, 1, 3;
  const std::vector<fsb::EpisodeResult> one{result_with(a)};
  CHECK(fsb::aggregate_confusion(one).pooled == a);
  const std::vector<fsb::EpisodeResult> two{result_with(a), result_with(b)};
  const auto agg = fsb::aggregate_confusion(two);
  CHECK(agg.pooled == a + b);
  REQUIRE(agg.per_class.size() == 2);
  CHECK(agg.per_class[0].mean == doctest::Approx((0.75 + 0.5) / 2));
  CHECK(agg.per_class[1].episodes == 2);

  fsb::CountMatrix c(3, 3);
  c.setZero();
  const std::vector<fsb::EpisodeResult> mixed{result_with(a), result_with(c)};
  CHECK_THROWS_AS(fsb::aggregate_confusion(mixed), fsb::ProtocolError);
}

TEST_CASE("perfect classifier gives a diagonal confusion") {
  fsb::CountMatrix a(3, 3), b(3, 3);
  a << 4, 0, 0, 0, 5, 0, 0, 0, 0;
  b << 0, 0, 0, 0, 2, 0, 0, 0, 7;
  const std::vector<fsb::EpisodeResult> results{result_with(a), result_with(b)};
  const auto agg = fsb::aggregate_confusion(results);
  CHECK(agg.pooled == a + b);
  for (const auto& pc : agg.per_class) CHECK(pc.mean == 1.0);
  // Classes without queries in an episode are left out of that class's interval.
  CHECK(agg.per_class[0].episodes == 1);
  CHECK(std::isnan(agg.per_class[0].half_width));
  CHECK(agg.per_class[1].episodes == 2);
}

TEST_CASE("run_cell bookkeeping") {
  const auto ds = oracle::random_dataset({30, 30, 30, 30}, 6, 9);
  fsb::CellSpec cell;
  cell.n_way = 3;
  cell.m_shot = 5;
  cell.query_count = 25;
  cell.episodes = 12;
  cell.base_seed = 4;
  const auto s = fsb::run_cell(ds, cell);
  REQUIRE(s.episodes.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(s.episodes[i].episode_index == static_cast<std::int64_t>(i));
  CHECK(s.accuracy.n == 12);
  CHECK(s.confusion.pooled.sum() == 12 * 25);
  CHECK(s.class_names == ds.class_names);

  const auto parallel = fsb::run_cell(ds, cell, 4);
  CHECK(fsb::summary_to_json(parallel, {}) == fsb::summary_to_json(s, {}));

  cell.episodes = 1;
  const auto single = fsb::run_cell(ds, cell);
  CHECK(std::isnan(single.accuracy.half_width));
}

TEST_CASE("failures carry the episode index") {
  auto ds = oracle::random_dataset({6, 6}, 2, 9);
  ds.vectors.row(3).setZero();
  fsb::CellSpec cell;
  cell.n_way = 2;
  cell.m_shot = 2;
  cell.query_count = 4;
  cell.episodes = 50;
  cell.mode = TransformMode::l2n;
  try {
    fsb::run_cell(ds, cell, 3);
    FAIL("expected an error");
  } catch (const fsb::Error& e) {
    CHECK(e.code() == fsb::Errc::degenerate_vector);
    REQUIRE(e.episode_index.has_value());
    CHECK(std::string(e.what()).find("episode " + std::to_string(*e.episode_index)) == 0);
  }
  cell.mode = TransformMode::un;
  CHECK_NOTHROW(fsb::run_cell(ds, cell));
  cell.query_count = 100;
  CHECK_THROWS_AS(fsb::run_cell(ds, cell), fsb::InfeasibleQueryError);
}

TEST_CASE("summarize") {
  const std::vector<double> one{0.4};
  const auto s = fsb::summarize(one, 0.95);
  CHECK(s.mean == 0.4);
  CHECK(std::isnan(s.half_width));
  const std::vector<double> two{0.0, 1.0};
  CHECK(fsb::summarize(two, 0.95).half_width == doctest::Approx(6.353).epsilon(1e-3));
}
