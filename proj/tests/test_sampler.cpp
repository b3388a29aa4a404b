#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fsb/embedding_store.hpp"
#include "fsb/error.hpp"
#include "fsb/protocols.hpp"
#include "fsb/sampler.hpp"
#include "oracles.hpp"

namespace {

const std::vector<std::string> kMsldV2Names{
    "Monkeypox", "Chickenpox", "Measles", "Cowpox", "Hand-Foot-Mouth Disease", "Healthy"};
const std::vector<std::string> kMsidNames{"Monkeypox", "Chickenpox", "Measles", "Healthy"};

fsb::EmbeddingDataset msldv2_like() {
  auto ds = oracle::random_dataset({284, 75, 55, 66, 161, 114}, 4, 1, "MSLDv2");
  ds.class_names = kMsldV2Names;
  return ds;
}

fsb::EmbeddingDataset msid_like() {
  auto ds = oracle::random_dataset({279, 107, 91, 293}, 4, 2, "MSID");
  ds.class_names = kMsidNames;
  return ds;
}

void check_invariants(const fsb::EmbeddingDataset& support_ds, const fsb::EmbeddingDataset& query_ds,
                      const fsb::Episode& ep, bool same) {
  const auto& spec = ep.spec;
  REQUIRE(ep.class_ids.size() == static_cast<std::size_t>(spec.n_way));
  CHECK(std::is_sorted(ep.class_ids.begin(), ep.class_ids.end()));
  CHECK(std::adjacent_find(ep.class_ids.begin(), ep.class_ids.end()) == ep.class_ids.end());
  std::set<Eigen::Index> used;
  for (std::size_t k = 0; k < ep.support.size(); ++k) {
    REQUIRE(ep.support[k].size() == static_cast<std::size_t>(spec.m_shot));
    for (auto i : ep.support[k]) {
      CHECK(support_ds.labels[static_cast<std::size_t>(i)] == ep.class_ids[k]);
      CHECK(used.insert(i).second);
    }
  }
  REQUIRE(ep.query.size() == static_cast<std::size_t>(spec.query_count));
  REQUIRE(ep.query_labels.size() == ep.query.size());
  std::set<Eigen::Index> queries;
  for (std::size_t q = 0; q < ep.query.size(); ++q) {
    const auto i = ep.query[q];
    CHECK(query_ds.labels[static_cast<std::size_t>(i)] == ep.query_labels[q]);
    CHECK(std::binary_search(ep.class_ids.begin(), ep.class_ids.end(), ep.query_labels[q]));
    CHECK(queries.insert(i).second);
    if (same) CHECK(!used.contains(i));
  }
}

}  // namespace

TEST_CASE("two by two dataset is partitioned exactly") {
  const auto ds = oracle::random_dataset({2, 2}, 3, 1);
  for (std::uint64_t e = 0; e < 20; ++e) {
    const auto ep = fsb::sample_episode(ds, {2, 1, 2, e, 7});
    std::vector<Eigen::Index> all{ep.support[0][0], ep.support[1][0], ep.query[0], ep.query[1]};
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<Eigen::Index>{0, 1, 2, 3});
    check_invariants(ds, ds, ep, true);
  }
}

TEST_CASE("MSLDv2 6-way 10-shot 50 queries is feasible") {
  const auto ds = msldv2_like();
  fsb::EpisodeSpec spec{6, 10, 50, 0, 0};
  CHECK_NOTHROW(fsb::check_feasible(ds, spec));
  const auto ep = fsb::sample_episode(ds, spec);
  check_invariants(ds, ds, ep, true);
}

TEST_CASE("episodes are a pure function of seed and index") {
  const auto ds = msldv2_like();
  fsb::EpisodeSpec spec{4, 5, 30, 17, 99};
  CHECK(fsb::sample_episode(ds, spec) == fsb::sample_episode(ds, spec));
  auto other = spec;
  other.episode_index = 18;
  CHECK_FALSE(fsb::sample_episode(ds, spec) == fsb::sample_episode(ds, other));
  other = spec;
  other.base_seed = 100;
  CHECK_FALSE(fsb::sample_episode(ds, spec) == fsb::sample_episode(ds, other));
}

TEST_CASE("random specs always satisfy the episode invariants") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int classes = std::uniform_int_distribution<int>(2, 8)(gen);
    std::vector<int> counts;
    for (int c = 0; c < classes; ++c) counts.push_back(std::uniform_int_distribution<int>(1, 25)(gen));
    const auto ds = oracle::random_dataset(counts, 2, trial);
    fsb::EpisodeSpec spec;
    spec.n_way = std::uniform_int_distribution<int>(2, classes)(gen);
    spec.m_shot = std::uniform_int_distribution<int>(1, 10)(gen);
    spec.query_count = std::uniform_int_distribution<int>(1, 50)(gen);
    spec.base_seed = gen();
    spec.episode_index = static_cast<std::uint64_t>(trial);
    spec.stratified = trial % 2 == 1;
    try {
      fsb::check_feasible(ds, spec);
    } catch (const fsb::Error& e) {
      CHECK((e.code() == fsb::Errc::infeasible_spec || e.code() == fsb::Errc::infeasible_query));
      continue;
    }
    check_invariants(ds, ds, fsb::sample_episode(ds, spec), true);
  }
}

TEST_CASE("class selection is uniform") {
  const auto ds = oracle::random_dataset({10, 10, 10, 10, 10, 10}, 2, 3);
  std::vector<int> hits(6, 0);
  const int episodes = 10'000;
  for (int e = 0; e < episodes; ++e)
    for (auto c : fsb::sample_episode(ds, {2, 1, 5, static_cast<std::uint64_t>(e), 11}).class_ids)
      ++hits[c];
  const double p = 1.0 / 3.0;
  const double sd = std::sqrt(episodes * p * (1 - p));
  for (int h : hits) CHECK(std::abs(h - episodes * p) <= 3 * sd);
}

TEST_CASE("infeasible specs") {
  const auto ds = oracle::random_dataset({5, 5, 2}, 2, 3);
  CHECK_THROWS_AS(fsb::sample_episode(ds, {3, 2, 1, 0, 0}), fsb::InfeasibleSpecError);
  CHECK_THROWS_AS(fsb::sample_episode(ds, {1, 1, 1, 0, 0}), fsb::InfeasibleSpecError);
  CHECK_THROWS_AS(fsb::sample_episode(ds, {2, 0, 1, 0, 0}), fsb::InfeasibleSpecError);
  CHECK_THROWS_AS(fsb::sample_episode(ds, {2, 1, 0, 0, 0}), fsb::InfeasibleSpecError);
  try {
    fsb::sample_episode(ds, {2, 2, 7, 0, 0});
    FAIL("expected an error");
  } catch (const fsb::InfeasibleQueryError& e) {
    // Worst case: the two classes with the smallest remainders (5-2, 5-2).
    CHECK(e.max_feasible() == 6);
    CHECK(std::string(e.what()).find("6") != std::string::npos);
  }
  CHECK_NOTHROW(fsb::sample_episode(ds, {2, 2, 6, 0, 0}));
}

TEST_CASE("stratified queries are spread evenly") {
  const auto ds = oracle::random_dataset({30, 30, 30}, 2, 3);
  fsb::EpisodeSpec spec{3, 2, 10, 0, 0};
  spec.stratified = true;
  const auto ep = fsb::sample_episode(ds, spec);
  std::vector<int> per(3, 0);
  for (auto l : ep.query_labels) ++per[l];
  std::sort(per.begin(), per.end());
  CHECK(per == std::vector<int>{3, 3, 4});
}

TEST_CASE("cross sampling with the same dataset equals in-domain sampling") {
  const auto ds = msldv2_like();
  fsb::EpisodeSpec spec{3, 4, 20, 5, 1};
  CHECK(fsb::sample_cross_episode(ds, ds, spec) == fsb::sample_episode(ds, spec));
}

TEST_CASE("mismatch protocol keeps prototypes for query-absent classes") {
  const auto grid = fsb::find_protocols("cross-mismatch").front();
  const auto support = fsb::remap_labels(msldv2_like(), grid.mapping);
  const auto query = fsb::remap_labels(msid_like(), grid.mapping);
  REQUIRE(support.class_names == query.class_names);
  fsb::EpisodeSpec spec{6, 10, 50, 0, 0};
  spec.allow_query_absent_classes = true;
  std::set<std::uint32_t> seen;
  for (std::uint64_t e = 0; e < 50; ++e) {
    spec.episode_index = e;
    const auto ep = fsb::sample_cross_episode(support, query, spec);
    CHECK(ep.class_ids.size() == 6);
    check_invariants(support, query, ep, false);
    seen.insert(ep.query_labels.begin(), ep.query_labels.end());
  }
  std::set<std::uint32_t> expected;
  for (const auto& n : kMsidNames)
    expected.insert(static_cast<std::uint32_t>(
        std::find(support.class_names.begin(), support.class_names.end(), n) -
        support.class_names.begin()));
  CHECK(seen == expected);

  spec.allow_query_absent_classes = false;
  CHECK_THROWS_AS(fsb::sample_cross_episode(support, query, spec), fsb::InfeasibleSpecError);
}

TEST_CASE("binary protocol is feasible in both directions") {
  const auto grid = fsb::find_protocols("cross-binary").front();
  const auto a = fsb::remap_labels(msldv2_like(), grid.mapping);
  const auto b = fsb::remap_labels(msid_like(), grid.mapping);
  for (std::uint64_t e = 0; e < 10; ++e) {
    check_invariants(a, b, fsb::sample_cross_episode(a, b, {2, 10, 50, e, 0}), false);
    check_invariants(b, a, fsb::sample_cross_episode(b, a, {2, 10, 50, e, 0}), false);
  }
}

TEST_CASE("cross sampling needs matching class lists") {
  auto a = oracle::random_dataset({5, 5}, 2, 1);
  auto b = oracle::random_dataset({5, 5}, 2, 2);
  b.class_names = {"class0", "other"};
  try {
    fsb::sample_cross_episode(a, b, {2, 1, 2, 0, 0});
    FAIL("expected an error");
  } catch (const fsb::ProtocolError& e) {
    CHECK(std::string(e.what()).find("other") != std::string::npos);
  }
}
