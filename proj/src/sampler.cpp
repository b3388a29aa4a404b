#include "fsb/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <string>

#include "fsb/error.hpp"

namespace fsb {

namespace {

void check_spec_shape(const EpisodeSpec& spec) {
  if (spec.n_way < 2) throw InfeasibleSpecError("n_way must be at least 2");
  if (spec.m_shot < 1) throw InfeasibleSpecError("m_shot must be at least 1");
  if (spec.query_count < 1) throw InfeasibleSpecError("query_count must be at least 1");
}

std::vector<std::int64_t> class_counts(const EmbeddingDataset& ds) {
  std::vector<std::int64_t> counts(ds.class_count(), 0);
  for (auto label : ds.labels) ++counts[label];
  return counts;
}

// Per-class quota when queries are stratified: earlier classes take the
// remainder of query_count / n.
std::vector<std::int64_t> stratified_quotas(std::int64_t query_count, std::size_t n) {
  std::vector<std::int64_t> q(n, query_count / static_cast<std::int64_t>(n));
  for (std::size_t k = 0; k < static_cast<std::size_t>(query_count % static_cast<std::int64_t>(n)); ++k)
    ++q[k];
  return q;
}

// Query-side capacities of the eligible classes; checks the worst-case
// choice of n of them can still supply query_count queries.
void check_query_capacity(std::vector<std::int64_t> capacity, const EpisodeSpec& spec) {
  std::sort(capacity.begin(), capacity.end());
  const auto n = static_cast<std::size_t>(spec.n_way);
  if (spec.stratified) {
    std::vector<std::int64_t> present;
    std::copy_if(capacity.begin(), capacity.begin() + static_cast<std::ptrdiff_t>(n),
                 std::back_inserter(present), [](std::int64_t c) { return c > 0; });
    if (present.empty()) throw InfeasibleQueryError(spec.query_count, 0);
    const std::int64_t smallest = present.front();
    const std::int64_t ceil_quota =
        (spec.query_count + static_cast<std::int64_t>(present.size()) - 1) /
        static_cast<std::int64_t>(present.size());
    if (smallest < ceil_quota)
      throw InfeasibleQueryError(spec.query_count,
                                 smallest * static_cast<std::int64_t>(present.size()));
    return;
  }
  const std::int64_t worst = std::accumulate(
      capacity.begin(), capacity.begin() + static_cast<std::ptrdiff_t>(n), std::int64_t{0});
  if (worst < spec.query_count) throw InfeasibleQueryError(spec.query_count, worst);
}

std::vector<std::uint32_t> choose_classes(std::vector<std::uint32_t> eligible, int n_way,
                                          Rng& rng) {
  partial_shuffle(std::span(eligible), static_cast<std::size_t>(n_way), rng);
  eligible.resize(static_cast<std::size_t>(n_way));
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

// Queries drawn from per-class pools, either pooled or stratified; fills
// episode.query / query_labels.
void draw_queries(std::vector<std::vector<Eigen::Index>> pools,
                  const std::vector<std::uint32_t>& class_ids, const EpisodeSpec& spec,
                  Rng& rng, Episode& episode) {
  const auto q = static_cast<std::size_t>(spec.query_count);
  if (!spec.stratified) {
    std::vector<Eigen::Index> pool;
    std::vector<std::uint32_t> pool_labels;
    for (std::size_t k = 0; k < pools.size(); ++k) {
      pool.insert(pool.end(), pools[k].begin(), pools[k].end());
      pool_labels.insert(pool_labels.end(), pools[k].size(), class_ids[k]);
    }
    if (pool.size() < q)
      throw InfeasibleQueryError(spec.query_count, static_cast<std::int64_t>(pool.size()));
    // Shuffle positions so labels travel with their indices.
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    partial_shuffle(std::span(order), q, rng);
    for (std::size_t i = 0; i < q; ++i) {
      episode.query.push_back(pool[order[i]]);
      episode.query_labels.push_back(pool_labels[order[i]]);
    }
    return;
  }
  std::vector<std::size_t> present;
  for (std::size_t k = 0; k < pools.size(); ++k)
    if (!pools[k].empty()) present.push_back(k);
  if (present.empty()) throw InfeasibleQueryError(spec.query_count, 0);
  const auto quotas = stratified_quotas(spec.query_count, present.size());
  for (std::size_t j = 0; j < present.size(); ++j) {
    auto& pool = pools[present[j]];
    const auto quota = static_cast<std::size_t>(quotas[j]);
    if (pool.size() < quota)
      throw InfeasibleQueryError(
          spec.query_count, static_cast<std::int64_t>(pool.size() * present.size()));
    partial_shuffle(std::span(pool), quota, rng);
    for (std::size_t i = 0; i < quota; ++i) {
      episode.query.push_back(pool[i]);
      episode.query_labels.push_back(class_ids[present[j]]);
    }
  }
}

std::string describe_mismatch(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  std::string diff;
  auto list_missing = [&diff](const EmbeddingDataset& from, const EmbeddingDataset& in) {
    for (const auto& name : from.class_names) {
      const auto key = canonical_class_name(name);
      bool found = std::any_of(in.class_names.begin(), in.class_names.end(),
                               [&](const std::string& n) { return canonical_class_name(n) == key; });
      if (!found) diff += " '" + name + "' only in " + from.dataset_name + ";";
    }
  };
  list_missing(a, b);
  list_missing(b, a);
  if (diff.empty()) diff = " same names in a different order;";
  return diff;
}

void check_same_classes(const EmbeddingDataset& support_ds, const EmbeddingDataset& query_ds) {
  bool same = support_ds.class_count() == query_ds.class_count();
  for (std::size_t c = 0; same && c < support_ds.class_count(); ++c)
    same = canonical_class_name(support_ds.class_names[c]) ==
           canonical_class_name(query_ds.class_names[c]);
  if (!same)
    throw ProtocolError("support and query datasets have different class lists:" +
                        describe_mismatch(support_ds, query_ds));
}

std::vector<std::uint32_t> cross_eligible(const std::vector<std::int64_t>& support_counts,
                                          const std::vector<std::int64_t>& query_counts,
                                          const EpisodeSpec& spec) {
  std::vector<std::uint32_t> eligible;
  for (std::size_t c = 0; c < support_counts.size(); ++c)
    if (support_counts[c] >= spec.m_shot &&
        (spec.allow_query_absent_classes || query_counts[c] >= 1))
      eligible.push_back(static_cast<std::uint32_t>(c));
  return eligible;
}

}  // namespace

void check_feasible(const EmbeddingDataset& ds, const EpisodeSpec& spec) {
  check_spec_shape(spec);
  const auto counts = class_counts(ds);
  std::vector<std::int64_t> remainders;
  for (auto n : counts)
    if (n >= spec.m_shot + 1) remainders.push_back(n - spec.m_shot);
  if (remainders.size() < static_cast<std::size_t>(spec.n_way))
    throw InfeasibleSpecError(
        std::to_string(spec.n_way) + "-way " + std::to_string(spec.m_shot) + "-shot needs " +
        std::to_string(spec.n_way) + " classes with at least " +
        std::to_string(spec.m_shot + 1) + " records; dataset '" + ds.dataset_name +
        "' has " + std::to_string(remainders.size()));
  check_query_capacity(std::move(remainders), spec);
}

void check_cross_feasible(const EmbeddingDataset& support_ds, const EmbeddingDataset& query_ds,
                          const EpisodeSpec& spec) {
  if (&support_ds == &query_ds) return check_feasible(support_ds, spec);
  check_spec_shape(spec);
  check_same_classes(support_ds, query_ds);
  const auto support_counts = class_counts(support_ds);
  const auto query_counts = class_counts(query_ds);
  const auto eligible = cross_eligible(support_counts, query_counts, spec);
  if (eligible.size() < static_cast<std::size_t>(spec.n_way))
    throw InfeasibleSpecError(std::to_string(spec.n_way) + "-way cross-dataset episode needs " +
                              std::to_string(spec.n_way) + " eligible classes; found " +
                              std::to_string(eligible.size()));
  std::vector<std::int64_t> capacity;
  for (auto c : eligible) capacity.push_back(query_counts[c]);
  check_query_capacity(std::move(capacity), spec);
}

Episode sample_episode(const EmbeddingDataset& ds, const EpisodeSpec& spec) {
  check_feasible(ds, spec);
  Episode episode;
  episode.spec = spec;
  episode.seed = derive_seed(spec.base_seed, spec.episode_index);
  Rng rng(episode.seed);

  auto by_class = ds.indices_by_class();
  std::vector<std::uint32_t> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c].size() >= static_cast<std::size_t>(spec.m_shot + 1))
      eligible.push_back(static_cast<std::uint32_t>(c));
  episode.class_ids = choose_classes(std::move(eligible), spec.n_way, rng);

  const auto m = static_cast<std::size_t>(spec.m_shot);
  std::vector<std::vector<Eigen::Index>> pools;
  for (auto c : episode.class_ids) {
    auto& idx = by_class[c];
    partial_shuffle(std::span(idx), m, rng);
    episode.support.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<Eigen::Index> rest(idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end());
    std::sort(rest.begin(), rest.end());
    pools.push_back(std::move(rest));
  }
  draw_queries(std::move(pools), episode.class_ids, spec, rng, episode);
  return episode;
}

Episode sample_cross_episode(const EmbeddingDataset& support_ds,
                             const EmbeddingDataset& query_ds, const EpisodeSpec& spec) {
  if (&support_ds == &query_ds) return sample_episode(support_ds, spec);
  check_cross_feasible(support_ds, query_ds, spec);
  Episode episode;
  episode.spec = spec;
  episode.seed = derive_seed(spec.base_seed, spec.episode_index);
  Rng rng(episode.seed);

  auto support_by_class = support_ds.indices_by_class();
  auto query_by_class = query_ds.indices_by_class();
  const auto eligible = cross_eligible(class_counts(support_ds), class_counts(query_ds), spec);
  episode.class_ids = choose_classes(eligible, spec.n_way, rng);

  const auto m = static_cast<std::size_t>(spec.m_shot);
  std::vector<std::vector<Eigen::Index>> pools;
  for (auto c : episode.class_ids) {
    auto& idx = support_by_class[c];
    partial_shuffle(std::span(idx), m, rng);
    episode.support.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
    pools.push_back(query_by_class[c]);
  }
  draw_queries(std::move(pools), episode.class_ids, spec, rng, episode);
  return episode;
}

}  // namespace fsb
