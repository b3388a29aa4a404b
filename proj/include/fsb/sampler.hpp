#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "fsb/embedding_store.hpp"
#include "fsb/rng.hpp"

namespace fsb {

inline constexpr int kDefaultQueryCount = 50;

struct EpisodeSpec {
  int n_way = 2;
  int m_shot = 1;
  int query_count = kDefaultQueryCount;
  std::uint64_t episode_index = 0;
  std::uint64_t base_seed = 0;
  /// Draw queries per class (as evenly as possible) instead of from the
  /// pooled remainder.
  bool stratified = false;
  /// Cross-dataset only: classes with no query-side records stay eligible
  /// (their prototypes compete but they never receive queries).
  bool allow_query_absent_classes = false;

  friend bool operator==(const EpisodeSpec&, const EpisodeSpec&) = default;
};

struct Episode {
  /// Dataset label ids of the chosen classes, ascending.
  std::vector<std::uint32_t> class_ids;
  /// support[k] holds m_shot record indices of class class_ids[k].
  std::vector<std::vector<Eigen::Index>> support;
  std::vector<Eigen::Index> query;
  std::vector<std::uint32_t> query_labels;
  EpisodeSpec spec;
  std::uint64_t seed = 0;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Checks spec against the dataset once so per-episode draws cannot fail
/// midway through a run. Pools are sized for the worst-case class choice.
void check_feasible(const EmbeddingDataset& ds, const EpisodeSpec& spec);
void check_cross_feasible(const EmbeddingDataset& support_ds,
                          const EmbeddingDataset& query_ds, const EpisodeSpec& spec);

/// One N-way M-shot episode. Classes are chosen uniformly from classes with
/// at least m_shot + 1 records, supports per class without replacement, and
/// query_count queries without replacement from the pooled remainder.
Episode sample_episode(const EmbeddingDataset& ds, const EpisodeSpec& spec);

/// Support indices refer to support_ds, query indices to query_ds. Passing the
/// same object twice is equivalent to sample_episode.
Episode sample_cross_episode(const EmbeddingDataset& support_ds,
                             const EmbeddingDataset& query_ds, const EpisodeSpec& spec);

}  // namespace fsb
