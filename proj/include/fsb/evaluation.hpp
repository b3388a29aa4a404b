#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "fsb/embedding_store.hpp"
#include "fsb/sampler.hpp"
#include "fsb/stats.hpp"
#include "fsb/tensor_ops.hpp"

namespace fsb {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kDefaultEpisodes = 100;

/// One point of an experiment grid.
struct CellSpec {
  std::string protocol;  // empty for the in-domain evaluation grid
  std::string support_dataset;
  std::string query_dataset;
  std::string backbone;
  int n_way = 2;
  int m_shot = 1;
  int query_count = kDefaultQueryCount;
  TransformMode mode = TransformMode::l2n;
  std::uint64_t base_seed = 0;
  int episodes = kDefaultEpisodes;
  bool stratified = false;
  bool allow_query_absent_classes = false;
  double level = kDefaultConfidence;

  EpisodeSpec episode_spec(std::uint64_t episode_index) const;
};

/// Scores of one episode. Counts are indexed by dataset class id over every
/// class of the (mapped) dataset; classes outside the episode stay zero.
/// Rows of `confusion` are true classes, columns predictions.
struct EpisodeResult {
  std::int64_t episode_index = 0;
  std::vector<std::uint32_t> class_ids;
  double accuracy = 0.0;
  std::vector<std::int64_t> correct;
  std::vector<std::int64_t> total;
  CountMatrix confusion;
};

struct ClassAccuracy {
  std::uint32_t class_id = 0;
  /// Episodes in which the class drew at least one query.
  std::int64_t episodes = 0;
  double mean = 0.0;
  double half_width = 0.0;  // NaN when fewer than two episodes
  double stddev = 0.0;
};

struct AggregatedConfusion {
  CountMatrix pooled;
  std::vector<ClassAccuracy> per_class;
};

struct RunSummary {
  CellSpec cell;
  std::vector<std::string> class_names;
  std::vector<EpisodeResult> episodes;
  ConfidenceInterval accuracy;  // half_width is NaN for a single episode
  AggregatedConfusion confusion;
  double duration_seconds = 0.0;  // not serialized
};

/// Prototypes from support_ds, queries from query_ds.
EpisodeResult evaluate_episode(const EmbeddingDataset& support_ds,
                               const EmbeddingDataset& query_ds, const Episode& episode,
                               TransformMode mode);

/// Mean and t-interval of `values`; with a single value the half-width is NaN.
ConfidenceInterval summarize(std::span<const double> values, double level);

/// Element-wise sum of confusions plus a per-class accuracy interval over the
/// episodes where that class received queries.
AggregatedConfusion aggregate_confusion(std::span<const EpisodeResult> results,
                                        double level = kDefaultConfidence);

/// Runs episodes 0..cell.episodes-1 and aggregates them in index order.
/// Errors are rethrown with the failing episode index attached.
RunSummary run_cell(const EmbeddingDataset& ds, const CellSpec& cell, int jobs = 1);
RunSummary run_cell(const EmbeddingDataset& support_ds, const EmbeddingDataset& query_ds,
                    const CellSpec& cell, int jobs = 1);

}  // namespace fsb
