#include "fsb/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fsb/error.hpp"
#include "fsb/parallel.hpp"
#include "fsb/simpleshot.hpp"

namespace fsb {

EpisodeSpec CellSpec::episode_spec(std::uint64_t episode_index) const {
  EpisodeSpec spec;
  spec.n_way = n_way;
  spec.m_shot = m_shot;
  spec.query_count = query_count;
  spec.episode_index = episode_index;
  spec.base_seed = base_seed;
  spec.stratified = stratified;
  spec.allow_query_absent_classes = allow_query_absent_classes;
  return spec;
}

EpisodeResult evaluate_episode(const EmbeddingDataset& support_ds,
                               const EmbeddingDataset& query_ds, const Episode& episode,
                               TransformMode mode) {
  std::vector<Eigen::MatrixXd> support;
  support.reserve(episode.support.size());
  for (const auto& indices : episode.support) support.push_back(support_ds.gather(indices));
  const auto protos = compute_prototypes<double>(support, mode, episode.class_ids);
  const auto predictions = classify_batch<double>(query_ds.gather(episode.query), protos, mode);

  const auto k = static_cast<Eigen::Index>(support_ds.class_count());
  EpisodeResult r;
  r.episode_index = static_cast<std::int64_t>(episode.spec.episode_index);
  r.class_ids = episode.class_ids;
  r.correct.assign(static_cast<std::size_t>(k), 0);
  r.total.assign(static_cast<std::size_t>(k), 0);
  r.confusion = CountMatrix::Zero(k, k);
  std::int64_t hits = 0;
  for (const auto& p : predictions) {
    const auto truth = episode.query_labels[static_cast<std::size_t>(p.query_index)];
    ++r.confusion(truth, p.predicted_class);
    ++r.total[truth];
    if (p.predicted_class == truth) {
      ++r.correct[truth];
      ++hits;
    }
  }
  r.accuracy = predictions.empty()
                   ? 0.0
                   : static_cast<double>(hits) / static_cast<double>(predictions.size());
  return r;
}

ConfidenceInterval summarize(std::span<const double> values, double level) {
  if (values.size() >= 2) return mean_confidence_interval(values, level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.n = static_cast<std::int64_t>(values.size());
  ci.mean = values.empty() ? std::numeric_limits<double>::quiet_NaN() : values.front();
  ci.half_width = std::numeric_limits<double>::quiet_NaN();
  ci.stddev = std::numeric_limits<double>::quiet_NaN();
  return ci;
}

AggregatedConfusion aggregate_confusion(std::span<const EpisodeResult> results, double level) {
  AggregatedConfusion out;
  if (results.empty()) return out;
  const auto k = results.front().confusion.rows();
  out.pooled = CountMatrix::Zero(k, k);
  for (const auto& r : results) {
    if (r.confusion.rows() != k || r.confusion.cols() != k ||
        r.total.size() != static_cast<std::size_t>(k))
      throw ProtocolError("episode " + std::to_string(r.episode_index) +
                          " has a different class list");
    out.pooled += r.confusion;
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    std::vector<double> accuracies;
    for (const auto& r : results) {
      const auto total = r.total[static_cast<std::size_t>(c)];
      if (total > 0)
        accuracies.push_back(static_cast<double>(r.correct[static_cast<std::size_t>(c)]) /
                             static_cast<double>(total));
    }
    if (accuracies.empty()) continue;
    const auto ci = summarize(accuracies, level);
    out.per_class.push_back(
        {static_cast<std::uint32_t>(c), ci.n, ci.mean, ci.half_width, ci.stddev});
  }
  return out;
}

RunSummary run_cell(const EmbeddingDataset& ds, const CellSpec& cell, int jobs) {
  return run_cell(ds, ds, cell, jobs);
}

RunSummary run_cell(const EmbeddingDataset& support_ds, const EmbeddingDataset& query_ds,
                    const CellSpec& cell, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  if (cell.episodes < 1) throw ConfigError("episodes must be at least 1");
  check_cross_feasible(support_ds, query_ds, cell.episode_spec(0));

  RunSummary summary;
  summary.cell = cell;
  summary.class_names = support_ds.class_names;
  summary.episodes.resize(static_cast<std::size_t>(cell.episodes));
  parallel_for(summary.episodes.size(), jobs, [&](std::size_t i) {
    try {
      const auto episode = sample_cross_episode(support_ds, query_ds, cell.episode_spec(i));
      summary.episodes[i] = evaluate_episode(support_ds, query_ds, episode, cell.mode);
    } catch (const Error& e) {
      rethrow_with_context(e, "episode " + std::to_string(i) + ": ",
                           static_cast<std::int64_t>(i));
    }
  });

  std::vector<double> accuracies;
  accuracies.reserve(summary.episodes.size());
  for (const auto& r : summary.episodes) accuracies.push_back(r.accuracy);
  summary.accuracy = summarize(accuracies, cell.level);
  summary.confusion = aggregate_confusion(summary.episodes, cell.level);
  summary.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace fsb
