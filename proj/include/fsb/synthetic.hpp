#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "fsb/embedding_store.hpp"

namespace fsb {

/// Isotropic Gaussian clusters, one per row of `means`.
struct GaussianClusters {
  Eigen::MatrixXd means;  // classes x dim
  std::vector<int> per_class;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::string dataset_name = "synthetic";
  std::string backbone_name = "gaussian";
};

/// Records are emitted class by class; draws come from the library Rng, so a
/// given spec yields the same bytes on every platform with the same libm.
EmbeddingDataset make_gaussian_clusters(const GaussianClusters& spec);

/// `classes` means on scaled basis vectors with every pairwise distance equal
/// to `distance`. Requires classes <= dim.
Eigen::MatrixXd simplex_means(int classes, int dim, double distance);

}  // namespace fsb
