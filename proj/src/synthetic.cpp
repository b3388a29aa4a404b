#include "fsb/synthetic.hpp"

#include <cmath>

#include "fsb/error.hpp"
#include "fsb/rng.hpp"

namespace fsb {

EmbeddingDataset make_gaussian_clusters(const GaussianClusters& spec) {
  const auto classes = spec.means.rows();
  if (classes < 1 || spec.means.cols() < 1)
    throw DimensionError("cluster means must be a non-empty matrix");
  if (static_cast<Eigen::Index>(spec.per_class.size()) != classes)
    throw DimensionError("per_class must list one count per cluster");

  Eigen::Index count = 0;
  for (int n : spec.per_class) {
    if (n < 0) throw ValidationError("negative cluster size");
    count += n;
  }

  EmbeddingDataset ds;
  ds.dataset_name = spec.dataset_name;
  ds.backbone_name = spec.backbone_name;
  ds.preprocess = "synthetic-gaussian";
  for (Eigen::Index c = 0; c < classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
  ds.vectors.resize(count, spec.means.cols());
  ds.labels.reserve(static_cast<std::size_t>(count));

  Rng rng(spec.seed);
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < classes; ++c) {
    for (int i = 0; i < spec.per_class[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (Eigen::Index d = 0; d < spec.means.cols(); ++d)
        ds.vectors(row, d) = static_cast<float>(spec.means(c, d) + spec.sigma * rng.normal());
      ds.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  validate(ds);
  return ds;
}

Eigen::MatrixXd simplex_means(int classes, int dim, double distance) {
  if (classes < 1 || classes > dim)
    throw DimensionError("simplex_means needs 1 <= classes <= dim");
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(classes, dim);
  const double scale = distance / std::sqrt(2.0);
  for (int c = 0; c < classes; ++c) means(c, c) = scale;
  return means;
}

}  // namespace fsb
