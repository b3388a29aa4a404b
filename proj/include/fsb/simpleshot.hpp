#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsb/error.hpp"
#include "fsb/tensor_ops.hpp"

namespace fsb {

/// Class centroids in the transformed embedding space.
template <typename Scalar>
struct PrototypeSet {
  std::vector<std::uint32_t> class_ids;
  Matrix<Scalar> prototypes;  // one row per class id
  TransformMode mode = TransformMode::un;
  std::optional<Vector<Scalar>> center;  // present iff mode == cl2n

  Eigen::Index dim() const { return prototypes.cols(); }
};

template <typename Scalar>
struct Prediction {
  Eigen::Index query_index = 0;
  std::uint32_t predicted_class = 0;
  Vector<Scalar> distances_sq;  // aligned with PrototypeSet::class_ids
};

/// Prototype of each class = mean of its transformed support vectors.
/// Under CL2N the center is the mean of every support vector of the episode,
/// queries never contribute to it. `class_ids` defaults to 0..N-1.
template <typename Scalar>
PrototypeSet<Scalar> compute_prototypes(std::span<const Matrix<Scalar>> support,
                                        TransformMode mode,
                                        std::vector<std::uint32_t> class_ids = {}) {
  if (support.empty()) throw ProtocolError("no classes in the support set");
  if (class_ids.empty())
    for (std::size_t k = 0; k < support.size(); ++k)
      class_ids.push_back(static_cast<std::uint32_t>(k));
  if (class_ids.size() != support.size())
    throw ProtocolError("class id list does not match the number of support classes");

  const Eigen::Index dim = support.front().cols();
  Eigen::Index total = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k].rows() < 1)
      throw ProtocolError("class " + std::to_string(class_ids[k]) + " has no support vectors");
    if (support[k].cols() != dim)
      throw DimensionError("support vectors of class " + std::to_string(class_ids[k]) +
                           " have dim " + std::to_string(support[k].cols()) + ", expected " +
                           std::to_string(dim));
    total += support[k].rows();
  }

  PrototypeSet<Scalar> out;
  out.class_ids = std::move(class_ids);
  out.mode = mode;
  if (mode == TransformMode::cl2n) {
    Vector<Scalar> sum = Vector<Scalar>::Zero(dim);
    for (const auto& s : support) sum += s.colwise().sum().transpose();
    out.center = sum / static_cast<Scalar>(total);
  }

  out.prototypes.resize(static_cast<Eigen::Index>(support.size()), dim);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const Matrix<Scalar> t = transform(support[k], mode, out.center, offset);
    out.prototypes.row(static_cast<Eigen::Index>(k)) = t.colwise().mean();
    offset += support[k].rows();
  }
  return out;
}

namespace detail {

template <typename Scalar>
void check_compatible(Eigen::Index query_dim, const PrototypeSet<Scalar>& protos,
                      TransformMode mode) {
  if (mode != protos.mode)
    throw ProtocolError(std::string("query transform ") + std::string(to_string(mode)) +
                        " does not match prototype transform " +
                        std::string(to_string(protos.mode)));
  if (query_dim != protos.dim())
    throw DimensionError("query dim " + std::to_string(query_dim) +
                         " does not match prototype dim " + std::to_string(protos.dim()));
}

// Argmin over squared distances; ties go to the smallest class id.
template <typename Scalar>
Prediction<Scalar> nearest(const Eigen::Ref<const Vector<Scalar>>& transformed_query,
                           const PrototypeSet<Scalar>& protos, Eigen::Index query_index) {
  Prediction<Scalar> p;
  p.query_index = query_index;
  p.distances_sq.resize(protos.prototypes.rows());
  Scalar best = std::numeric_limits<Scalar>::infinity();
  std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
  for (Eigen::Index k = 0; k < protos.prototypes.rows(); ++k) {
    const Scalar d =
        euclidean_distance_sq(transformed_query, protos.prototypes.row(k).transpose());
    p.distances_sq(k) = d;
    const auto id = protos.class_ids[static_cast<std::size_t>(k)];
    if (d < best || (d == best && id < best_id)) {
      best = d;
      best_id = id;
    }
  }
  p.predicted_class = best_id;
  return p;
}

}  // namespace detail

template <typename Scalar>
Prediction<Scalar> classify(const Vector<Scalar>& query, const PrototypeSet<Scalar>& protos,
                            TransformMode mode) {
  detail::check_compatible(query.size(), protos, mode);
  const Matrix<Scalar> t = transform(Matrix<Scalar>(query.transpose()), mode, protos.center);
  return detail::nearest<Scalar>(t.row(0).transpose(), protos, 0);
}

/// Row-wise classify; prediction i carries query_index i.
template <typename Scalar>
std::vector<Prediction<Scalar>> classify_batch(const Matrix<Scalar>& queries,
                                               const PrototypeSet<Scalar>& protos,
                                               TransformMode mode) {
  std::vector<Prediction<Scalar>> out;
  if (queries.rows() == 0) return out;
  detail::check_compatible(queries.cols(), protos, mode);
  const Matrix<Scalar> t = transform(queries, mode, protos.center);
  out.reserve(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    out.push_back(detail::nearest<Scalar>(t.row(r).transpose(), protos, r));
  return out;
}

}  // namespace fsb
