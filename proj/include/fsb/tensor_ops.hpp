#pragma once

#include <Eigen/Dense>

#include <optional>
#include <type_traits>
#include <string>
#include <string_view>

#include "fsb/error.hpp"

namespace fsb {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Embedding transform applied before prototype averaging and matching.
enum class TransformMode { un, l2n, cl2n };

std::string_view to_string(TransformMode mode) noexcept;
/// Parses "un", "l2n" or "cl2n" (case-insensitive); throws ConfigError otherwise.
TransformMode parse_transform(std::string_view text);

/// Last-layer activations for one image. Row c holds channel c flattened
/// row-major over the spatial grid, i.e. values(c, i * width + j).
template <typename Scalar>
struct FeatureMap {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  Matrix<Scalar> values;

  Eigen::Index channels() const { return values.rows(); }
};

template <typename Scalar>
FeatureMap<Scalar> make_feature_map(Eigen::Index channels, Eigen::Index height,
                                    Eigen::Index width) {
  if (channels < 1 || height < 1 || width < 1)
    throw DimensionError("feature map dimensions must be positive");
  return {height, width, Matrix<Scalar>::Zero(channels, height * width)};
}

/// Global (adaptive, output 1x1) average pooling: one mean per channel.
template <typename Scalar>
Vector<Scalar> adaptive_avg_pool(const FeatureMap<Scalar>& fm) {
  if (fm.height < 1 || fm.width < 1 || fm.values.rows() < 1 ||
      fm.values.cols() != fm.height * fm.width)
    throw DimensionError("feature map shape does not match its value buffer");
  if (!fm.values.allFinite())
    throw ValidationError("feature map contains non-finite values");
  return fm.values.rowwise().mean();
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_distance_sq(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size())
    throw DimensionError("distance between vectors of length " +
                         std::to_string(a.size()) + " and " + std::to_string(b.size()));
  return (a - b).squaredNorm();
}

namespace detail {

template <typename Scalar>
void normalize_rows(Matrix<Scalar>& m, Eigen::Index row_offset) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Scalar norm = m.row(r).norm();
    if (!(norm > Scalar(0))) throw DegenerateVectorError(row_offset + r);
    m.row(r) /= norm;
  }
}

}  // namespace detail

/// Applies `mode` to each row of `vectors` and returns a new matrix.
/// `center` is required for CL2N and ignored otherwise. `row_offset` only
/// shifts the row index reported in a DegenerateVectorError.
template <typename Scalar>
Matrix<Scalar> transform(const Matrix<Scalar>& vectors, TransformMode mode,
                         const std::type_identity_t<std::optional<Vector<Scalar>>>& center = std::nullopt,
                         Eigen::Index row_offset = 0) {
  Matrix<Scalar> out = vectors;
  switch (mode) {
    case TransformMode::un:
      break;
    case TransformMode::l2n:
      detail::normalize_rows(out, row_offset);
      break;
    case TransformMode::cl2n:
      if (!center) throw ProtocolError("CL2N transform requires a center vector");
      if (center->size() != vectors.cols())
        throw DimensionError("center has length " + std::to_string(center->size()) +
                             ", vectors have dim " + std::to_string(vectors.cols()));
      out.rowwise() -= center->transpose();
      detail::normalize_rows(out, row_offset);
      break;
  }
  return out;
}

}  // namespace fsb
