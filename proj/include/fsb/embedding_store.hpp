#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsb/label_mapping.hpp"

namespace fsb {

using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr int kDefaultImageSize = 128;

/// Pooled per-image embeddings with labels and provenance. Records keep
/// extraction order.
struct EmbeddingDataset {
  std::string dataset_name;
  std::string backbone_name;
  std::vector<std::string> class_names;
  std::vector<std::uint32_t> labels;
  RowMatrixF vectors;  // count x dim
  int image_size = kDefaultImageSize;
  std::string preprocess;

  Eigen::Index count() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
  std::size_t class_count() const { return class_names.size(); }

  /// Record indices of each class, ascending.
  std::vector<std::vector<Eigen::Index>> indices_by_class() const;

  /// Rows `indices` widened to double.
  Eigen::MatrixXd gather(std::span<const Eigen::Index> indices) const;

  /// Field-for-field equality; vectors compare bitwise.
  friend bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b);
};

/// Throws ValidationError unless every dataset invariant holds.
void validate(const EmbeddingDataset& ds);

struct DatasetManifest {
  std::string dataset_name;
  std::string backbone_name;
  std::vector<std::pair<std::string, std::int64_t>> class_counts;
  int image_size = kDefaultImageSize;
  std::string preprocess;

  std::int64_t total() const;
};

DatasetManifest manifest_of(const EmbeddingDataset& ds);

/// Serialized `.fseb` bytes. Validates first; nothing is produced on failure.
std::string encode_dataset(const EmbeddingDataset& ds);
/// Writes the `.fseb` encoding and returns the number of bytes written.
std::size_t write_dataset(const EmbeddingDataset& ds, std::ostream& out);
/// Writes via a temporary file and rename.
std::size_t write_dataset_file(const EmbeddingDataset& ds,
                               const std::filesystem::path& path);

EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes);
EmbeddingDataset read_dataset(std::istream& in);
EmbeddingDataset read_dataset_file(const std::filesystem::path& path);

/// Debug export: `id,label,class_name,v0..v{dim-1}`. Not meant to be read back.
void export_csv(const EmbeddingDataset& ds, std::ostream& out);

/// Relabels against mapping.evaluation_classes, dropping records whose class
/// maps to nothing. Retained vectors and their relative order are unchanged.
EmbeddingDataset remap_labels(const EmbeddingDataset& ds, const LabelMapping& mapping);

}  // namespace fsb
