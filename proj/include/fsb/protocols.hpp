#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsb/embedding_store.hpp"
#include "fsb/label_mapping.hpp"
#include "fsb/sampler.hpp"

namespace fsb {

/// Dataset names used by the built-in protocols.
inline constexpr std::string_view kMsldV1 = "MSLDv1";
inline constexpr std::string_view kMsldV2 = "MSLDv2";
inline constexpr std::string_view kMsid = "MSID";

/// Class inventories of the original (unaugmented) public datasets.
DatasetManifest known_manifest(std::string_view dataset_name);
std::vector<DatasetManifest> known_manifests();

struct GridCell {
  int n_way = 2;
  int m_shot = 10;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct ProtocolGrid {
  std::string name;        // addressable name, shared by both directions
  std::string experiment;  // row label in the cross-dataset table
  std::string support_dataset;
  std::string query_dataset;
  LabelMapping mapping;
  std::vector<GridCell> cells;
  int episodes = 100;
  int query_count = kDefaultQueryCount;
  /// Query dataset may lack some evaluation classes (mismatch protocol).
  bool query_may_omit_classes = false;

  bool in_domain() const;
  /// Swaps support and query roles.
  ProtocolGrid reversed() const;
};

/// The seven cross-dataset table rows: MSLDv2 and MSID in-domain baselines,
/// the 6-way -> 4-way mismatch, and both directions of the 4-class overlap and
/// binary Mpox-vs-Others protocols.
std::vector<ProtocolGrid> builtin_protocols();
std::vector<std::string> builtin_protocol_names();
/// Built-in grids with this name (two for bidirectional protocols). Throws
/// ConfigError for unknown names.
std::vector<ProtocolGrid> find_protocols(std::string_view name);

struct MappingReport {
  struct DatasetCounts {
    std::string dataset_name;
    std::vector<std::pair<std::string, std::int64_t>> evaluation_counts;
  };
  std::vector<DatasetCounts> datasets;
};

/// Checks that every dataset's table is unambiguous, covers each source class,
/// and leaves at least min_per_class records in every evaluation class the
/// dataset must supply. Throws MappingError naming the dataset and class.
MappingReport validate_mapping(const LabelMapping& mapping,
                               const std::vector<DatasetManifest>& datasets,
                               std::int64_t min_per_class = 1);
MappingReport validate_mapping(const LabelMapping& mapping,
                               const std::vector<const EmbeddingDataset*>& datasets,
                               std::int64_t min_per_class = 1);

/// Protocols from a JSON document: either a single grid object or
/// {"protocols": [...]} with fields mirroring ProtocolGrid.
std::vector<ProtocolGrid> load_protocols_json(std::string_view text);

}  // namespace fsb
