#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fsb {

/// Lowercased, trimmed class name with aliases resolved
/// ("hfmd" -> "hand-foot-mouth disease", "mpox" -> "monkeypox").
std::string canonical_class_name(std::string_view name);

/// Lowercased alphanumerics of a dataset name with version aliases resolved,
/// so "MSLD v2.0", "msld-v2" and "MSLDv2" all compare equal.
std::string canonical_dataset_name(std::string_view name);

/// How one source dataset's classes land on the evaluation classes.
struct SourceTable {
  /// source class name -> evaluation class name, or nullopt to drop the class.
  std::vector<std::pair<std::string, std::optional<std::string>>> entries;
  /// When set, evaluation classes without any source class in this dataset are
  /// tolerated (the query side of the 6-way -> 4-way mismatch protocol).
  bool may_omit_classes = false;
};

struct LabelMapping {
  std::vector<std::string> evaluation_classes;
  /// Keyed by canonical dataset name.
  std::map<std::string, SourceTable> tables;

  /// Throws MappingError when the dataset has no table.
  const SourceTable& table_for(std::string_view dataset_name) const;

  /// Index of `name` in evaluation_classes under canonical comparison.
  std::optional<std::size_t> evaluation_index(std::string_view name) const;
};

/// Evaluation class index of every source class, -1 where the class is
/// dropped. Throws MappingError when the dataset's table names an unknown
/// class, lists a class twice, targets a non-evaluation class, or leaves a
/// source class unmentioned.
std::vector<long> resolve_source_classes(const LabelMapping& mapping,
                                         std::string_view dataset_name,
                                         const std::vector<std::string>& class_names);

/// Every class of the inventory maps to itself, in the given order.
LabelMapping identity_mapping(std::string_view dataset_name,
                              const std::vector<std::string>& class_names);

}  // namespace fsb
