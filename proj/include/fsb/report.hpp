#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fsb/evaluation.hpp"

namespace fsb {

inline constexpr std::string_view kArtifactName = "fsbench";
inline constexpr std::string_view kArtifactVersion = "1.0.0";

/// Stamped into every report so outputs can be traced to their run.
struct Provenance {
  std::string config_hash;
  std::uint64_t base_seed = 0;
};

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// printf("%.*f"); "nan" for NaN.
std::string fixed(double value, int decimals);
/// "0.624±0.006"; the half-width reads "n/a" when undefined.
std::string format_accuracy(double mean, double half_width, int decimals = 3);

/// Canonical report: stable key order, accuracies at full precision plus
/// fixed 6-decimal strings. Wall-clock time is left out so equal inputs give
/// equal bytes.
std::string summary_to_json(const RunSummary& summary, const Provenance& provenance);

/// The subset of a report needed to build plot tables.
struct ReportRecord {
  CellSpec cell;
  std::vector<std::string> class_names;
  ConfidenceInterval accuracy;
  std::vector<ClassAccuracy> per_class;
};

/// Throws FormatError on anything that is not a cell report.
ReportRecord parse_report_json(std::string_view text);

/// File stem identifying a grid cell, e.g.
/// "eval__MSLDv2__mobilenetv2_100__6way_10shot__l2n".
std::string cell_file_stem(const CellSpec& cell);

/// Writes through "<path>.tmp" and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace fsb
