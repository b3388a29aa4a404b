#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsb/tensor_ops.hpp"

namespace fsb {

struct EmbeddingSource {
  std::string dataset;  // role name used by protocols, e.g. "MSLDv2"
  std::filesystem::path path;
};

/// Everything a run depends on. Unset optionals fall back to per-command
/// defaults (Table-1 style grid for eval, protocol grids for cross).
struct RunConfig {
  std::vector<EmbeddingSource> embeddings;
  std::vector<std::string> protocols;
  std::optional<std::filesystem::path> protocol_file;
  std::optional<std::vector<int>> n_way;
  std::optional<std::vector<int>> shots;
  std::optional<int> queries;
  std::optional<int> episodes;
  std::vector<TransformMode> modes{TransformMode::un, TransformMode::l2n, TransformMode::cl2n};
  std::uint64_t base_seed = 0;
  int jobs = 1;
  std::filesystem::path out = "reports";
  bool stratified = false;
  /// Cross only: exchange support and query for every bidirectional protocol.
  bool swap_direction = false;
  double level = 0.95;
};

/// Reads a JSON config. Keys: embeddings ({"DATASET": "path" | ["path", ...]}
/// or [{"dataset", "path"}]), protocols, protocol_file, n_way, shots,
/// queries, episodes, transforms, seed, jobs, out, stratified, swap, level.
/// Relative paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view json_text,
                           const std::filesystem::path& base_dir = {});

/// Mode reported in the unsuffixed summary tables: L2N when it was run.
TransformMode reported_mode(const RunConfig& config);

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> written;
  std::vector<std::string> failures;
};

/// In-domain grid: each embedding file x N x M x transform. Writes one JSON per
/// cell under out/cells, table1_<mode>.csv per transform and table1.csv for the
/// reported transform. Failed cells leave "<stem>.json.failed" and the tables
/// get a ".failed" suffix.
RunOutcome cmd_eval(const RunConfig& config, std::ostream& log);

/// Cross-dataset protocols (all built-ins unless config.protocols or
/// config.protocol_file select others). Writes table3_<mode>.csv and table3.csv.
RunOutcome cmd_cross(const RunConfig& config, std::ostream& log);

/// Metadata, per-class counts and vector norm statistics of one `.fseb` file.
void cmd_inspect(const std::filesystem::path& path, std::ostream& out);

/// Tidy plot series from the cell reports in report_dir (or its cells/):
/// plot_shot_scaling.csv and plot_classwise.csv, written to out_dir.
RunOutcome cmd_plotdata(const std::filesystem::path& report_dir,
                        const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace fsb
