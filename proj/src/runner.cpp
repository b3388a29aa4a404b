#include "fsb/runner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "fsb/embedding_store.hpp"
#include "fsb/error.hpp"
#include "fsb/evaluation.hpp"
#include "fsb/parallel.hpp"
#include "fsb/protocols.hpp"
#include "fsb/report.hpp"

namespace fsb {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<int> kDefaultShots{10, 5, 1};

struct LoadedSource {
  std::string dataset;
  std::string backbone;
  fs::path path;
  std::uint64_t content_hash = 0;
  std::shared_ptr<const EmbeddingDataset> ds;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<LoadedSource> load_sources(const RunConfig& config) {
  if (config.embeddings.empty()) throw ConfigError("no embedding files given (--embeddings)");
  std::vector<LoadedSource> out;
  for (const auto& src : config.embeddings) {
    if (!fs::exists(src.path))
      throw ConfigError("embedding file not found: " + src.path.string());
    const std::string bytes = read_text(src.path);
    LoadedSource loaded;
    loaded.dataset = src.dataset;
    loaded.path = src.path;
    loaded.content_hash = fnv1a64(bytes);
    try {
      loaded.ds = std::make_shared<const EmbeddingDataset>(decode_dataset(
          {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()}));
    } catch (const Error& e) {
      rethrow_with_context(e, src.path.string() + ": ");
    }
    loaded.backbone = loaded.ds->backbone_name;
    for (const auto& prior : out)
      if (canonical_dataset_name(prior.dataset) == canonical_dataset_name(loaded.dataset) &&
          prior.backbone == loaded.backbone)
        throw ConfigError("two embedding files for dataset '" + loaded.dataset +
                          "' and backbone '" + loaded.backbone + "'");
    out.push_back(std::move(loaded));
  }
  return out;
}

json int_list(const std::optional<std::vector<int>>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string compute_config_hash(const RunConfig& config, std::string_view command,
                                 const std::vector<LoadedSource>& sources,
                                 std::string_view protocol_text) {
  json j;
  j["command"] = std::string(command);
  j["version"] = std::string(kArtifactVersion);
  json emb = json::array();
  for (const auto& s : sources)
    emb.push_back({s.dataset, s.backbone, hex64(s.content_hash)});
  j["embeddings"] = emb;
  j["protocols"] = config.protocols;
  j["protocol_file"] = hex64(fnv1a64(protocol_text));
  j["n_way"] = int_list(config.n_way);
  j["shots"] = int_list(config.shots);
  j["queries"] = config.queries ? json(*config.queries) : json(nullptr);
  j["episodes"] = config.episodes ? json(*config.episodes) : json(nullptr);
  json modes = json::array();
  for (auto m : config.modes) modes.push_back(std::string(to_string(m)));
  j["transforms"] = modes;
  j["seed"] = config.base_seed;
  j["stratified"] = config.stratified;
  j["swap"] = config.swap_direction;
  j["level"] = config.level;
  return hex64(fnv1a64(j.dump()));
}

struct CellOutcome {
  std::optional<RunSummary> summary;
  std::optional<Errc> error_code;
  std::string error;
  std::optional<std::int64_t> episode_index;
};

struct PlannedCell {
  CellSpec spec;
  std::shared_ptr<const EmbeddingDataset> support;
  std::shared_ptr<const EmbeddingDataset> query;
  /// Set when the cell cannot run (mapping failures found while preparing).
  std::exception_ptr setup_error;
};

std::vector<CellOutcome> run_cells(const std::vector<PlannedCell>& cells, int jobs,
                                   std::ostream& log) {
  std::vector<CellOutcome> outcomes(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    auto& out = outcomes[i];
    try {
      if (cell.setup_error) std::rethrow_exception(cell.setup_error);
      out.summary = run_cell(*cell.support, *cell.query, cell.spec, 1);
    } catch (const Error& e) {
      out.error_code = e.code();
      out.error = e.what();
      out.episode_index = e.episode_index;
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& o = outcomes[i];
    log << "[" << (i + 1) << "/" << cells.size() << "] " << cell_file_stem(cells[i].spec) << "  ";
    if (o.summary)
      log << format_accuracy(o.summary->accuracy.mean, o.summary->accuracy.half_width) << "  ("
          << std::fixed << std::setprecision(2) << o.summary->duration_seconds << " s)\n"
          << std::defaultfloat;
    else
      log << "FAILED: " << o.error << "\n";
  }
  return outcomes;
}

// Writes each cell's report (or failure record); returns the first failure code.
std::optional<Errc> write_cell_reports(const std::vector<PlannedCell>& cells,
                                       const std::vector<CellOutcome>& outcomes,
                                       const Provenance& provenance, const fs::path& dir,
                                       RunOutcome& result) {
  fs::create_directories(dir);
  std::optional<Errc> first;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto stem = cell_file_stem(cells[i].spec);
    const auto& o = outcomes[i];
    if (o.summary) {
      const auto path = dir / (stem + ".json");
      write_file_atomic(path, summary_to_json(*o.summary, provenance));
      result.written.push_back(path);
      continue;
    }
    if (!first) first = o.error_code;
    json failure;
    failure["artifact"] = std::string(kArtifactName);
    failure["version"] = std::string(kArtifactVersion);
    failure["config_hash"] = provenance.config_hash;
    failure["base_seed"] = provenance.base_seed;
    failure["cell"] = stem;
    failure["kind"] = to_string(*o.error_code);
    failure["error"] = o.error;
    failure["episode_index"] = o.episode_index ? json(*o.episode_index) : json(nullptr);
    const auto path = dir / (stem + ".json.failed");
    write_file_atomic(path, failure.dump(2) + "\n");
    result.written.push_back(path);
    result.failures.push_back(stem + ": " + o.error);
  }
  return first;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string provenance_columns(const Provenance& p) {
  return std::to_string(p.base_seed) + "," + p.config_hash + "," + std::string(kArtifactVersion);
}

void write_table(const fs::path& out_dir, const std::string& name, const std::string& content,
                 bool failed, RunOutcome& result) {
  const auto path = out_dir / (failed ? name + ".failed" : name);
  write_file_atomic(path, content);
  result.written.push_back(path);
}

json config_json(const RunConfig& config) {
  json j;
  json emb = json::array();
  for (const auto& e : config.embeddings) emb.push_back({{"dataset", e.dataset}, {"path", e.path.string()}});
  j["embeddings"] = emb;
  j["protocols"] = config.protocols;
  j["protocol_file"] = config.protocol_file ? json(config.protocol_file->string()) : json(nullptr);
  j["n_way"] = int_list(config.n_way);
  j["shots"] = int_list(config.shots);
  j["queries"] = config.queries ? json(*config.queries) : json(nullptr);
  j["episodes"] = config.episodes ? json(*config.episodes) : json(nullptr);
  json modes = json::array();
  for (auto m : config.modes) modes.push_back(std::string(to_string(m)));
  j["transforms"] = modes;
  j["seed"] = config.base_seed;
  j["stratified"] = config.stratified;
  j["swap"] = config.swap_direction;
  j["level"] = config.level;
  return j;
}

void write_run_manifest(const RunConfig& config, std::string_view command,
                        const Provenance& provenance, const std::vector<PlannedCell>& cells,
                        const std::vector<CellOutcome>& outcomes, RunOutcome& result) {
  json j;
  j["artifact"] = std::string(kArtifactName);
  j["version"] = std::string(kArtifactVersion);
  j["command"] = std::string(command);
  j["config_hash"] = provenance.config_hash;
  j["base_seed"] = provenance.base_seed;
  j["config"] = config_json(config);
  json list = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i)
    list.push_back({{"cell", cell_file_stem(cells[i].spec)}, {"ok", outcomes[i].summary.has_value()}});
  j["cells"] = list;
  // The output directory and job count are left out so reruns elsewhere or
  // with more threads produce the same bytes.
  const auto path = config.out / "run.json";
  write_file_atomic(path, j.dump(2) + "\n");
  result.written.push_back(path);
}

std::vector<TransformMode> modes_of(const RunConfig& config) {
  if (config.modes.empty()) throw ConfigError("no transform selected");
  std::vector<TransformMode> modes;
  for (auto m : config.modes)
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  return modes;
}

int finish(const std::optional<Errc>& first_failure) {
  return first_failure ? exit_code_for(*first_failure) : 0;
}

}  // namespace

TransformMode reported_mode(const RunConfig& config) {
  if (config.modes.empty() ||
      std::find(config.modes.begin(), config.modes.end(), TransformMode::l2n) != config.modes.end())
    return TransformMode::l2n;
  return config.modes.front();
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"embeddings", "protocols", "protocol_file", "n_way",
                                           "shots",      "queries",   "episodes",      "transforms",
                                           "seed",       "jobs",      "out",           "stratified",
                                           "swap",       "level"};
  for (const auto& item : j.items())
    if (!known.contains(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");

  auto resolve = [&base_dir](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  RunConfig c;
  try {
    if (j.contains("embeddings")) {
      const auto& e = j.at("embeddings");
      if (e.is_object()) {
        for (const auto& [dataset, value] : e.items()) {
          if (value.is_string()) {
            c.embeddings.push_back({dataset, resolve(value.get<std::string>())});
          } else {
            for (const auto& p : value) c.embeddings.push_back({dataset, resolve(p.get<std::string>())});
          }
        }
      } else {
        for (const auto& item : e)
          c.embeddings.push_back(
              {item.at("dataset").get<std::string>(), resolve(item.at("path").get<std::string>())});
      }
    }
    if (j.contains("protocols")) {
      const auto& p = j.at("protocols");
      if (p.is_string())
        c.protocols.push_back(p.get<std::string>());
      else
        c.protocols = p.get<std::vector<std::string>>();
    }
    if (j.contains("protocol_file")) c.protocol_file = resolve(j.at("protocol_file").get<std::string>());
    if (j.contains("n_way")) c.n_way = j.at("n_way").get<std::vector<int>>();
    if (j.contains("shots")) c.shots = j.at("shots").get<std::vector<int>>();
    if (j.contains("queries")) c.queries = j.at("queries").get<int>();
    if (j.contains("episodes")) c.episodes = j.at("episodes").get<int>();
    if (j.contains("transforms")) {
      c.modes.clear();
      for (const auto& m : j.at("transforms")) c.modes.push_back(parse_transform(m.get<std::string>()));
    }
    if (j.contains("seed")) c.base_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (j.contains("out")) c.out = resolve(j.at("out").get<std::string>());
    if (j.contains("stratified")) c.stratified = j.at("stratified").get<bool>();
    if (j.contains("swap")) c.swap_direction = j.at("swap").get<bool>();
    if (j.contains("level")) c.level = j.at("level").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_run_config(read_text(path), path.parent_path());
}

RunOutcome cmd_eval(const RunConfig& config, std::ostream& log) {
  const auto sources = load_sources(config);
  const auto modes = modes_of(config);
  const auto shots = config.shots.value_or(kDefaultShots);
  const Provenance provenance{compute_config_hash(config, "eval", sources, ""), config.base_seed};

  std::vector<PlannedCell> cells;
  for (const auto& src : sources) {
    const auto ways =
        config.n_way.value_or(std::vector<int>{static_cast<int>(src.ds->class_count())});
    for (int n : ways)
      for (int m : shots)
        for (auto mode : modes) {
          PlannedCell cell;
          cell.spec.support_dataset = src.dataset;
          cell.spec.query_dataset = src.dataset;
          cell.spec.backbone = src.backbone;
          cell.spec.n_way = n;
          cell.spec.m_shot = m;
          cell.spec.query_count = config.queries.value_or(kDefaultQueryCount);
          cell.spec.episodes = config.episodes.value_or(kDefaultEpisodes);
          cell.spec.mode = mode;
          cell.spec.base_seed = config.base_seed;
          cell.spec.stratified = config.stratified;
          cell.spec.level = config.level;
          cell.support = src.ds;
          cell.query = src.ds;
          cells.push_back(std::move(cell));
        }
  }

  const auto outcomes = run_cells(cells, config.jobs, log);
  RunOutcome result;
  fs::create_directories(config.out);
  const auto first_failure =
      write_cell_reports(cells, outcomes, provenance, config.out / "cells", result);

  // Column groups: (dataset, N) by N descending then dataset, shots in config order.
  std::vector<std::pair<int, std::string>> groups;
  std::vector<std::string> backbones;
  for (const auto& c : cells) {
    std::pair<int, std::string> g{c.spec.n_way, c.spec.support_dataset};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    if (std::find(backbones.begin(), backbones.end(), c.spec.backbone) == backbones.end())
      backbones.push_back(c.spec.backbone);
  }
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  using Key = std::tuple<std::string, std::string, int, int, TransformMode>;
  std::map<Key, std::string> values;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& s = cells[i].spec;
    values[{s.backbone, s.support_dataset, s.n_way, s.m_shot, s.mode}] =
        outcomes[i].summary ? format_accuracy(outcomes[i].summary->accuracy.mean,
                                              outcomes[i].summary->accuracy.half_width)
                            : "FAILED";
  }

  for (auto mode : modes) {
    std::ostringstream csv;
    csv << "backbone";
    for (const auto& [n, dataset] : groups)
      for (int m : shots) csv << "," << csv_escape(std::to_string(n) + "-way " + dataset + " " + std::to_string(m) + "-shot");
    csv << ",transform,base_seed,config_hash,version\n";
    for (const auto& b : backbones) {
      csv << csv_escape(b);
      for (const auto& [n, dataset] : groups)
        for (int m : shots) {
          auto it = values.find({b, dataset, n, m, mode});
          csv << "," << (it == values.end() ? "" : it->second);
        }
      csv << "," << to_string(mode) << "," << provenance_columns(provenance) << "\n";
    }
    const bool failed = first_failure.has_value();
    write_table(config.out, "table1_" + std::string(to_string(mode)) + ".csv", csv.str(), failed,
                result);
    if (mode == reported_mode(config))
      write_table(config.out, "table1.csv", csv.str(), failed, result);
  }
  write_run_manifest(config, "eval", provenance, cells, outcomes, result);
  result.exit_code = finish(first_failure);
  return result;
}

RunOutcome cmd_cross(const RunConfig& config, std::ostream& log) {
  const auto sources = load_sources(config);
  const auto modes = modes_of(config);

  std::string protocol_text;
  std::vector<ProtocolGrid> grids;
  if (config.protocol_file) {
    if (!fs::exists(*config.protocol_file))
      throw ConfigError("protocol file not found: " + config.protocol_file->string());
    protocol_text = read_text(*config.protocol_file);
    for (auto& g : load_protocols_json(protocol_text))
      if (config.protocols.empty() ||
          std::find(config.protocols.begin(), config.protocols.end(), g.name) != config.protocols.end())
        grids.push_back(std::move(g));
    if (grids.empty()) throw ConfigError("no protocol in the protocol file matches the selection");
  } else if (config.protocols.empty()) {
    grids = builtin_protocols();
  } else {
    for (const auto& name : config.protocols)
      for (auto& g : find_protocols(name)) grids.push_back(std::move(g));
  }
  if (config.swap_direction)
    for (auto& g : grids)
      if (!g.in_domain() && !g.query_may_omit_classes) g = g.reversed();

  const Provenance provenance{compute_config_hash(config, "cross", sources, protocol_text),
                              config.base_seed};

  auto find_source = [&](const std::string& dataset,
                         const std::string& backbone) -> const LoadedSource* {
    for (const auto& s : sources)
      if (canonical_dataset_name(s.dataset) == canonical_dataset_name(dataset) &&
          s.backbone == backbone)
        return &s;
    return nullptr;
  };

  std::set<std::string> needed;
  for (const auto& g : grids) {
    needed.insert(canonical_dataset_name(g.support_dataset));
    needed.insert(canonical_dataset_name(g.query_dataset));
  }
  std::vector<std::string> backbones;
  for (const auto& s : sources)
    if (needed.contains(canonical_dataset_name(s.dataset)) &&
        std::find(backbones.begin(), backbones.end(), s.backbone) == backbones.end())
      backbones.push_back(s.backbone);
  if (backbones.empty()) throw ConfigError("no embeddings for the datasets the protocols use");

  struct RowInfo {
    std::string experiment;
    int query_way = 0;
  };
  std::vector<PlannedCell> cells;
  std::vector<RowInfo> rows;
  for (const auto& backbone : backbones) {
    for (const auto& g : grids) {
      const auto* support_src = find_source(g.support_dataset, backbone);
      const auto* query_src = find_source(g.query_dataset, backbone);
      for (const auto* missing : {support_src, query_src})
        if (!missing)
          throw ConfigError("protocol '" + g.name + "' needs embeddings of '" +
                            (support_src ? g.query_dataset : g.support_dataset) +
                            "' for backbone '" + backbone + "'");

      std::vector<GridCell> grid_cells;
      for (const auto& gc : g.cells) {
        if (!config.shots) {
          grid_cells.push_back(gc);
        } else {
          for (int m : *config.shots) grid_cells.push_back({gc.n_way, m});
        }
      }
      int max_shot = 1;
      for (const auto& gc : grid_cells) max_shot = std::max(max_shot, gc.m_shot);

      std::shared_ptr<const EmbeddingDataset> support_ds;
      std::shared_ptr<const EmbeddingDataset> query_ds;
      std::exception_ptr setup_error;
      int query_way = 0;
      try {
        validate_mapping(g.mapping, {manifest_of(*support_src->ds), manifest_of(*query_src->ds)},
                         max_shot + 1);
        support_ds = std::make_shared<const EmbeddingDataset>(remap_labels(*support_src->ds, g.mapping));
        query_ds = g.in_domain() ? support_ds
                                 : std::make_shared<const EmbeddingDataset>(
                                       remap_labels(*query_src->ds, g.mapping));
        for (const auto& [name, count] : manifest_of(*query_ds).class_counts)
          if (count > 0) ++query_way;
      } catch (const Error&) {
        setup_error = std::current_exception();
      }

      for (const auto& gc : grid_cells)
        for (auto mode : modes) {
          PlannedCell cell;
          cell.spec.protocol = g.name;
          cell.spec.support_dataset = g.support_dataset;
          cell.spec.query_dataset = g.query_dataset;
          cell.spec.backbone = backbone;
          cell.spec.n_way = gc.n_way;
          cell.spec.m_shot = gc.m_shot;
          cell.spec.query_count = config.queries.value_or(g.query_count);
          cell.spec.episodes = config.episodes.value_or(g.episodes);
          cell.spec.mode = mode;
          cell.spec.base_seed = config.base_seed;
          cell.spec.stratified = config.stratified;
          cell.spec.allow_query_absent_classes = g.query_may_omit_classes;
          cell.spec.level = config.level;
          cell.support = support_ds;
          cell.query = query_ds;
          cell.setup_error = setup_error;
          cells.push_back(std::move(cell));
          rows.push_back({g.experiment, query_way});
        }
    }
  }

  const auto outcomes = run_cells(cells, config.jobs, log);
  RunOutcome result;
  fs::create_directories(config.out);
  const auto first_failure =
      write_cell_reports(cells, outcomes, provenance, config.out / "cells", result);

  for (auto mode : modes) {
    std::ostringstream csv;
    csv << "experiment,protocol,support,query,support_way,query_way,backbone,shots,transform,"
           "accuracy,mean,half_width,base_seed,config_hash,version\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& s = cells[i].spec;
      if (s.mode != mode) continue;
      const auto& o = outcomes[i];
      csv << csv_escape(rows[i].experiment) << "," << s.protocol << "," << csv_escape(s.support_dataset)
          << "," << csv_escape(s.query_dataset) << "," << s.n_way << ","
          << (rows[i].query_way > 0 ? std::to_string(rows[i].query_way) : "") << ","
          << csv_escape(s.backbone) << "," << s.m_shot << "," << to_string(mode) << ",";
      if (o.summary)
        csv << format_accuracy(o.summary->accuracy.mean, o.summary->accuracy.half_width) << ","
            << fixed(o.summary->accuracy.mean, 6) << "," << fixed(o.summary->accuracy.half_width, 6);
      else
        csv << "FAILED,,";
      csv << "," << provenance_columns(provenance) << "\n";
    }
    const bool failed = first_failure.has_value();
    write_table(config.out, "table3_" + std::string(to_string(mode)) + ".csv", csv.str(), failed,
                result);
    if (mode == reported_mode(config))
      write_table(config.out, "table3.csv", csv.str(), failed, result);
  }
  write_run_manifest(config, "cross", provenance, cells, outcomes, result);
  result.exit_code = finish(first_failure);
  return result;
}

void cmd_inspect(const fs::path& path, std::ostream& out) {
  const auto ds = read_dataset_file(path);
  const auto manifest = manifest_of(ds);
  out << "file:        " << path.string() << "\n"
      << "dataset:     " << ds.dataset_name << "\n"
      << "backbone:    " << ds.backbone_name << "\n"
      << "dim:         " << ds.dim() << "\n"
      << "count:       " << ds.count() << "\n"
      << "image_size:  " << ds.image_size << "\n"
      << "preprocess:  " << ds.preprocess << "\n"
      << "classes:     " << ds.class_count() << "\n";
  for (std::size_t c = 0; c < manifest.class_counts.size(); ++c)
    out << "  " << std::setw(3) << c << "  " << std::left << std::setw(28)
        << manifest.class_counts[c].first << std::right << " " << manifest.class_counts[c].second
        << "\n";
  const Eigen::VectorXd norms = ds.vectors.cast<double>().rowwise().norm();
  out << "vector norm: min " << fixed(norms.minCoeff(), 6) << "  mean " << fixed(norms.mean(), 6)
      << "  max " << fixed(norms.maxCoeff(), 6) << "\n";
}

RunOutcome cmd_plotdata(const fs::path& report_dir, const fs::path& out_dir, std::ostream& log) {
  if (!fs::is_directory(report_dir))
    throw IoError("report directory not found: " + report_dir.string());
  std::vector<fs::path> files;
  for (const auto& dir : {report_dir, report_dir / "cells"}) {
    if (!fs::is_directory(dir)) continue;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".json" &&
          entry.path().filename() != "run.json")
        files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ReportRecord> reports;
  for (const auto& f : files) {
    try {
      reports.push_back(parse_report_json(read_text(f)));
    } catch (const FormatError& e) {
      log << "skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (reports.empty()) throw IoError("no cell reports found in " + report_dir.string());

  RunOutcome result;
  fs::create_directories(out_dir);

  // Shot scaling: one series per everything-but-shots; missing shots become gap rows.
  using SeriesKey = std::tuple<std::string, std::string, std::string, std::string, int, std::string>;
  std::map<SeriesKey, std::map<int, const ReportRecord*>> series;
  std::set<int> all_shots;
  for (const auto& r : reports) {
    const auto& c = r.cell;
    series[{c.protocol, c.support_dataset, c.query_dataset, c.backbone, c.n_way,
            std::string(to_string(c.mode))}][c.m_shot] = &r;
    all_shots.insert(c.m_shot);
  }
  std::ostringstream scaling;
  scaling << "protocol,support_dataset,query_dataset,backbone,n_way,transform,shots,mean,"
             "half_width,present\n";
  for (const auto& [key, by_shot] : series) {
    const auto& [protocol, support, query, backbone, n_way, mode] = key;
    for (int shot : all_shots) {
      scaling << csv_escape(protocol) << "," << csv_escape(support) << "," << csv_escape(query)
              << "," << csv_escape(backbone) << "," << n_way << "," << mode << "," << shot << ",";
      auto it = by_shot.find(shot);
      if (it == by_shot.end())
        scaling << ",,0\n";
      else
        scaling << fixed(it->second->accuracy.mean, 6) << ","
                << (std::isnan(it->second->accuracy.half_width)
                        ? std::string()
                        : fixed(it->second->accuracy.half_width, 6))
                << ",1\n";
    }
  }
  write_table(out_dir, "plot_shot_scaling.csv", scaling.str(), false, result);

  // Class-wise accuracy, long format: one row per (class, way) within a group.
  using ClassKey = std::tuple<std::string, std::string, int, std::string, std::string, int>;
  struct ClassRow {
    std::string support, query;
    const ClassAccuracy* acc = nullptr;
  };
  std::map<ClassKey, ClassRow> class_rows;
  for (const auto& r : reports) {
    const auto& c = r.cell;
    for (std::size_t id = 0; id < r.class_names.size(); ++id) {
      const ClassAccuracy* acc = nullptr;
      for (const auto& pc : r.per_class)
        if (pc.class_id == id) acc = &pc;
      class_rows[{c.protocol, c.backbone, c.m_shot, std::string(to_string(c.mode)),
                  r.class_names[id], c.n_way}] = {c.support_dataset, c.query_dataset, acc};
    }
  }
  std::ostringstream classwise;
  classwise << "protocol,backbone,m_shot,transform,class,n_way,support_dataset,query_dataset,"
               "mean,half_width,episodes,present\n";
  for (const auto& [key, row] : class_rows) {
    const auto& [protocol, backbone, m_shot, mode, cls, n_way] = key;
    classwise << csv_escape(protocol) << "," << csv_escape(backbone) << "," << m_shot << ","
              << mode << "," << csv_escape(cls) << "," << n_way << "," << csv_escape(row.support)
              << "," << csv_escape(row.query) << ",";
    if (row.acc)
      classwise << fixed(row.acc->mean, 6) << ","
                << (std::isnan(row.acc->half_width) ? std::string() : fixed(row.acc->half_width, 6))
                << "," << row.acc->episodes << ",1\n";
    else
      classwise << ",,0,0\n";
  }
  write_table(out_dir, "plot_classwise.csv", classwise.str(), false, result);
  log << "read " << reports.size() << " reports, wrote " << result.written.size() << " files\n";
  return result;
}

}  // namespace fsb
