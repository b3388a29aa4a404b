// fsbench: few-shot evaluation over precomputed embeddings.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fsb/embedding_store.hpp"
#include "fsb/error.hpp"
#include "fsb/protocols.hpp"
#include "fsb/report.hpp"
#include "fsb/runner.hpp"
#include "fsb/synthetic.hpp"

namespace {

struct RunFlags {
  std::string config;
  std::vector<std::string> protocols;
  std::string protocol_file;
  std::vector<std::string> embeddings;
  std::vector<int> n_way;
  std::vector<int> shots;
  std::optional<int> queries;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> transforms;
  std::optional<int> jobs;
  std::string out;
  bool stratified = false;
  bool swap = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool cross) {
  cmd->add_option("--config", f.config, "JSON run config; flags override its values");
  cmd->add_option("--embeddings", f.embeddings, "DATASET=PATH to a .fseb file (repeatable)");
  if (cross) {
    cmd->add_option("--protocol", f.protocols, "protocol name (repeatable; default: all built-ins)");
    cmd->add_option("--protocol-file", f.protocol_file, "JSON file with custom protocol grids");
    cmd->add_flag("--swap", f.swap, "swap support and query of bidirectional protocols");
  } else {
    cmd->add_option("--n-way", f.n_way, "ways (default: all classes of each dataset)")->delimiter(',');
  }
  cmd->add_option("--shots", f.shots, "shots per class, e.g. 10,5,1")->delimiter(',');
  cmd->add_option("--queries", f.queries, "queries per episode (default 50)");
  cmd->add_option("--episodes", f.episodes, "episodes per cell (default 100)");
  cmd->add_option("--seed", f.seed, "base seed (default: $FSB_SEED or 0)");
  cmd->add_option("--transform", f.transforms, "un, l2n, cl2n or all (comma separated or repeated)")
      ->delimiter(',');
  cmd->add_option("--jobs", f.jobs, "parallel cells");
  cmd->add_option("--out", f.out, "output directory (default: reports)");
  cmd->add_flag("--stratified", f.stratified, "draw queries per class instead of pooled");
}

fsb::RunConfig resolve_config(const RunFlags& f) {
  fsb::RunConfig c = f.config.empty() ? fsb::RunConfig{} : fsb::load_run_config(f.config);
  const bool config_has_seed = !f.config.empty() && [&] {
    std::ifstream in(f.config);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    return j.is_object() && j.contains("seed");
  }();

  if (!f.embeddings.empty()) {
    c.embeddings.clear();
    for (const auto& spec : f.embeddings) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
        throw fsb::ConfigError("--embeddings expects DATASET=PATH, got '" + spec + "'");
      c.embeddings.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
    }
  }
  if (!f.protocols.empty()) c.protocols = f.protocols;
  if (!f.protocol_file.empty()) c.protocol_file = f.protocol_file;
  if (!f.n_way.empty()) c.n_way = f.n_way;
  if (!f.shots.empty()) c.shots = f.shots;
  if (f.queries) c.queries = f.queries;
  if (f.episodes) c.episodes = f.episodes;
  if (!f.transforms.empty()) {
    c.modes.clear();
    for (const auto& t : f.transforms) {
      if (t == "all") {
        c.modes = {fsb::TransformMode::un, fsb::TransformMode::l2n, fsb::TransformMode::cl2n};
        break;
      }
      c.modes.push_back(fsb::parse_transform(t));
    }
  }
  if (f.seed) {
    c.base_seed = *f.seed;
  } else if (!config_has_seed) {
    if (const char* env = std::getenv("FSB_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        c.base_seed = std::stoull(env, &used, 0);
        if (env[used] != '\0') throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw fsb::ConfigError(std::string("FSB_SEED is not an unsigned integer: ") + env);
      }
    }
  }
  if (f.jobs) c.jobs = *f.jobs;
  if (c.jobs < 1) throw fsb::ConfigError("--jobs must be at least 1");
  if (!f.out.empty()) c.out = f.out;
  if (f.stratified) c.stratified = true;
  if (f.swap) c.swap_direction = true;
  return c;
}

struct SynthFlags {
  std::string out;
  std::string like;
  std::string dataset = "synthetic";
  std::string backbone = "gaussian";
  int classes = 3;
  int per_class = 20;
  int dim = 16;
  double distance = 3.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

int run_synth(const SynthFlags& f) {
  fsb::GaussianClusters spec;
  std::vector<std::string> names;
  if (!f.like.empty()) {
    const auto manifest = fsb::known_manifest(f.like);
    for (const auto& [name, count] : manifest.class_counts) {
      names.push_back(name);
      spec.per_class.push_back(static_cast<int>(count));
    }
    spec.dataset_name = manifest.dataset_name;
  } else {
    spec.per_class.assign(static_cast<std::size_t>(f.classes), f.per_class);
    spec.dataset_name = f.dataset;
  }
  const int k = static_cast<int>(spec.per_class.size());
  if (f.dim < k) throw fsb::ConfigError("--dim must be at least the number of classes");
  spec.means = fsb::simplex_means(k, f.dim, f.distance);
  spec.sigma = f.sigma;
  spec.seed = f.seed;
  spec.backbone_name = f.backbone;
  auto ds = fsb::make_gaussian_clusters(spec);
  if (!names.empty()) ds.class_names = names;
  const auto bytes = fsb::write_dataset_file(ds, f.out);
  std::cout << "wrote " << f.out << " (" << ds.count() << " records, dim " << ds.dim() << ", "
            << bytes << " bytes)\n";
  return 0;
}

int report(const fsb::RunOutcome& outcome) {
  for (const auto& failure : outcome.failures) std::cerr << "failed: " << failure << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot evaluation of nearest-centroid classifiers over precomputed embeddings"};
  app.set_version_flag("--version", std::string(fsb::kArtifactVersion));
  app.require_subcommand(1);

  RunFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "in-domain N-way M-shot grid over each embedding file");
  add_run_flags(eval, eval_flags, false);

  RunFlags cross_flags;
  auto* cross = app.add_subcommand("cross", "cross-dataset protocols");
  add_run_flags(cross, cross_flags, true);

  std::string inspect_path, inspect_csv;
  auto* inspect = app.add_subcommand("inspect", "print metadata and statistics of a .fseb file");
  inspect->add_option("file", inspect_path, ".fseb file")->required();
  inspect->add_option("--csv", inspect_csv, "also export records as CSV");

  std::string plot_reports = "reports", plot_out;
  auto* plotdata = app.add_subcommand("plotdata", "tidy CSV series for plotting from cell reports");
  plotdata->add_option("--reports", plot_reports, "directory with cell reports");
  plotdata->add_option("--out", plot_out, "output directory (default: the reports directory)");

  auto* protocols = app.add_subcommand("protocols", "list built-in protocols");

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "write a synthetic Gaussian-cluster .fseb file");
  synth->add_option("--out", synth_flags.out, "output .fseb path")->required();
  synth->add_option("--like", synth_flags.like, "copy class names and counts of MSLDv1, MSLDv2 or MSID");
  synth->add_option("--dataset", synth_flags.dataset, "dataset name");
  synth->add_option("--backbone", synth_flags.backbone, "backbone name");
  synth->add_option("--classes", synth_flags.classes, "number of classes");
  synth->add_option("--per-class", synth_flags.per_class, "records per class");
  synth->add_option("--dim", synth_flags.dim, "embedding dimension");
  synth->add_option("--distance", synth_flags.distance, "pairwise distance between class means");
  synth->add_option("--sigma", synth_flags.sigma, "per-coordinate standard deviation");
  synth->add_option("--seed", synth_flags.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) return report(fsb::cmd_eval(resolve_config(eval_flags), std::cerr));
    if (*cross) return report(fsb::cmd_cross(resolve_config(cross_flags), std::cerr));
    if (*inspect) {
      fsb::cmd_inspect(inspect_path, std::cout);
      if (!inspect_csv.empty()) {
        std::ofstream out(inspect_csv);
        if (!out) throw fsb::IoError("cannot open '" + inspect_csv + "' for writing");
        fsb::export_csv(fsb::read_dataset_file(inspect_path), out);
      }
      return 0;
    }
    if (*plotdata) {
      return report(fsb::cmd_plotdata(plot_reports, plot_out.empty() ? plot_reports : plot_out,
                                      std::cerr));
    }
    if (*protocols) {
      for (const auto& g : fsb::builtin_protocols()) {
        std::cout << g.name << "  " << g.support_dataset << " -> " << g.query_dataset << "  ";
        for (const auto& c : g.cells) std::cout << c.n_way << "-way " << c.m_shot << "-shot ";
        std::cout << " (" << g.experiment << ")\n";
      }
      return 0;
    }
    if (*synth) return run_synth(synth_flags);
  } catch (const fsb::Error& e) {
    std::cerr << "error [" << fsb::to_string(e.code()) << "]: " << e.what() << "\n";
    return fsb::exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return fsb::exit_code_for(fsb::Errc::io);
  }
  return 0;
}
