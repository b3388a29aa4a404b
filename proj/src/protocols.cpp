#include "fsb/protocols.hpp"

#include <algorithm>

#include "json.hpp"

#include "fsb/error.hpp"

namespace fsb {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string> kSixClasses{"Monkeypox", "Chickenpox", "Measles",
                                           "Cowpox",    "Hand-Foot-Mouth Disease", "Healthy"};
const std::vector<std::string> kOverlapClasses{"Monkeypox", "Chickenpox", "Measles", "Healthy"};
const std::vector<std::string> kBinaryClasses{"Mpox", "Others"};

constexpr int kBuiltinShot = 10;

SourceTable identity_table(const std::vector<std::string>& names) {
  SourceTable t;
  for (const auto& n : names) t.entries.emplace_back(n, n);
  return t;
}

SourceTable binary_table(const DatasetManifest& manifest) {
  SourceTable t;
  for (const auto& [name, count] : manifest.class_counts)
    t.entries.emplace_back(name, canonical_class_name(name) == "monkeypox" ? "Mpox" : "Others");
  return t;
}

ProtocolGrid make_grid(std::string name, std::string experiment, std::string_view support,
                       std::string_view query, LabelMapping mapping, int n_way) {
  ProtocolGrid g;
  g.name = std::move(name);
  g.experiment = std::move(experiment);
  g.support_dataset = std::string(support);
  g.query_dataset = std::string(query);
  g.mapping = std::move(mapping);
  g.cells = {{n_way, kBuiltinShot}};
  return g;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("protocol field '") + key + "': " + e.what());
  }
}

ProtocolGrid grid_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("protocol entry is not a JSON object");
  for (const char* key : {"name", "support", "query", "evaluation_classes", "tables", "cells"})
    if (!j.contains(key)) throw ConfigError(std::string("protocol is missing '") + key + "'");
  ProtocolGrid g;
  g.name = get_or<std::string>(j, "name", "");
  g.experiment = get_or<std::string>(j, "experiment", g.name);
  g.support_dataset = get_or<std::string>(j, "support", "");
  g.query_dataset = get_or<std::string>(j, "query", "");
  g.episodes = get_or<int>(j, "episodes", 100);
  g.query_count = get_or<int>(j, "queries", kDefaultQueryCount);
  g.mapping.evaluation_classes = get_or<std::vector<std::string>>(j, "evaluation_classes", {});
  const auto may_omit = get_or<std::vector<std::string>>(j, "may_omit_classes", {});

  const auto& tables = j.at("tables");
  if (!tables.is_object()) throw ConfigError("protocol 'tables' must be an object");
  for (const auto& [dataset, entries] : tables.items()) {
    if (!entries.is_object())
      throw ConfigError("table for dataset '" + dataset + "' must be an object");
    SourceTable t;
    for (const auto& [source, dest] : entries.items()) {
      if (dest.is_null())
        t.entries.emplace_back(source, std::nullopt);
      else if (dest.is_string())
        t.entries.emplace_back(source, dest.get<std::string>());
      else
        throw ConfigError("mapping of '" + source + "' must be a class name or null");
    }
    t.may_omit_classes = std::any_of(may_omit.begin(), may_omit.end(), [&](const std::string& d) {
      return canonical_dataset_name(d) == canonical_dataset_name(dataset);
    });
    g.query_may_omit_classes = g.query_may_omit_classes ||
                               (t.may_omit_classes && canonical_dataset_name(dataset) ==
                                                          canonical_dataset_name(g.query_dataset));
    g.mapping.tables[canonical_dataset_name(dataset)] = std::move(t);
  }
  for (const auto& cell : j.at("cells")) {
    if (!cell.is_array() || cell.size() != 2)
      throw ConfigError("protocol cells must be [n_way, m_shot] pairs");
    g.cells.push_back({cell[0].get<int>(), cell[1].get<int>()});
  }
  const auto classes = static_cast<int>(g.mapping.evaluation_classes.size());
  for (const auto& c : g.cells)
    if (c.n_way < 2 || c.m_shot < 1 || c.n_way > classes)
      throw ConfigError("protocol '" + g.name + "' has an invalid cell (" +
                        std::to_string(c.n_way) + "-way " + std::to_string(c.m_shot) + "-shot)");
  return g;
}

}  // namespace

DatasetManifest known_manifest(std::string_view dataset_name) {
  const auto key = canonical_dataset_name(dataset_name);
  DatasetManifest m;
  m.preprocess = "resize-128";
  if (key == canonical_dataset_name(kMsldV1)) {
    m.dataset_name = std::string(kMsldV1);
    m.class_counts = {{"Monkeypox", 102}, {"Others", 126}};
  } else if (key == canonical_dataset_name(kMsid)) {
    m.dataset_name = std::string(kMsid);
    m.class_counts = {{"Monkeypox", 279}, {"Chickenpox", 107}, {"Measles", 91}, {"Healthy", 293}};
  } else if (key == canonical_dataset_name(kMsldV2)) {
    m.dataset_name = std::string(kMsldV2);
    m.class_counts = {{"Monkeypox", 284}, {"Chickenpox", 75},
                      {"Measles", 55},    {"Cowpox", 66},
                      {"Hand-Foot-Mouth Disease", 161}, {"Healthy", 114}};
  } else {
    throw ConfigError("no built-in manifest for dataset '" + std::string(dataset_name) + "'");
  }
  return m;
}

std::vector<DatasetManifest> known_manifests() {
  return {known_manifest(kMsldV1), known_manifest(kMsid), known_manifest(kMsldV2)};
}

bool ProtocolGrid::in_domain() const {
  return canonical_dataset_name(support_dataset) == canonical_dataset_name(query_dataset);
}

ProtocolGrid ProtocolGrid::reversed() const {
  ProtocolGrid g = *this;
  std::swap(g.support_dataset, g.query_dataset);
  return g;
}

std::vector<ProtocolGrid> builtin_protocols() {
  const auto msld = known_manifest(kMsldV2);
  const auto msid = known_manifest(kMsid);
  std::vector<ProtocolGrid> out;

  {
    LabelMapping m;
    m.evaluation_classes = kSixClasses;
    m.tables[canonical_dataset_name(kMsldV2)] = identity_table(kSixClasses);
    out.push_back(make_grid("msldv2-indomain", "In-domain (baseline)", kMsldV2, kMsldV2, m, 6));
  }
  {
    LabelMapping m;
    m.evaluation_classes = kOverlapClasses;
    m.tables[canonical_dataset_name(kMsid)] = identity_table(kOverlapClasses);
    out.push_back(make_grid("msid-indomain", "In-domain (baseline)", kMsid, kMsid, m, 4));
  }
  {
    LabelMapping m;
    m.evaluation_classes = kSixClasses;
    m.tables[canonical_dataset_name(kMsldV2)] = identity_table(kSixClasses);
    SourceTable q = identity_table(kOverlapClasses);
    q.may_omit_classes = true;
    m.tables[canonical_dataset_name(kMsid)] = q;
    auto g = make_grid("cross-mismatch", "Cross-dataset (mismatch)", kMsldV2, kMsid, m, 6);
    g.query_may_omit_classes = true;
    out.push_back(std::move(g));
  }
  {
    LabelMapping m;
    m.evaluation_classes = kOverlapClasses;
    SourceTable s = identity_table(kOverlapClasses);
    s.entries.emplace_back("Cowpox", std::nullopt);
    s.entries.emplace_back("Hand-Foot-Mouth Disease", std::nullopt);
    m.tables[canonical_dataset_name(kMsldV2)] = s;
    m.tables[canonical_dataset_name(kMsid)] = identity_table(kOverlapClasses);
    auto g = make_grid("cross-overlap4", "Cross-dataset (4-class overlap)", kMsldV2, kMsid, m, 4);
    out.push_back(g);
    out.push_back(g.reversed());
  }
  {
    LabelMapping m;
    m.evaluation_classes = kBinaryClasses;
    m.tables[canonical_dataset_name(kMsldV2)] = binary_table(msld);
    m.tables[canonical_dataset_name(kMsid)] = binary_table(msid);
    auto g = make_grid("cross-binary", "Cross-dataset (binary Mpox vs Others)", kMsldV2, kMsid,
                       m, 2);
    out.push_back(g);
    out.push_back(g.reversed());
  }
  return out;
}

std::vector<std::string> builtin_protocol_names() {
  std::vector<std::string> names;
  for (const auto& g : builtin_protocols())
    if (std::find(names.begin(), names.end(), g.name) == names.end()) names.push_back(g.name);
  return names;
}

std::vector<ProtocolGrid> find_protocols(std::string_view name) {
  std::vector<ProtocolGrid> out;
  for (auto& g : builtin_protocols())
    if (g.name == name) out.push_back(std::move(g));
  if (out.empty()) {
    std::string known;
    for (const auto& n : builtin_protocol_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown protocol '" + std::string(name) + "' (known: " + known + ")");
  }
  return out;
}

MappingReport validate_mapping(const LabelMapping& mapping,
                               const std::vector<DatasetManifest>& datasets,
                               std::int64_t min_per_class) {
  if (mapping.evaluation_classes.empty()) throw MappingError("mapping has no evaluation classes");
  for (std::size_t i = 0; i < mapping.evaluation_classes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (canonical_class_name(mapping.evaluation_classes[i]) ==
          canonical_class_name(mapping.evaluation_classes[j]))
        throw MappingError("evaluation class '" + mapping.evaluation_classes[i] +
                           "' is listed twice");

  MappingReport report;
  for (const auto& ds : datasets) {
    const SourceTable& table = mapping.table_for(ds.dataset_name);
    std::vector<std::string> names;
    for (const auto& [name, count] : ds.class_counts) names.push_back(name);
    const auto target = resolve_source_classes(mapping, ds.dataset_name, names);

    std::vector<std::int64_t> counts(mapping.evaluation_classes.size(), 0);
    for (std::size_t c = 0; c < names.size(); ++c)
      if (target[c] >= 0) counts[static_cast<std::size_t>(target[c])] += ds.class_counts[c].second;

    MappingReport::DatasetCounts entry{ds.dataset_name, {}};
    for (std::size_t e = 0; e < counts.size(); ++e) {
      const auto& cls = mapping.evaluation_classes[e];
      if (counts[e] == 0 && !table.may_omit_classes)
        throw MappingError("dataset '" + ds.dataset_name + "' does not cover evaluation class '" +
                           cls + "'");
      if (counts[e] > 0 && counts[e] < min_per_class)
        throw MappingError("dataset '" + ds.dataset_name + "' has " + std::to_string(counts[e]) +
                           " records of class '" + cls + "', needs at least " +
                           std::to_string(min_per_class));
      entry.evaluation_counts.emplace_back(cls, counts[e]);
    }
    report.datasets.push_back(std::move(entry));
  }
  return report;
}

MappingReport validate_mapping(const LabelMapping& mapping,
                               const std::vector<const EmbeddingDataset*>& datasets,
                               std::int64_t min_per_class) {
  std::vector<DatasetManifest> manifests;
  for (const auto* ds : datasets) manifests.push_back(manifest_of(*ds));
  return validate_mapping(mapping, manifests, min_per_class);
}

std::vector<ProtocolGrid> load_protocols_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("protocol file is not valid JSON: ") + e.what());
  }
  std::vector<ProtocolGrid> out;
  if (doc.is_object() && doc.contains("protocols")) {
    for (const auto& entry : doc.at("protocols")) out.push_back(grid_from_json(entry));
  } else {
    out.push_back(grid_from_json(doc));
  }
  if (out.empty()) throw ConfigError("protocol file defines no protocols");
  return out;
}

}  // namespace fsb
