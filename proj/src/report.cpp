#include "fsb/report.hpp"

#include <cmath>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "fsb/error.hpp"

namespace fsb {

namespace {

using json = nlohmann::ordered_json;

json cell_json(const CellSpec& c) {
  json j;
  j["protocol"] = c.protocol;
  j["support_dataset"] = c.support_dataset;
  j["query_dataset"] = c.query_dataset;
  j["backbone"] = c.backbone;
  j["n_way"] = c.n_way;
  j["m_shot"] = c.m_shot;
  j["query_count"] = c.query_count;
  j["transform"] = std::string(to_string(c.mode));
  j["episodes"] = c.episodes;
  j["stratified"] = c.stratified;
  j["allow_query_absent_classes"] = c.allow_query_absent_classes;
  j["level"] = c.level;
  return j;
}

// NaN serializes as null.
json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_accuracy(double mean, double half_width, int decimals) {
  return fixed(mean, decimals) + "±" +
         (std::isnan(half_width) ? std::string("n/a") : fixed(half_width, decimals));
}

std::string summary_to_json(const RunSummary& s, const Provenance& provenance) {
  json j;
  j["artifact"] = std::string(kArtifactName);
  j["version"] = std::string(kArtifactVersion);
  j["config_hash"] = provenance.config_hash;
  j["base_seed"] = provenance.base_seed;
  j["cell"] = cell_json(s.cell);
  j["class_names"] = s.class_names;

  json acc;
  acc["mean"] = number_or_null(s.accuracy.mean);
  acc["half_width"] = number_or_null(s.accuracy.half_width);
  acc["stddev"] = number_or_null(s.accuracy.stddev);
  acc["n"] = s.accuracy.n;
  acc["level"] = s.accuracy.level;
  acc["mean_fixed"] = fixed(s.accuracy.mean, 6);
  acc["half_width_fixed"] = fixed(s.accuracy.half_width, 6);
  acc["formatted"] = format_accuracy(s.accuracy.mean, s.accuracy.half_width);
  j["accuracy"] = acc;

  json per_class = json::array();
  for (const auto& c : s.confusion.per_class) {
    json e;
    e["class_id"] = c.class_id;
    e["class"] = s.class_names.at(c.class_id);
    e["episodes"] = c.episodes;
    e["mean"] = number_or_null(c.mean);
    e["half_width"] = number_or_null(c.half_width);
    e["stddev"] = number_or_null(c.stddev);
    e["mean_fixed"] = fixed(c.mean, 6);
    e["half_width_fixed"] = fixed(c.half_width, 6);
    per_class.push_back(e);
  }
  j["per_class"] = per_class;

  json matrix = json::array();
  for (Eigen::Index r = 0; r < s.confusion.pooled.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.confusion.pooled.cols(); ++c)
      row.push_back(s.confusion.pooled(r, c));
    matrix.push_back(row);
  }
  j["confusion"] = {{"rows", "true class"}, {"columns", "predicted class"}, {"matrix", matrix}};

  json episodes = json::array();
  for (const auto& e : s.episodes) {
    json item;
    item["index"] = e.episode_index;
    item["accuracy"] = e.accuracy;
    item["class_ids"] = e.class_ids;
    episodes.push_back(item);
  }
  j["episodes"] = episodes;
  return j.dump(2) + "\n";
}

ReportRecord parse_report_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("cell") || !j.contains("accuracy"))
    throw FormatError("not a cell report");
  try {
    ReportRecord r;
    const auto& c = j.at("cell");
    r.cell.protocol = c.at("protocol").get<std::string>();
    r.cell.support_dataset = c.at("support_dataset").get<std::string>();
    r.cell.query_dataset = c.at("query_dataset").get<std::string>();
    r.cell.backbone = c.at("backbone").get<std::string>();
    r.cell.n_way = c.at("n_way").get<int>();
    r.cell.m_shot = c.at("m_shot").get<int>();
    r.cell.query_count = c.at("query_count").get<int>();
    r.cell.mode = parse_transform(c.at("transform").get<std::string>());
    r.cell.episodes = c.at("episodes").get<int>();
    r.cell.stratified = c.at("stratified").get<bool>();
    r.cell.allow_query_absent_classes = c.at("allow_query_absent_classes").get<bool>();
    r.cell.level = c.at("level").get<double>();
    r.cell.base_seed = j.at("base_seed").get<std::uint64_t>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto& a = j.at("accuracy");
    r.accuracy.mean = number_from(a.at("mean"));
    r.accuracy.half_width = number_from(a.at("half_width"));
    r.accuracy.stddev = number_from(a.at("stddev"));
    r.accuracy.n = a.at("n").get<std::int64_t>();
    r.accuracy.level = a.at("level").get<double>();
    for (const auto& e : j.at("per_class")) {
      ClassAccuracy ca;
      ca.class_id = e.at("class_id").get<std::uint32_t>();
      ca.episodes = e.at("episodes").get<std::int64_t>();
      ca.mean = number_from(e.at("mean"));
      ca.half_width = number_from(e.at("half_width"));
      ca.stddev = number_from(e.at("stddev"));
      r.per_class.push_back(ca);
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed cell report: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed cell report: ") + e.what());
  }
}

std::string cell_file_stem(const CellSpec& cell) {
  std::string stem = cell.protocol.empty() ? "eval" : cell.protocol;
  stem += "__" + cell.support_dataset;
  if (cell.query_dataset != cell.support_dataset) stem += "_to_" + cell.query_dataset;
  stem += "__" + cell.backbone + "__" + std::to_string(cell.n_way) + "way_" +
          std::to_string(cell.m_shot) + "shot__" + std::string(to_string(cell.mode));
  for (char& ch : stem) {
    const auto u = static_cast<unsigned char>(ch);
    if (!(std::isalnum(u) || ch == '_' || ch == '-' || ch == '.')) ch = '-';
  }
  return stem;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

}  // namespace fsb
