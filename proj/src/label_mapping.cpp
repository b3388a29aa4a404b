#include "fsb/label_mapping.hpp"

#include <algorithm>
#include <cctype>

#include "fsb/error.hpp"

namespace fsb {

namespace {

std::string lower_trim(std::string_view s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto first = std::find_if(s.begin(), s.end(), not_space);
  auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
  std::string out;
  if (first < last) out.assign(first, last);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string canonical_class_name(std::string_view name) {
  std::string key = lower_trim(name);
  if (key == "hfmd") return "hand-foot-mouth disease";
  if (key == "mpox") return "monkeypox";
  return key;
}

std::string canonical_dataset_name(std::string_view name) {
  std::string key;
  for (unsigned char c : name)
    if (std::isalnum(c)) key.push_back(static_cast<char>(std::tolower(c)));
  if (key == "msldv20") return "msldv2";
  if (key == "msldv10") return "msldv1";
  return key;
}

const SourceTable& LabelMapping::table_for(std::string_view dataset_name) const {
  auto it = tables.find(canonical_dataset_name(dataset_name));
  if (it == tables.end())
    throw MappingError("label mapping has no table for dataset '" +
                       std::string(dataset_name) + "'");
  return it->second;
}

std::optional<std::size_t> LabelMapping::evaluation_index(std::string_view name) const {
  const std::string key = canonical_class_name(name);
  for (std::size_t i = 0; i < evaluation_classes.size(); ++i)
    if (canonical_class_name(evaluation_classes[i]) == key) return i;
  return std::nullopt;
}

std::vector<long> resolve_source_classes(const LabelMapping& mapping,
                                         std::string_view dataset_name,
                                         const std::vector<std::string>& class_names) {
  const SourceTable& table = mapping.table_for(dataset_name);
  const std::string ds(dataset_name);
  std::vector<long> target(class_names.size(), -2);
  for (const auto& [source, dest] : table.entries) {
    const auto key = canonical_class_name(source);
    auto it = std::find_if(class_names.begin(), class_names.end(),
                           [&](const std::string& n) { return canonical_class_name(n) == key; });
    if (it == class_names.end())
      throw MappingError("mapping references unknown source class '" + source +
                         "' of dataset '" + ds + "'");
    const auto src = static_cast<std::size_t>(it - class_names.begin());
    long dst = -1;
    if (dest) {
      auto idx = mapping.evaluation_index(*dest);
      if (!idx)
        throw MappingError("dataset '" + ds + "': target '" + *dest + "' of class '" + source +
                           "' is not an evaluation class");
      dst = static_cast<long>(*idx);
    }
    if (target[src] != -2)
      throw MappingError("dataset '" + ds + "': class '" + class_names[src] +
                         "' is listed more than once (ambiguous source name)");
    target[src] = dst;
  }
  for (std::size_t c = 0; c < target.size(); ++c)
    if (target[c] == -2)
      throw MappingError("dataset '" + ds + "': class '" + class_names[c] +
                         "' is neither mapped nor dropped");
  return target;
}

LabelMapping identity_mapping(std::string_view dataset_name,
                              const std::vector<std::string>& class_names) {
  LabelMapping m;
  m.evaluation_classes = class_names;
  SourceTable& table = m.tables[canonical_dataset_name(dataset_name)];
  for (const auto& name : class_names) table.entries.emplace_back(name, name);
  return m;
}

}  // namespace fsb
