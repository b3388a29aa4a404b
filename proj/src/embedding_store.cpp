#include "fsb/embedding_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fsb/error.hpp"

namespace fsb {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::uint8_t, 4> kMagic{'F', 'S', 'E', 'B'};
constexpr std::size_t kHeaderBytes = 12;

const std::set<std::string> kRequiredKeys{"dataset",     "backbone",   "dim",
                                          "count",       "class_names", "image_size",
                                          "preprocess"};
constexpr const char* kChecksumKey = "crc32";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

ordered_json metadata_of(const EmbeddingDataset& ds) {
  ordered_json meta;
  meta["dataset"] = ds.dataset_name;
  meta["backbone"] = ds.backbone_name;
  meta["dim"] = ds.dim();
  meta["count"] = ds.count();
  meta["class_names"] = ds.class_names;
  meta["image_size"] = ds.image_size;
  meta["preprocess"] = ds.preprocess;
  return meta;
}

std::uint32_t checksum(std::string_view metadata, const std::uint8_t* payload,
                       std::size_t payload_size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32_z(crc, reinterpret_cast<const Bytef*>(metadata.data()), metadata.size());
  crc = crc32_z(crc, payload, payload_size);
  return static_cast<std::uint32_t>(crc);
}

std::string corruption_size_message(std::uint64_t expected, std::uint64_t actual) {
  return "expected " + std::to_string(expected) + " bytes, got " + std::to_string(actual);
}

template <typename T>
T require_field(const ordered_json& meta, const char* key) {
  const auto& v = meta.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw FormatError(std::string("metadata '") + key + "' is not a string");
    return v.get<std::string>();
  } else {
    if (!v.is_number_integer())
      throw FormatError(std::string("metadata '") + key + "' is not an integer");
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))
        throw FormatError(std::string("metadata '") + key + "' is out of range");
      return static_cast<T>(u);
    }
    auto s = v.get<std::int64_t>();
    if (s < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
        s > static_cast<std::int64_t>(std::numeric_limits<T>::max()))
      throw FormatError(std::string("metadata '") + key + "' is out of range");
    return static_cast<T>(s);
  }
}

}  // namespace

std::vector<std::vector<Eigen::Index>> EmbeddingDataset::indices_by_class() const {
  std::vector<std::vector<Eigen::Index>> out(class_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[labels[i]].push_back(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::MatrixXd EmbeddingDataset::gather(std::span<const Eigen::Index> indices) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), dim());
  for (std::size_t r = 0; r < indices.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = vectors.row(indices[r]).cast<double>();
  return out;
}

bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  if (a.dataset_name != b.dataset_name || a.backbone_name != b.backbone_name ||
      a.class_names != b.class_names || a.labels != b.labels ||
      a.image_size != b.image_size || a.preprocess != b.preprocess ||
      a.vectors.rows() != b.vectors.rows() || a.vectors.cols() != b.vectors.cols())
    return false;
  return std::memcmp(a.vectors.data(), b.vectors.data(),
                     sizeof(float) * static_cast<std::size_t>(a.vectors.size())) == 0;
}

void validate(const EmbeddingDataset& ds) {
  if (ds.dim() < 1) throw ValidationError("dim must be at least 1");
  if (ds.count() < 1) throw ValidationError("count must be at least 1");
  if (ds.labels.size() != static_cast<std::size_t>(ds.count()))
    throw ValidationError("label count " + std::to_string(ds.labels.size()) +
                          " does not match vector rows " + std::to_string(ds.count()));
  if (ds.class_names.empty()) throw ValidationError("class_names is empty");
  std::set<std::string> seen;
  for (const auto& name : ds.class_names) {
    if (name.empty()) throw ValidationError("empty class name");
    if (!seen.insert(name).second) throw ValidationError("duplicate class name '" + name + "'");
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] >= ds.class_names.size())
      throw ValidationError("record " + std::to_string(i) + " has label " +
                            std::to_string(ds.labels[i]) + " but only " +
                            std::to_string(ds.class_names.size()) + " classes exist");
  if (!ds.vectors.allFinite()) {
    for (Eigen::Index r = 0; r < ds.count(); ++r)
      if (!ds.vectors.row(r).allFinite())
        throw ValidationError("record " + std::to_string(r) + " contains NaN or infinity");
  }
  if (ds.image_size < 1) throw ValidationError("image_size must be positive");
}

std::int64_t DatasetManifest::total() const {
  std::int64_t sum = 0;
  for (const auto& [name, n] : class_counts) sum += n;
  return sum;
}

DatasetManifest manifest_of(const EmbeddingDataset& ds) {
  DatasetManifest m{ds.dataset_name, ds.backbone_name, {}, ds.image_size, ds.preprocess};
  std::vector<std::int64_t> counts(ds.class_names.size(), 0);
  for (auto label : ds.labels) ++counts[label];
  for (std::size_t c = 0; c < counts.size(); ++c)
    m.class_counts.emplace_back(ds.class_names[c], counts[c]);
  return m;
}

std::string encode_dataset(const EmbeddingDataset& ds) {
  validate(ds);
  const auto count = static_cast<std::size_t>(ds.count());
  const auto dim = static_cast<std::size_t>(ds.dim());

  std::string payload;
  payload.reserve(4 * count + 4 * count * dim);
  for (auto label : ds.labels) put_u32(payload, label);
  for (std::size_t i = 0; i < count * dim; ++i)
    put_u32(payload, std::bit_cast<std::uint32_t>(ds.vectors.data()[i]));

  ordered_json meta = metadata_of(ds);
  std::string unsigned_meta;
  try {
    unsigned_meta = meta.dump();
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("metadata is not valid UTF-8: ") + e.what());
  }
  meta[kChecksumKey] = checksum(unsigned_meta,
                                reinterpret_cast<const std::uint8_t*>(payload.data()),
                                payload.size());
  const std::string meta_text = meta.dump();
  if (meta_text.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("metadata block too large");

  std::string out;
  out.reserve(kHeaderBytes + meta_text.size() + payload.size());
  out.append(kMagic.begin(), kMagic.end());
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  out += payload;
  return out;
}

std::size_t write_dataset(const EmbeddingDataset& ds, std::ostream& out) {
  const std::string bytes = encode_dataset(ds);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed to write embedding stream");
  return bytes.size();
}

std::size_t write_dataset_file(const EmbeddingDataset& ds,
                               const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(ds);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
  return bytes.size();
}

EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  const std::size_t size = bytes.size();
  const std::size_t magic_seen = std::min<std::size_t>(size, kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen),
                  kMagic.begin()))
    throw FormatError("bad magic: not an .fseb embedding file");
  if (size < kHeaderBytes)
    throw CorruptionError("truncated header: " + corruption_size_message(kHeaderBytes, size));

  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kFormatVersion)
    throw FormatError("unsupported format version " + std::to_string(version));

  const std::uint64_t meta_len = get_u32(bytes.data() + 8);
  if (kHeaderBytes + meta_len > size)
    throw CorruptionError("truncated metadata: " +
                          corruption_size_message(kHeaderBytes + meta_len, size));

  const char* meta_begin = reinterpret_cast<const char*>(bytes.data() + kHeaderBytes);
  ordered_json meta;
  try {
    meta = ordered_json::parse(meta_begin, meta_begin + meta_len);
  } catch (const ordered_json::exception& e) {
    throw FormatError(std::string("metadata is not valid JSON: ") + e.what());
  }
  if (!meta.is_object()) throw FormatError("metadata is not a JSON object");
  for (const auto& key : kRequiredKeys)
    if (!meta.contains(key)) throw FormatError("metadata is missing key '" + key + "'");
  for (const auto& item : meta.items())
    if (!kRequiredKeys.contains(item.key()) && item.key() != kChecksumKey)
      throw FormatError("metadata has unknown key '" + item.key() + "'");

  EmbeddingDataset ds;
  ds.dataset_name = require_field<std::string>(meta, "dataset");
  ds.backbone_name = require_field<std::string>(meta, "backbone");
  ds.preprocess = require_field<std::string>(meta, "preprocess");
  ds.image_size = require_field<int>(meta, "image_size");
  const auto dim = require_field<std::uint32_t>(meta, "dim");
  const auto count = require_field<std::uint32_t>(meta, "count");
  if (dim < 1) throw ValidationError("dim must be at least 1");
  if (count < 1) throw ValidationError("count must be at least 1");
  const auto& names = meta.at("class_names");
  if (!names.is_array()) throw FormatError("metadata 'class_names' is not an array");
  for (const auto& n : names) {
    if (!n.is_string()) throw FormatError("metadata 'class_names' holds a non-string");
    ds.class_names.push_back(n.get<std::string>());
  }

  const std::uint64_t payload_len =
      4ULL * count + 4ULL * static_cast<std::uint64_t>(count) * dim;
  const std::uint64_t expected = kHeaderBytes + meta_len + payload_len;
  if (expected != size)
    throw CorruptionError((expected > size ? "truncated payload: " : "trailing bytes: ") +
                          corruption_size_message(expected, size));

  const std::uint8_t* payload = bytes.data() + kHeaderBytes + meta_len;
  if (meta.contains(kChecksumKey)) {
    const auto& stored = meta.at(kChecksumKey);
    if (!stored.is_number_unsigned() && !stored.is_number_integer())
      throw FormatError("metadata 'crc32' is not an integer");
    ordered_json unsigned_meta = meta;
    unsigned_meta.erase(kChecksumKey);
    const auto actual = checksum(unsigned_meta.dump(), payload, payload_len);
    if (!stored.is_number_unsigned() || stored.get<std::uint64_t>() != actual)
      throw CorruptionError("checksum mismatch: file content does not match its crc32");
  }

  ds.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) ds.labels[i] = get_u32(payload + 4ULL * i);
  ds.vectors.resize(count, dim);
  const std::uint8_t* vec = payload + 4ULL * count;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(count) * dim; ++i)
    ds.vectors.data()[i] = std::bit_cast<float>(get_u32(vec + 4 * i));

  validate(ds);
  return ds;
}

EmbeddingDataset read_dataset(std::istream& in) {
  std::string buffer{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("failed reading embedding stream");
  return decode_dataset({reinterpret_cast<const std::uint8_t*>(buffer.data()), buffer.size()});
}

EmbeddingDataset read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return read_dataset(in);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string() + ": ");
  }
}

void export_csv(const EmbeddingDataset& ds, std::ostream& out) {
  out << "id,label,class_name";
  for (Eigen::Index d = 0; d < ds.dim(); ++d) out << ",v" << d;
  out << '\n';
  std::array<char, 32> buf{};
  for (Eigen::Index r = 0; r < ds.count(); ++r) {
    const auto label = ds.labels[static_cast<std::size_t>(r)];
    out << r << ',' << label << ',' << ds.class_names[label];
    for (Eigen::Index d = 0; d < ds.dim(); ++d) {
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), ds.vectors(r, d));
      out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
    }
    out << '\n';
  }
}

EmbeddingDataset remap_labels(const EmbeddingDataset& ds, const LabelMapping& mapping) {
  const auto target = resolve_source_classes(mapping, ds.dataset_name, ds.class_names);

  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (target[ds.labels[i]] >= 0) kept.push_back(static_cast<Eigen::Index>(i));
  if (kept.empty())
    throw EmptyResultError("mapping leaves no records of dataset '" + ds.dataset_name + "'");

  EmbeddingDataset out;
  out.dataset_name = ds.dataset_name;
  out.backbone_name = ds.backbone_name;
  out.class_names = mapping.evaluation_classes;
  out.image_size = ds.image_size;
  out.preprocess = ds.preprocess;
  out.labels.reserve(kept.size());
  out.vectors.resize(static_cast<Eigen::Index>(kept.size()), ds.dim());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    out.labels.push_back(static_cast<std::uint32_t>(target[ds.labels[kept[r]]]));
    out.vectors.row(static_cast<Eigen::Index>(r)) = ds.vectors.row(kept[r]);
  }
  return out;
}

}  // namespace fsb
