#include "l2g/dataset.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "l2g/errors.hpp"
#include "l2g/mesh.hpp"
#include "l2g/params.hpp"

namespace l2g {
namespace {

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put(out, std::uint32_t(s.size()));
  out.write(s.data(), std::streamsize(s.size()));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("dataset file truncated");
  return v;
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > (1u << 20)) throw DataError("dataset string length " + std::to_string(len) + " is implausible");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("dataset file truncated");
  return s;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw DataError("unknown split '" + s + "' (train|test)");
}

std::vector<const DatasetItem*> Dataset::split(Split s) const {
  std::vector<const DatasetItem*> out;
  for (const auto& item : items)
    if (item.split == s) out.push_back(&item);
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& item : data.items) {
    if (item.cloud.size() != data.points_per_cloud)
      throw InvalidInput("dataset item '" + item.cloud.id + "' has the wrong point count");
  }
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  put(out, kDatasetVersion);
  put(out, std::uint64_t(data.items.size()));
  put(out, std::uint64_t(data.points_per_cloud));
  for (const auto& item : data.items) {
    out.write(reinterpret_cast<const char*>(item.cloud.points.data()),
              std::streamsize(item.cloud.points.size() * sizeof(Vec3)));
  }
  for (const auto& item : data.items) {
    put_string(out, item.cloud.id);
    put_string(out, item.label);
    put(out, std::uint8_t(item.split));
  }
  if (!out) throw DataError("failed writing dataset");
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, data);
}

Dataset read_dataset(std::istream& in) {
  char magic[sizeof(kDatasetMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
    throw DataError("not an l2g dataset (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kDatasetVersion)
    throw DataError("unsupported dataset version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in);
  const auto n = get<std::uint64_t>(in);
  if (count > (1ull << 32) || n > (1ull << 32)) throw DataError("dataset header is implausible");

  Dataset data;
  data.points_per_cloud = n;
  data.items.resize(count);
  for (auto& item : data.items) {
    item.cloud.points.resize(n);
    in.read(reinterpret_cast<char*>(item.cloud.points.data()), std::streamsize(n * sizeof(Vec3)));
    if (!in) throw DataError("dataset payload truncated");
  }
  std::set<std::string> ids;
  for (auto& item : data.items) {
    item.cloud.id = get_string(in);
    item.label = get_string(in);
    const auto s = get<std::uint8_t>(in);
    if (s > 1) throw DataError("bad split tag in dataset");
    item.split = Split(s);
    if (!ids.insert(item.cloud.id).second) throw DataError("duplicate id '" + item.cloud.id + "'");
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (out.empty() && ids.empty() && !fields.empty() && fields[0] == "path") continue;
    const auto where = "manifest line " + std::to_string(line_no) + ": ";
    if (fields.size() != 4) throw DataError(where + "expected path,format,label,split");

    ManifestEntry e;
    e.path = std::filesystem::path(fields[0]);
    if (e.path.is_relative()) e.path = base_dir / e.path;
    std::string format = fields[1];
    for (auto& ch : format) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    if (format == "off") e.format = FileFormat::Off;
    else if (format == "xyz") e.format = FileFormat::Xyz;
    else throw DataError(where + "format must be off or xyz");
    e.label = fields[2];
    if (e.label.empty()) throw DataError(where + "empty label");
    try {
      e.split = split_from_string(fields[3]);
    } catch (const DataError& err) {
      throw DataError(where + err.what());
    }
    e.id = e.path.stem().string();
    if (!ids.insert(e.id).second) throw DataError(where + "duplicate id '" + e.id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.parent_path());
}

IngestResult ingest(const std::vector<ManifestEntry>& entries, std::size_t n_points,
                    std::uint64_t seed) {
  if (n_points == 0) throw InvalidInput("ingest: point count must be positive");
  IngestResult result;
  result.dataset.points_per_cloud = n_points;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto entry_seed = derive_seed(seed, i);
    try {
      PointCloud cloud;
      if (e.format == FileFormat::Off) {
        cloud = sample_mesh_surface(read_off(e.path), n_points, entry_seed);
      } else {
        cloud = read_xyz(e.path);
        if (cloud.size() < n_points) {
          throw DataError("has " + std::to_string(cloud.size()) + " points, need " +
                          std::to_string(n_points));
        }
        if (cloud.size() > n_points) {
          const auto keep = farthest_point_sample(cloud, n_points, entry_seed);
          PointCloud reduced;
          for (auto idx : keep) reduced.points.push_back(cloud.points[idx]);
          cloud = std::move(reduced);
        }
      }
      cloud = normalize(cloud);
      cloud.id = e.id;
      result.dataset.items.push_back({std::move(cloud), e.label, e.split});
    } catch (const Error& err) {
      result.errors.push_back({e.path, err.what()});
    }
  }
  if (result.dataset.items.empty()) {
    throw DataError("ingest: no valid entries out of " + std::to_string(entries.size()));
  }
  return result;
}

}  // namespace l2g
