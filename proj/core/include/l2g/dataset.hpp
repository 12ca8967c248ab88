#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "l2g/geometry.hpp"

namespace l2g {

inline constexpr char kDatasetMagic[8] = {'L', '2', 'G', 'D', 'S', 'E', 'T', '\0'};
inline constexpr std::uint32_t kDatasetVersion = 1;

enum class Split : std::uint8_t { Train = 0, Test = 1 };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetItem {
  PointCloud cloud;  // cloud.id is the item id
  std::string label;
  Split split = Split::Train;
};

/// Fixed-size normalized clouds with labels.
struct Dataset {
  std::size_t points_per_cloud = 0;
  std::vector<DatasetItem> items;

  [[nodiscard]] std::size_t size() const noexcept { return items.size(); }
  [[nodiscard]] std::vector<const DatasetItem*> split(Split s) const;
};

/// Layout (little-endian):
///   magic[8] | u32 version | u64 count | u64 points_per_cloud
///   | count * points_per_cloud * 3 f64 (row-major xyz)
///   | count * (u32 id_len, id, u32 label_len, label, u8 split)
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws DataError on a bad magic, version, truncation or inconsistent sizes.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

enum class FileFormat { Off, Xyz };

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  FileFormat format = FileFormat::Off;
  std::string label;
  Split split = Split::Train;
  std::string id;  // file stem
};

/// CSV with columns path,format,label,split. An optional header line starting
/// with "path" is skipped; '#' lines are comments. Throws DataError on
/// malformed lines, empty labels, or duplicate ids.
std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

struct IngestError {
  std::filesystem::path path;
  std::string message;
};

struct IngestResult {
  Dataset dataset;
  std::vector<IngestError> errors;
};

/// Meshes are surface-sampled to n points; point files with more than n
/// points are reduced by farthest point sampling. Every cloud is normalized.
/// Per-entry failures are collected; zero valid entries raises DataError.
IngestResult ingest(const std::vector<ManifestEntry>& entries, std::size_t n_points,
                    std::uint64_t seed);

}  // namespace l2g
