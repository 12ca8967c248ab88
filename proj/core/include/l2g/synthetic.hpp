#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2g/geometry.hpp"

namespace l2g {

enum class ShapeKind { Sphere, Box, Plane };

std::string to_string(ShapeKind kind);

struct SyntheticShapeOptions {
  double jitter = 0.01;        // std-dev of Gaussian noise added to each coordinate
  double size_variation = 0.25;  // relative spread of per-axis extents
  bool random_rotation = true;
};

/// Seeded surface samples of one primitive, normalized into the unit ball.
PointCloud make_shape(ShapeKind kind, std::size_t n, std::uint64_t seed,
                      const SyntheticShapeOptions& options = {});

struct LabeledCloud {
  PointCloud cloud;
  std::string label;
  std::string split;  // "train" or "test"
};

/// Three-class corpus (sphere, box, plane) with `train_per_class` and
/// `test_per_class` clouds each. Ids are "<label>_<split>_<k>".
std::vector<LabeledCloud> make_corpus(std::size_t train_per_class, std::size_t test_per_class,
                                      std::size_t n, std::uint64_t seed,
                                      const SyntheticShapeOptions& options = {});

/// Writes every cloud as an XYZ file under `dir` plus a manifest.csv that
/// `ingest` accepts. Returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir,
                                   const std::vector<LabeledCloud>& corpus);

}  // namespace l2g
