#include "l2g/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "l2g/errors.hpp"
#include "l2g/mesh.hpp"
#include "l2g/params.hpp"

namespace l2g {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53;
}

double gaussian(Rng& rng) {
  // Box-Muller from two uniforms; std::normal_distribution is not portable bit-for-bit.
  const double u1 = 1.0 - double(rng() >> 11) * 0x1.0p-53;
  const double u2 = double(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform random rotation from a unit quaternion.
std::array<Vec3, 3> random_rotation(Rng& rng) {
  double q[4];
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : q) {
      v = gaussian(rng);
      norm += v * v;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

Vec3 sample_sphere(Rng& rng, const Vec3& radii) {
  Vec3 d;
  double len = 0.0;
  do {
    d = {gaussian(rng), gaussian(rng), gaussian(rng)};
    len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  } while (len < 1e-12);
  return {radii[0] * d[0] / len, radii[1] * d[1] / len, radii[2] * d[2] / len};
}

TriangleMesh box_mesh(const Vec3& half) {
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.push_back({(i & 1) ? half[0] : -half[0], (i & 2) ? half[1] : -half[1],
                             (i & 4) ? half[2] : -half[2]});
  }
  const std::uint32_t quads[6][4] = {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                     {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    mesh.faces.push_back({q[0], q[1], q[2]});
    mesh.faces.push_back({q[0], q[2], q[3]});
  }
  return mesh;
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Box: return "box";
    case ShapeKind::Plane: return "plane";
  }
  return "?";
}

PointCloud make_shape(ShapeKind kind, std::size_t n, std::uint64_t seed,
                      const SyntheticShapeOptions& options) {
  if (n == 0) throw InvalidInput("make_shape: n must be positive");
  Rng rng(seed);
  const double v = options.size_variation;
  Vec3 extent{uniform(rng, 1 - v, 1 + v), uniform(rng, 1 - v, 1 + v), uniform(rng, 1 - v, 1 + v)};

  PointCloud cloud;
  cloud.id = to_string(kind);
  switch (kind) {
    case ShapeKind::Sphere:
      for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(sample_sphere(rng, extent));
      break;
    case ShapeKind::Box:
      cloud = sample_mesh_surface(box_mesh(extent), n, rng());
      break;
    case ShapeKind::Plane:
      for (std::size_t i = 0; i < n; ++i) {
        cloud.points.push_back({uniform(rng, -extent[0], extent[0]),
                                uniform(rng, -extent[1], extent[1]), 0.0});
      }
      break;
  }
  const auto rot = options.random_rotation
                       ? random_rotation(rng)
                       : std::array<Vec3, 3>{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (auto& p : cloud.points) {
    Vec3 r{};
    for (int a = 0; a < 3; ++a) r[a] = rot[a][0] * p[0] + rot[a][1] * p[1] + rot[a][2] * p[2];
    for (int a = 0; a < 3; ++a) r[a] += options.jitter * gaussian(rng);
    p = r;
  }
  cloud.id = to_string(kind);
  return normalize(cloud);
}

std::vector<LabeledCloud> make_corpus(std::size_t train_per_class, std::size_t test_per_class,
                                      std::size_t n, std::uint64_t seed,
                                      const SyntheticShapeOptions& options) {
  std::vector<LabeledCloud> out;
  std::uint64_t ordinal = 0;
  for (const auto* split : {"train", "test"}) {
    const std::size_t count = std::string(split) == "train" ? train_per_class : test_per_class;
    for (auto kind : {ShapeKind::Sphere, ShapeKind::Box, ShapeKind::Plane}) {
      for (std::size_t k = 0; k < count; ++k) {
        LabeledCloud item;
        item.cloud = make_shape(kind, n, derive_seed(seed, ordinal++), options);
        item.label = to_string(kind);
        item.split = split;
        item.cloud.id = item.label + "_" + split + "_" + std::to_string(k);
        out.push_back(std::move(item));
      }
    }
  }
  return out;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir,
                                   const std::vector<LabeledCloud>& corpus) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write '" + manifest.string() + "'");
  out << "path,format,label,split\n";
  for (const auto& item : corpus) {
    const auto file = item.cloud.id + ".xyz";
    write_xyz(dir / file, item.cloud.points);
    out << file << ",xyz," << item.label << ',' << item.split << '\n';
  }
  return manifest;
}

}  // namespace l2g
