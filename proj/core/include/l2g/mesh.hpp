#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "l2g/geometry.hpp"

namespace l2g {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) noexcept;

/// Area-weighted face choice followed by uniform barycentric coordinates.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// ASCII OFF. Polygons with more than three vertices are fan-triangulated from
/// their first vertex.
TriangleMesh read_off(std::istream& in);
TriangleMesh read_off(const std::filesystem::path& path);

/// One "x y z" triple per line; blank lines and '#' comments are skipped.
PointCloud read_xyz(std::istream& in);
PointCloud read_xyz(const std::filesystem::path& path);

void write_xyz(std::ostream& out, std::span<const Vec3> points);
void write_xyz(const std::filesystem::path& path, std::span<const Vec3> points);

}  // namespace l2g
