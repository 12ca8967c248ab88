#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l2g/matrix.hpp"

namespace l2g {

using Vec3 = std::array<double, 3>;

inline double squared_distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct PointCloud {
  std::vector<Vec3> points;
  std::string id;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }

  /// Nx3 matrix, one point per row.
  [[nodiscard]] Matrix to_matrix() const;
  static PointCloud from_matrix(const Matrix& xyz, std::string id = {});
};

/// M centroids, each with T nested kNN groups of sizes K_1 < ... < K_T.
/// groups[m][t] lists point indices ordered by ascending distance (ties by index),
/// so group (m,t) is the prefix of group (m,t+1).
struct RegionPyramid {
  std::vector<std::size_t> centroid_indices;
  std::vector<std::vector<std::vector<std::size_t>>> groups;
  std::vector<std::size_t> scales;

  [[nodiscard]] std::size_t num_regions() const noexcept { return centroid_indices.size(); }
  [[nodiscard]] std::size_t num_scales() const noexcept { return scales.size(); }
};

/// Translate the centroid to the origin and scale into the unit ball.
/// All-coincident clouds map to the origin.
PointCloud normalize(const PointCloud& cloud);

/// Iterative farthest point sampling. The first index is drawn uniformly from
/// `seed`; every later index maximizes the distance to the selected set, ties
/// going to the lower index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m,
                                               std::uint64_t seed = 0);
/// Same as above with an explicit first index.
std::vector<std::size_t> farthest_point_sample_from(const PointCloud& cloud, std::size_t m,
                                                    std::size_t first);

enum class KnnMethod { BruteForce, Grid };

RegionPyramid knn_group(const PointCloud& cloud, std::span<const std::size_t> centroids,
                        std::span<const std::size_t> scales,
                        KnnMethod method = KnnMethod::BruteForce);

/// Symmetric Chamfer distance with unsquared Euclidean norms:
/// mean_a min_b |a-b| + mean_b min_a |a-b|.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer_distance(const PointCloud& a, const PointCloud& b);

/// Gather the coordinates of `indices` into a |indices|x3 matrix.
Matrix gather_points(const PointCloud& cloud, std::span<const std::size_t> indices);

}  // namespace l2g
