#include "l2g/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <utility>

#include "l2g/errors.hpp"

namespace l2g {
namespace {

void require_finite(const PointCloud& cloud) {
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw InvalidInput("point cloud '" + cloud.id + "' has a non-finite coordinate");
    }
  }
}

using Neighbor = std::pair<double, std::size_t>;  // (squared distance, index)

// K nearest of `center` over all points, sorted by (distance, index).
std::vector<std::size_t> knn_brute(const PointCloud& cloud, const Vec3& center, std::size_t k) {
  std::vector<Neighbor> all(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    all[i] = {squared_distance(center, cloud.points[i]), i};
  }
  std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(k), all.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = all[i].second;
  return out;
}

// Uniform voxel grid over the cloud's bounding box. Searches rings of cells
// around the query until the k-th candidate is strictly closer than anything
// outside the searched block, so results equal the brute-force path exactly.
class VoxelGrid {
 public:
  explicit VoxelGrid(const PointCloud& cloud) : cloud_(cloud) {
    lo_ = hi_ = cloud.points.front();
    for (const auto& p : cloud.points) {
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], p[a]);
        hi_[a] = std::max(hi_[a], p[a]);
      }
    }
    double extent = 0.0;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi_[a] - lo_[a]);
    const auto per_axis = std::max<std::size_t>(
        1, std::size_t(std::cbrt(double(cloud.size()) / 4.0)));
    cell_ = extent > 0.0 ? extent / double(per_axis) : 1.0;
    for (int a = 0; a < 3; ++a) {
      dims_[a] = std::size_t((hi_[a] - lo_[a]) / cell_) + 1;
    }
    cells_.resize(dims_[0] * dims_[1] * dims_[2]);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto c = cell_of(cloud.points[i]);
      cells_[flat(c)].push_back(i);
    }
  }

  std::vector<std::size_t> query(const Vec3& center, std::size_t k) const {
    const auto c = cell_of(center);
    std::vector<Neighbor> found;
    const std::size_t max_ring = std::max({dims_[0], dims_[1], dims_[2]});
    for (std::size_t ring = 0; ring <= max_ring; ++ring) {
      visit_ring(c, ring, [&](std::size_t idx) {
        found.emplace_back(squared_distance(center, cloud_.points[idx]), idx);
      });
      if (found.size() >= k) {
        std::nth_element(found.begin(), found.begin() + std::ptrdiff_t(k - 1), found.end());
        const double kth = found[k - 1].first;
        // Unvisited points lie at least this far from the query.
        const double bound = margin(center, c, ring);
        if (kth < bound * bound) break;
      }
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = found[i].second;
    return out;
  }

 private:
  using Cell = std::array<std::ptrdiff_t, 3>;

  Cell cell_of(const Vec3& p) const {
    Cell c{};
    for (int a = 0; a < 3; ++a) {
      auto v = std::ptrdiff_t((p[a] - lo_[a]) / cell_);
      c[a] = std::clamp<std::ptrdiff_t>(v, 0, std::ptrdiff_t(dims_[a]) - 1);
    }
    return c;
  }

  std::size_t flat(const Cell& c) const {
    return (std::size_t(c[0]) * dims_[1] + std::size_t(c[1])) * dims_[2] + std::size_t(c[2]);
  }

  // Distance from `p` to the boundary of the block of cells within `ring` of `c`.
  double margin(const Vec3& p, const Cell& c, std::size_t ring) const {
    double m = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const auto r = std::ptrdiff_t(ring);
      if (c[a] - r > 0) m = std::min(m, p[a] - (lo_[a] + double(c[a] - r) * cell_));
      if (c[a] + r < std::ptrdiff_t(dims_[a]) - 1)
        m = std::min(m, (lo_[a] + double(c[a] + r + 1) * cell_) - p[a]);
    }
    return std::max(m, 0.0);
  }

  template <class F>
  void visit_ring(const Cell& c, std::size_t ring, F&& f) const {
    const auto r = std::ptrdiff_t(ring);
    for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
      for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
        for (std::ptrdiff_t dz = -r; dz <= r; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          const Cell n{c[0] + dx, c[1] + dy, c[2] + dz};
          bool inside = true;
          for (int a = 0; a < 3; ++a)
            inside = inside && n[a] >= 0 && n[a] < std::ptrdiff_t(dims_[a]);
          if (!inside) continue;
          for (auto idx : cells_[flat(n)]) f(idx);
        }
      }
    }
  }

  const PointCloud& cloud_;
  Vec3 lo_{}, hi_{};
  double cell_ = 1.0;
  std::array<std::size_t, 3> dims_{};
  std::vector<std::vector<std::size_t>> cells_;
};

double directed_mean_min(std::span<const Vec3> from, std::span<const Vec3> to) {
  double total = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, squared_distance(p, q));
    total += std::sqrt(best);
  }
  return total / double(from.size());
}

}  // namespace

Matrix PointCloud::to_matrix() const {
  Matrix m(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t a = 0; a < 3; ++a) m(i, a) = points[i][a];
  return m;
}

PointCloud PointCloud::from_matrix(const Matrix& xyz, std::string id) {
  if (xyz.cols() != 3 && !xyz.empty()) throw ShapeError("point matrix must have 3 columns");
  PointCloud cloud;
  cloud.id = std::move(id);
  cloud.points.resize(xyz.rows());
  for (std::size_t i = 0; i < xyz.rows(); ++i)
    cloud.points[i] = {xyz(i, 0), xyz(i, 1), xyz(i, 2)};
  return cloud;
}

PointCloud normalize(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("normalize: empty point cloud");
  require_finite(cloud);
  Vec3 mean{0.0, 0.0, 0.0};
  for (const auto& p : cloud.points)
    for (int a = 0; a < 3; ++a) mean[a] += p[a];
  for (int a = 0; a < 3; ++a) mean[a] /= double(cloud.size());

  PointCloud out;
  out.id = cloud.id;
  out.points.reserve(cloud.size());
  double max_norm = 0.0;
  for (const auto& p : cloud.points) {
    Vec3 q{p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]};
    max_norm = std::max(max_norm, std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]));
    out.points.push_back(q);
  }
  if (max_norm == 0.0) {
    for (auto& q : out.points) q = {0.0, 0.0, 0.0};
    return out;
  }
  for (auto& q : out.points)
    for (int a = 0; a < 3; ++a) q[a] /= max_norm;
  return out;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m,
                                               std::uint64_t seed) {
  if (cloud.empty()) throw InvalidInput("farthest_point_sample: empty point cloud");
  std::mt19937_64 rng(seed);
  return farthest_point_sample_from(cloud, m, std::size_t(rng() % cloud.size()));
}

std::vector<std::size_t> farthest_point_sample_from(const PointCloud& cloud, std::size_t m,
                                                    std::size_t first) {
  const std::size_t n = cloud.size();
  if (m == 0 || m > n) {
    std::ostringstream os;
    os << "farthest_point_sample: requested " << m << " of " << n << " points";
    throw InvalidInput(os.str());
  }
  if (first >= n) throw InvalidInput("farthest_point_sample: first index out of range");

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> selected;
  selected.reserve(m);
  std::size_t last = first;
  for (;;) {
    selected.push_back(last);
    taken[last] = true;
    if (selected.size() == m) break;
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(min_dist[i], squared_distance(cloud.points[i], cloud.points[last]));
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    last = best;
  }
  return selected;
}

RegionPyramid knn_group(const PointCloud& cloud, std::span<const std::size_t> centroids,
                        std::span<const std::size_t> scales, KnnMethod method) {
  if (scales.empty()) throw InvalidInput("knn_group: no scales given");
  if (scales.front() == 0) throw InvalidInput("knn_group: scale sizes must be positive");
  for (std::size_t t = 1; t < scales.size(); ++t) {
    if (scales[t] <= scales[t - 1])
      throw InvalidInput("knn_group: scales must be strictly increasing");
  }
  const std::size_t k_max = scales.back();
  if (k_max > cloud.size()) {
    std::ostringstream os;
    os << "knn_group: largest scale " << k_max << " exceeds cloud size " << cloud.size();
    throw InvalidInput(os.str());
  }
  for (auto c : centroids) {
    if (c >= cloud.size()) throw InvalidInput("knn_group: centroid index out of range");
  }

  RegionPyramid pyramid;
  pyramid.centroid_indices.assign(centroids.begin(), centroids.end());
  pyramid.scales.assign(scales.begin(), scales.end());
  pyramid.groups.resize(centroids.size());

  std::optional<VoxelGrid> grid;
  if (method == KnnMethod::Grid && !cloud.empty()) grid.emplace(cloud);

  for (std::size_t m = 0; m < centroids.size(); ++m) {
    const Vec3& center = cloud.points[centroids[m]];
    const auto nearest = grid ? grid->query(center, k_max) : knn_brute(cloud, center, k_max);
    auto& per_scale = pyramid.groups[m];
    per_scale.reserve(scales.size());
    for (auto k : scales) per_scale.emplace_back(nearest.begin(), nearest.begin() + std::ptrdiff_t(k));
  }
  return pyramid;
}

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw InvalidInput("chamfer_distance: empty point set");
  return directed_mean_min(a, b) + directed_mean_min(b, a);
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  return chamfer_distance(std::span<const Vec3>(a.points), std::span<const Vec3>(b.points));
}

Matrix gather_points(const PointCloud& cloud, std::span<const std::size_t> indices) {
  Matrix m(indices.size(), 3);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& p = cloud.points.at(indices[i]);
    m(i, 0) = p[0];
    m(i, 1) = p[1];
    m(i, 2) = p[2];
  }
  return m;
}

}  // namespace l2g
