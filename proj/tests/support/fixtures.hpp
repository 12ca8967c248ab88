#pragma once

#include <random>

#include "l2g/geometry.hpp"
#include "l2g/model.hpp"
#include "l2g/synthetic.hpp"
#include "l2g/training.hpp"
#include "oracles.hpp"

namespace fixture {

/// 16-point model small enough for exhaustive finite differences.
inline l2g::ModelConfig micro() {
  l2g::ModelConfig c;
  c.num_points = 16;
  c.num_regions = 4;
  c.scales = {2, 4};
  c.feature_dim = 8;
  c.global_dim = 8;
  c.point_mlp = {8};
  return c;
}

inline l2g::PointCloud cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto c = l2g::normalize(oracle::random_cloud(n, rng));
  c.id = "cloud" + std::to_string(seed);
  return c;
}

inline l2g::PreparedCloud prepared(const l2g::ModelConfig& cfg, std::uint64_t seed) {
  return l2g::prepare(cloud(cfg.num_points, seed), cfg, "label");
}

/// Randomize every parameter (including biases) so no gradient path is trivially zero.
inline void randomize(l2g::Model& model, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& p : model.params())
    for (auto& v : p.value.values()) v = u(rng);
}

}  // namespace fixture
