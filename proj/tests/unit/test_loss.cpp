#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "l2g/errors.hpp"
#include "l2g/loss.hpp"
#include "oracles.hpp"

using l2g::AreaSet;
using l2g::Matrix;
namespace ad = l2g::ad;

namespace {

AreaSet random_areas(std::size_t scales, std::size_t regions, std::mt19937_64& rng) {
  AreaSet a(scales);
  for (std::size_t t = 0; t < scales; ++t)
    for (std::size_t m = 0; m < regions; ++m) a[t].push_back(oracle::random_matrix(2 + t, 3, rng));
  return a;
}

std::vector<std::vector<std::vector<l2g::Vec3>>> as_points(const AreaSet& a) {
  std::vector<std::vector<std::vector<l2g::Vec3>>> out(a.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    for (const auto& m : a[t]) out[t].push_back(oracle::points_of(m));
  return out;
}

}  // namespace

TEST(LocalLoss, IdenticalAreasGiveZero) {
  std::mt19937_64 rng(1);
  const auto a = random_areas(3, 4, rng);
  EXPECT_EQ(l2g::local_loss(a, a), 0.0);
}

TEST(LocalLoss, SingletonsOneApart) {
  const AreaSet target{{Matrix{{0, 0, 0}}}};
  const AreaSet recon{{Matrix{{1, 0, 0}}}};
  EXPECT_DOUBLE_EQ(l2g::local_loss(target, recon), 2.0);
}

TEST(LocalLoss, RepeatingScalesAddsUp) {
  std::mt19937_64 rng(2);
  const auto a = random_areas(1, 3, rng);
  const auto b = random_areas(1, 3, rng);
  const AreaSet a2{a[0], a[0]}, b2{b[0], b[0]};
  EXPECT_NEAR(l2g::local_loss(a2, b2), 2.0 * l2g::local_loss(a, b), 1e-14);
}

TEST(LocalLoss, MatchesOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_areas(3, 5, rng);
    const auto b = random_areas(3, 5, rng);
    const double expect = oracle::local_loss(as_points(a), as_points(b));
    EXPECT_LT(oracle::relative_error(l2g::local_loss(a, b), expect), 1e-12);
  }
}

TEST(LocalLoss, MisalignedSetsThrow) {
  std::mt19937_64 rng(4);
  const auto a = random_areas(2, 3, rng);
  EXPECT_THROW(l2g::local_loss(a, random_areas(3, 3, rng)), l2g::InvalidInput);
  EXPECT_THROW(l2g::local_loss(a, random_areas(2, 2, rng)), l2g::InvalidInput);
  EXPECT_THROW(l2g::local_loss({}, {}), l2g::InvalidInput);
}

TEST(TotalLoss, WeightedSum) {
  std::mt19937_64 rng(5);
  const auto a = random_areas(2, 3, rng);
  const auto b = random_areas(2, 3, rng);
  const auto p = oracle::random_cloud(10, rng);
  const auto q = oracle::random_cloud(12, rng);
  for (double gamma : {0.0, 0.5, 1.0, 3.0}) {
    const auto r = l2g::total_loss(p, q, a, b, {gamma, 1.0});
    EXPECT_EQ(r.total, r.local + gamma * r.global_);
    EXPECT_EQ(r.local, l2g::local_loss(a, b));
    EXPECT_EQ(r.global_, l2g::chamfer_distance(p, q));
  }
  EXPECT_EQ(l2g::total_loss(p, q, a, b, {0.0, 1.0}).total, l2g::local_loss(a, b));
  const auto global_only = l2g::total_loss(p, q, a, b, {1.0, 0.0});
  EXPECT_EQ(global_only.total, global_only.global_);
}

TEST(RecordedLoss, MatchesRecomputationFromIntermediates) {
  const auto cfg = l2g::ModelConfig::toy();
  l2g::Model model(cfg, 3);
  fixture::randomize(model, 4, 0.2);
  const auto sample = fixture::prepared(cfg, 5);
  for (const l2g::LossWeights w : {l2g::LossWeights{1.0, 1.0}, l2g::LossWeights{0.25, 1.0},
                                   l2g::LossWeights{1.0, 0.0}}) {
    ad::Tape t(model.params());
    const auto pass = l2g::forward(t, model, sample, w);
    const auto recon_areas = l2g::unpack_areas(t, pass.decoded);
    const auto recon_cloud = oracle::points_of(t.value(pass.decoded.cloud));
    const double local = oracle::local_loss(as_points(sample.targets), as_points(recon_areas));
    const double global = oracle::chamfer(sample.cloud.points, recon_cloud);
    const auto b = l2g::breakdown(t, pass, w);
    EXPECT_LT(oracle::relative_error(b.local, local), 1e-12);
    EXPECT_LT(oracle::relative_error(b.global_, global), 1e-12);
    EXPECT_LT(oracle::relative_error(b.total, w.local_weight * local + w.gamma * global), 1e-12);

    const auto direct = l2g::total_loss(sample.cloud, l2g::PointCloud::from_matrix(t.value(pass.decoded.cloud)),
                                        sample.targets, recon_areas, w);
    EXPECT_LT(oracle::relative_error(direct.total, b.total), 1e-12);
  }
}

TEST(RecordedLoss, TargetsAreTheKnnGroups) {
  const auto cfg = l2g::ModelConfig::toy();
  const auto sample = fixture::prepared(cfg, 6);
  ASSERT_EQ(sample.targets.size(), cfg.num_scales());
  for (std::size_t t = 0; t < cfg.num_scales(); ++t) {
    ASSERT_EQ(sample.targets[t].size(), cfg.num_regions);
    for (std::size_t m = 0; m < cfg.num_regions; ++m) {
      const auto& target = sample.targets[t][m];
      ASSERT_EQ(target.rows(), cfg.scales[t]);
      const auto& group = sample.pyramid.groups[m][t];
      for (std::size_t k = 0; k < group.size(); ++k)
        for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(target(k, d), sample.cloud.points[group[k]][d]);
    }
  }
}

TEST(RecordedLoss, GradientsMatchFiniteDifferences) {
  const auto cfg = fixture::micro();
  l2g::Model model(cfg, 9);
  fixture::randomize(model, 10, 0.3);
  const auto sample = fixture::prepared(cfg, 11);
  const auto report = gradcheck::check_model(model, sample, {1.0, 1.0});
  EXPECT_GT(report.checked, report.kinks);
  EXPECT_LT(report.worst, 1e-4) << report.worst_name << "[" << report.worst_index
                                << "] analytic=" << report.worst_analytic
                                << " numeric=" << report.worst_numeric;
}
