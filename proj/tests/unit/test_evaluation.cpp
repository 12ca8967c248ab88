#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "l2g/errors.hpp"
#include "l2g/evaluation.hpp"

using l2g::FeatureTable;
using l2g::Matrix;

namespace {

FeatureTable table_of(const Matrix& features, std::vector<std::string> labels) {
  FeatureTable t;
  t.features = features;
  t.labels = std::move(labels);
  for (std::size_t i = 0; i < t.labels.size(); ++i) t.ids.push_back("s" + std::to_string(i));
  return t;
}

FeatureTable blobs(std::size_t per_class, std::size_t classes, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Matrix f(per_class * classes, 5);
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto row = c * per_class + i;
      for (std::size_t d = 0; d < 5; ++d) f(row, d) = (d == c ? 4.0 : 0.0) + noise(rng);
      labels.push_back("class" + std::to_string(c));
    }
  }
  return table_of(f, labels);
}

}  // namespace

TEST(Svm, SeparableBlobsAreClassifiedPerfectly) {
  const auto train = blobs(30, 3, 0.3, 1);
  const auto test = blobs(10, 3, 0.3, 2);
  const auto svm = l2g::train_linear_svm(train);
  EXPECT_EQ(svm.num_classifiers(), 3u);
  EXPECT_EQ(svm.weights().rows(), 3u);
  EXPECT_EQ(svm.weights().cols(), 6u);
  const auto report = l2g::evaluate_classifier(svm, test);
  EXPECT_EQ(report.accuracy, 1.0);
  ASSERT_EQ(report.classes.size(), 3u);
  for (const auto& c : report.classes) {
    EXPECT_EQ(c.support, 10u);
    EXPECT_EQ(c.correct, 10u);
  }
}

TEST(Svm, IdenticalFeaturesPredictTheMajority) {
  const auto t = table_of(Matrix(8, 3, 0.5), {"a", "a", "a", "a", "a", "b", "b", "c"});
  const auto svm = l2g::train_linear_svm(t);
  const auto report = l2g::evaluate_classifier(svm, t);
  EXPECT_DOUBLE_EQ(report.accuracy, 5.0 / 8.0);
  for (const auto& p : report.predictions) EXPECT_EQ(p, "a");
}

TEST(Svm, SingleClassThrows) {
  EXPECT_THROW(l2g::train_linear_svm(table_of(Matrix(3, 2, 1.0), {"a", "a", "a"})), l2g::InvalidInput);
}

TEST(Svm, SameSeedSameWeights) {
  const auto t = blobs(10, 3, 1.0, 3);
  l2g::SvmConfig cfg;
  cfg.seed = 4;
  EXPECT_EQ(l2g::train_linear_svm(t, cfg).weights(), l2g::train_linear_svm(t, cfg).weights());
}

TEST(Argmax, TiesGoLowAndScalingIsHarmless) {
  EXPECT_EQ(l2g::argmax(std::vector<double>{1.0, 3.0, 3.0}), 1u);
  EXPECT_EQ(l2g::argmax(std::vector<double>{-2.0, -2.0}), 0u);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(6);
    for (auto& v : s) v = u(rng);
    auto scaled = s;
    for (auto& v : scaled) v *= 7.5;
    EXPECT_EQ(l2g::argmax(s), l2g::argmax(scaled));
  }
}

TEST(Retrieval, HandComputedAveragePrecision) {
  const auto t = table_of(Matrix{{0.0}, {1.0}, {2.0}, {3.0}}, {"a", "b", "a", "b"});
  const auto r = l2g::retrieval_map(t);
  ASSERT_EQ(r.average_precision.size(), 4u);
  EXPECT_DOUBLE_EQ(r.average_precision[0], 0.5);
  EXPECT_DOUBLE_EQ(r.average_precision[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.average_precision[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.average_precision[3], 0.5);
  EXPECT_DOUBLE_EQ(r.mean_average_precision, 5.0 / 12.0);
  EXPECT_EQ(r.rankings[1], (std::vector<std::size_t>{0, 2, 3}));
  ASSERT_EQ(r.pr_curve.size(), 3u);
  EXPECT_DOUBLE_EQ(r.pr_curve.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(r.pr_curve.back().precision, 1.0 / 3.0);
}

TEST(Retrieval, SingleLabelIsPerfect) {
  std::mt19937_64 rng(6);
  const auto r = l2g::retrieval_map(table_of(oracle::random_matrix(6, 4, rng), {"x", "x", "x", "x", "x", "x"}));
  EXPECT_EQ(r.mean_average_precision, 1.0);
  EXPECT_EQ(r.scored_queries, 6u);
}

TEST(Retrieval, QueriesWithoutRelevantItemsAreExcluded) {
  const auto t = table_of(Matrix{{0.0}, {1.0}, {2.0}, {3.0}, {9.0}}, {"a", "b", "a", "b", "c"});
  const auto r = l2g::retrieval_map(t);
  EXPECT_EQ(r.scored_queries, 4u);
  EXPECT_TRUE(std::isnan(r.average_precision[4]));
  EXPECT_DOUBLE_EQ(r.mean_average_precision, 5.0 / 12.0);
  EXPECT_THROW(l2g::retrieval_map(table_of(Matrix{{1.0}}, {"a"})), l2g::InvalidInput);
}

TEST(Retrieval, InvariantToRotationOfFeatureSpace) {
  const auto t = blobs(5, 3, 2.0, 7);
  auto rotated = t;
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (std::size_t i = 0; i < t.size(); ++i) {
    rotated.features(i, 0) = c * t.features(i, 0) - s * t.features(i, 1);
    rotated.features(i, 1) = s * t.features(i, 0) + c * t.features(i, 1);
  }
  const auto a = l2g::retrieval_map(t);
  const auto b = l2g::retrieval_map(rotated);
  EXPECT_NEAR(a.mean_average_precision, b.mean_average_precision, 1e-12);
}

TEST(AttentionSummary, ColumnSums) {
  const auto s = l2g::attention_summary(Matrix{{0.2, 0.7}, {0.8, 0.3}});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 1.0);
  EXPECT_THROW(l2g::attention_summary(Matrix(2, 3)), l2g::ShapeError);
  EXPECT_EQ(l2g::attention_summary(Matrix(256, 256, 1.0 / 256)).size(), 256u);
}

TEST(AttentionSummary, RowStochasticMapSumsToSize) {
  std::mt19937_64 rng(8);
  auto m = oracle::random_matrix(7, 7, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < 7; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 7; ++j) row += m(i, j);
    for (std::size_t j = 0; j < 7; ++j) m(i, j) /= row;
  }
  double total = 0.0;
  for (double v : l2g::attention_summary(m)) {
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, 7.0, 1e-12);
}

TEST(Features, DuplicateCloudsGiveIdenticalRowsAndThreadsAgree) {
  const auto cfg = l2g::ModelConfig::toy();
  const l2g::Model model(cfg, 2);
  auto a = fixture::cloud(cfg.num_points, 1);
  auto b = a;
  b.id = "copy";
  const std::vector<l2g::PointCloud> clouds{a, b, fixture::cloud(cfg.num_points, 2)};
  const std::vector<std::string> labels{"x", "x", "y"};
  const auto t1 = l2g::extract_features(model, clouds, labels, 1);
  const auto t2 = l2g::extract_features(model, clouds, labels, 2);
  EXPECT_EQ(t1.features, t2.features);
  EXPECT_EQ(t1.width(), cfg.global_dim);
  for (std::size_t j = 0; j < t1.width(); ++j) {
    EXPECT_EQ(t1.features(0, j), t1.features(1, j));
    EXPECT_GE(t1.features(0, j), 0.0);
  }
  const auto g = l2g::global_feature(model, a);
  for (std::size_t j = 0; j < t1.width(); ++j) EXPECT_EQ(g(0, j), t1.features(0, j));
}

TEST(Features, TableValidation) {
  auto t = table_of(Matrix(2, 3), {"a", "b"});
  EXPECT_NO_THROW(t.validate());
  t.ids[1] = t.ids[0];
  EXPECT_THROW(t.validate(), l2g::InvalidInput);
  auto u = table_of(Matrix(3, 3), {"a", "b"});
  EXPECT_THROW(u.validate(), l2g::InvalidInput);
}

TEST(Features, IncompatibleDatasetIsReported) {
  EXPECT_NO_THROW(l2g::check_compatible(l2g::ModelConfig::toy(), 64));
  try {
    l2g::check_compatible(l2g::ModelConfig::toy(), 100);
    FAIL() << "expected CheckpointError";
  } catch (const l2g::CheckpointError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("64"), std::string::npos);
    EXPECT_NE(msg.find("100"), std::string::npos);
  }
}

TEST(Upsample, ExactCountDrawnFromThePool) {
  const auto cfg = l2g::ModelConfig::toy();
  l2g::Model model(cfg, 3);
  fixture::randomize(model, 4, 0.3);
  const auto cloud = fixture::cloud(cfg.num_points, 5);
  const auto pool = l2g::dense_reconstruction(model, cloud);
  ASSERT_EQ(pool.size(), cfg.dense_pool_size());
  std::set<l2g::Vec3> members(pool.points.begin(), pool.points.end());
  const auto up = l2g::upsample(model, cloud, 80, 1);
  ASSERT_EQ(up.size(), 80u);
  for (const auto& p : up.points) EXPECT_TRUE(members.count(p));
  EXPECT_EQ(up.points, l2g::upsample(model, cloud, 80, 1).points);
  EXPECT_THROW(l2g::upsample(model, cloud, cfg.dense_pool_size() + 1, 1), l2g::InvalidInput);
}

TEST(Upsample, DenseOrderIsRegionMajor) {
  const auto cfg = l2g::ModelConfig::toy();
  l2g::Model model(cfg, 6);
  const auto cloud = fixture::cloud(cfg.num_points, 7);
  const auto pool = l2g::dense_reconstruction(model, cloud);
  const auto rec = l2g::reconstruct(model, cloud);
  std::size_t k = 0;
  for (std::size_t m = 0; m < cfg.num_regions; ++m)
    for (std::size_t t = 0; t < cfg.num_scales(); ++t)
      for (std::size_t i = 0; i < cfg.scales[t]; ++i, ++k)
        for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(pool.points[k][d], rec.areas[t][m](i, d));
}

TEST(Upsample, RandomBallStaysInside) {
  const auto ball = l2g::random_ball_cloud(500, 3);
  ASSERT_EQ(ball.size(), 500u);
  for (const auto& p : ball.points) EXPECT_LE(l2g::squared_distance(p, {0, 0, 0}), 1.0);
  EXPECT_EQ(ball.points, l2g::random_ball_cloud(500, 3).points);
}

TEST(Reconstruct, MatchesTrainingForward) {
  const auto cfg = l2g::ModelConfig::toy();
  l2g::Model model(cfg, 8);
  const auto cloud = fixture::cloud(cfg.num_points, 9);
  const auto rec = l2g::reconstruct(model, cloud, {0.5, 1.0});
  const auto sample = l2g::prepare(cloud, cfg);
  l2g::ad::Tape t(model.params());
  const auto pass = l2g::forward(t, model, sample, {0.5, 1.0});
  EXPECT_EQ(rec.loss.total, l2g::breakdown(t, pass, {0.5, 1.0}).total);
  EXPECT_EQ(rec.cloud.size(), cfg.num_points);
  EXPECT_EQ(rec.attention.region.rows(), cfg.num_regions);
  EXPECT_EQ(rec.attention.point.size(), cfg.num_regions * cfg.num_scales());
  EXPECT_EQ(rec.targets.size(), cfg.num_scales());
}
