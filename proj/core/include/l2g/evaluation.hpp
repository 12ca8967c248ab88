#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "l2g/config.hpp"
#include "l2g/dataset.hpp"
#include "l2g/encoder.hpp"
#include "l2g/geometry.hpp"
#include "l2g/loss.hpp"
#include "l2g/model.hpp"

namespace l2g {

/// One global feature per shape.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  Matrix features;  // rows x D_global

  [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }
  [[nodiscard]] std::size_t width() const noexcept { return features.cols(); }
  /// Throws InvalidInput when ids repeat or the row counts disagree.
  void validate() const;
};

/// Throws CheckpointError naming both dimension sets when a dataset of
/// `points_per_cloud` points cannot be fed to `config`.
void check_compatible(const ModelConfig& config, std::size_t points_per_cloud);

/// Global feature of a single cloud (1 x D_global).
Matrix global_feature(const Model& model, const PointCloud& cloud);

FeatureTable extract_features(const Model& model, std::span<const DatasetItem* const> items,
                              std::size_t threads = 1);
FeatureTable extract_features(const Model& model, std::span<const PointCloud> clouds,
                              std::span<const std::string> labels, std::size_t threads = 1);

/// One-vs-rest linear SVM on standardized features with a bias column.
class LinearSvm {
 public:
  LinearSvm(std::vector<std::string> classes, Matrix weights, std::vector<double> mean,
            std::vector<double> inv_scale);

  [[nodiscard]] const std::vector<std::string>& classes() const noexcept { return classes_; }
  [[nodiscard]] std::size_t num_classifiers() const noexcept { return classes_.size(); }
  /// Row c: weights of the class-c classifier, last entry is the bias.
  [[nodiscard]] const Matrix& weights() const noexcept { return weights_; }

  [[nodiscard]] std::vector<double> scores(std::span<const double> x) const;
  /// Argmax of scores, ties to the lower class index.
  [[nodiscard]] std::size_t predict_index(std::span<const double> x) const;
  [[nodiscard]] const std::string& predict(std::span<const double> x) const;

 private:
  std::vector<std::string> classes_;  // sorted
  Matrix weights_;
  std::vector<double> mean_;
  std::vector<double> inv_scale_;
};

/// Argmax with ties resolved to the lower index.
std::size_t argmax(std::span<const double> scores);

/// Pegasos-style subgradient descent on the L2-regularized hinge loss, one
/// binary problem per class. Throws InvalidInput with fewer than two classes.
LinearSvm train_linear_svm(const FeatureTable& table, const SvmConfig& config = {});

struct ClassReport {
  std::string label;
  std::size_t support = 0;
  std::size_t correct = 0;
  std::size_t predicted = 0;
};

struct ClassificationReport {
  double accuracy = 0.0;
  std::vector<ClassReport> classes;
  std::vector<std::string> predictions;
};

ClassificationReport evaluate_classifier(const LinearSvm& svm, const FeatureTable& table);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct RetrievalResult {
  std::vector<std::vector<std::size_t>> rankings;  // row indices, query excluded
  std::vector<double> average_precision;           // NaN for queries without relevant items
  double mean_average_precision = 0.0;
  std::size_t scored_queries = 0;
  std::vector<PrPoint> pr_curve;                   // mean over scored queries, one point per rank
};

/// Ranks by ascending Euclidean distance, ties by row index. Relevance is
/// label equality. Throws InvalidInput with fewer than two rows.
RetrievalResult retrieval_map(const FeatureTable& table);

/// All reconstructed areas of one cloud, region-major then scale-minor
/// (M * sum K_t points).
PointCloud dense_reconstruction(const Model& model, const PointCloud& cloud);

/// Farthest-point downsampling of the dense reconstruction to target_n points.
/// Throws InvalidInput when target_n exceeds the pool.
PointCloud upsample(const Model& model, const PointCloud& cloud, std::size_t target_n,
                    std::uint64_t seed);

/// target_n points drawn uniformly from the unit ball.
PointCloud random_ball_cloud(std::size_t n, std::uint64_t seed);

/// Column sums of a square attention map. Throws ShapeError otherwise.
std::vector<double> attention_summary(const Matrix& map);

struct Reconstruction {
  PointCloud cloud;  // P'
  AreaSet areas;     // [t][m]
  AreaSet targets;   // [t][m]
  LossBreakdown loss;
  AttentionMaps attention;
};

/// Full forward pass without gradients; keeps attention maps.
Reconstruction reconstruct(const Model& model, const PointCloud& cloud,
                           const LossWeights& weights = {});

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
void write_pr_csv(const std::filesystem::path& path, std::span<const PrPoint> curve);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_vector_csv(const std::filesystem::path& path, std::span<const double> v);

}  // namespace l2g
