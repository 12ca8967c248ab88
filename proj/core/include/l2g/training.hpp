#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2g/adam.hpp"
#include "l2g/decoder.hpp"
#include "l2g/encoder.hpp"
#include "l2g/geometry.hpp"
#include "l2g/loss.hpp"
#include "l2g/model.hpp"

namespace l2g {

/// A normalized cloud with its region pyramid and reconstruction targets.
struct PreparedCloud {
  PointCloud cloud;
  RegionPyramid pyramid;
  std::vector<Vec3> centroids;
  AreaSet targets;  // [t][m], K_t x 3
  Matrix points;    // N x 3
  std::string label;
};

/// FPS + kNN on an already-normalized cloud. Throws InvalidInput when the
/// cloud size differs from the model's N.
PreparedCloud prepare(const PointCloud& cloud, const ModelConfig& config, std::string label = {});

struct ForwardPass {
  EncoderOutput encoded;
  DecoderOutput decoded;
  LossVars loss;
};

ForwardPass forward(ad::Tape& t, const Model& model, const PreparedCloud& sample,
                    const LossWeights& weights, bool keep_attention = false);

/// Value-only breakdown of a recorded pass.
LossBreakdown breakdown(const ad::Tape& t, const ForwardPass& pass, const LossWeights& weights);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 8;
  double lr_decay_factor = 0.3;
  std::size_t lr_decay_every_epochs = 20;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  bool use_local_loss = true;
  bool use_global_loss = true;
  AdamConfig adam;
  std::size_t save_every = 0;  // epochs between checkpoints; 0 = final only
  std::filesystem::path checkpoint_path;
  std::size_t threads = 1;

  void validate() const;
  [[nodiscard]] LossWeights loss_weights() const;
  /// Learning rate in effect during `epoch` (0-based).
  [[nodiscard]] double learning_rate_at(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double local = 0.0;
  double global_ = 0.0;
  double total = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the joint loss. Sample order is shuffled per epoch from
/// config.seed; per-sample gradients are reduced in sample order, so results
/// do not depend on config.threads. A non-finite loss raises NumericalError.
TrainResult train(std::span<const PreparedCloud> data, const ModelConfig& model_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Continue training an existing model.
TrainResult train(Model model, std::span<const PreparedCloud> data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct SampleGradient {
  LossBreakdown loss;
  std::vector<Matrix> grads;
};

/// Forward + backward for one sample.
SampleGradient sample_gradient(const Model& model, const PreparedCloud& sample,
                               const LossWeights& weights);

/// Same as sample_gradient but writes into `grads` (one zero-filled buffer
/// per parameter, overwritten here), avoiding fresh allocations.
LossBreakdown sample_gradient_into(const Model& model, const PreparedCloud& sample,
                                   const LossWeights& weights, std::span<Matrix> grads);

/// Write the loss history as CSV: epoch,local,global,total,lr.
void write_loss_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace l2g
