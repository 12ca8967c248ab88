#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l2g/layers.hpp"
#include "l2g/params.hpp"

namespace l2g {

struct InterpolationConfig {
  double c = 1e-10;         // numerator constant of the distance weighting
  double epsilon = 1e-12;   // lower clamp on the squared centroid distance

  bool operator==(const InterpolationConfig&) const = default;
};

struct AttentionBlockConfig {
  std::size_t c_dim = 1;
  bool enabled = true;
};

/// Architecture hyper-parameters. Attention switches live here because they
/// change the parameter set.
struct ModelConfig {
  std::size_t num_points = 256;                 // N
  std::size_t num_regions = 32;                 // M
  std::vector<std::size_t> scales{4, 8, 16, 32};  // K_1 < ... < K_T
  std::size_t feature_dim = 64;                 // D (also the LSTM hidden size)
  std::size_t global_dim = 256;                 // D_global
  std::size_t attention_dim = 0;                // C; 0 means M/8
  std::vector<std::size_t> point_mlp{64, 128};  // hidden widths before the final D
  bool point_attention = true;
  bool scale_attention = true;
  bool region_attention = true;
  bool centroid_relative = false;
  InterpolationConfig interpolation;
  double forget_bias = 1.0;
  std::uint64_t fps_seed = 0;

  [[nodiscard]] std::size_t num_scales() const noexcept { return scales.size(); }
  [[nodiscard]] std::size_t c_dim() const noexcept;
  [[nodiscard]] std::size_t scale_sum() const noexcept;
  /// Points pooled from all reconstructed areas: M * sum_t K_t.
  [[nodiscard]] std::size_t dense_pool_size() const noexcept { return num_regions * scale_sum(); }

  /// Throws InvalidInput describing the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;

  /// N=1024, M=256, K=[16,32,64,128], D=256, D_global=1024.
  static ModelConfig full();
  /// N=256, M=32, K=[4,8,16,32], D=64, D_global=256.
  static ModelConfig desk();
  /// N=64, M=8, K=[4,8], D=16, D_global=32.
  static ModelConfig toy();
};

struct AttentionParams {
  ParamId w_f = 0;
  ParamId w_g = 0;
  ParamId w_h = 0;
};

struct ModelLayout {
  std::optional<AttentionParams> point_attention;
  std::optional<AttentionParams> scale_attention;
  std::optional<AttentionParams> region_attention;
  MlpParams point_mlp;
  MlpParams scale_mlp;
  MlpParams region_mlp;
  MlpParams fuse_mlp;
  LstmParams lstm;
  ParamId w_theta = 0;
  std::vector<DenseLayer> area_fc;  // one per scale, shared across regions
  DenseLayer global_fc;
};

/// Parameters plus the named layout the forward pass reads them through.
class Model {
 public:
  /// Fresh model with deterministic initialization from `seed`.
  Model(ModelConfig config, std::uint64_t seed);

  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] const ModelLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] const ParamStore& params() const noexcept { return params_; }
  ParamStore& params() noexcept { return params_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] AttentionBlockConfig point_block() const;
  [[nodiscard]] AttentionBlockConfig scale_block() const;
  [[nodiscard]] AttentionBlockConfig region_block() const;

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  ParamStore params_;
  ModelLayout layout_;
};

}  // namespace l2g
