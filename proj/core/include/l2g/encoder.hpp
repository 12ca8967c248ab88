#pragma once

#include <vector>

#include "l2g/geometry.hpp"
#include "l2g/model.hpp"
#include "l2g/tape.hpp"

namespace l2g {

/// Column-stochastic attention maps: entry (i, j) is the weight location i
/// receives when synthesizing output row j, so every column sums to 1.
struct AttentionMaps {
  std::vector<Matrix> point;  // M*T maps of K_t x K_t, index m*T + t
  std::vector<Matrix> scale;  // M maps of T x T
  Matrix region;              // M x M
};

struct EncoderOutput {
  ad::Var scale_features;   // (M*T) x D, row m*T + t
  ad::Var region_features;  // M x D
  ad::Var global_feature;   // 1 x D_global
  AttentionMaps attention;  // filled only when requested
};

/// Self-attention over the rows of a D1 x D2 feature map.
///
/// With f = x W_f, g = x W_g, h = x W_h (each D1 x C) and s(i,j) = f_i . g_j,
/// the weights beta are the softmax of s over i for every j, r_j is the
/// beta-weighted sum of h_i, and the block returns [x | r] (D1 x (D2 + C)).
/// A disabled block returns x unchanged. `params` may be null only when the
/// block is disabled. When `attention_out` is non-null the softmax matrix is
/// copied there.
ad::Var self_attention_block(ad::Tape& t, ad::Var x, const AttentionParams* params,
                             const AttentionBlockConfig& config, Matrix* attention_out = nullptr);

/// Shared per-row MLP followed by a column-wise max over rows -> 1 x width.
ad::Var aggregate(ad::Tape& t, ad::Var x, const MlpParams& mlp);

/// Point -> scale -> region -> global abstraction over a region pyramid.
EncoderOutput encode(ad::Tape& t, const PointCloud& cloud, const RegionPyramid& pyramid,
                     const Model& model, bool keep_attention = false);

}  // namespace l2g
