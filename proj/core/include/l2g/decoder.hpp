#pragma once

#include <span>
#include <utility>
#include <vector>

#include "l2g/geometry.hpp"
#include "l2g/model.hpp"
#include "l2g/tape.hpp"

namespace l2g {

struct DecoderOutput {
  ad::Var region_features;          // M x D, after the skip fusion
  std::vector<ad::Var> area_features;  // per scale t: M x D (a_t for every region)
  std::vector<ad::Var> areas;       // per scale t: M x 3K_t, row m = K_t points xyz-major
  ad::Var dense;                    // 1 x 3*M*sum(K), region-major then scale-minor
  ad::Var cloud;                    // N x 3
};

/// Distance-scaled copies of the global feature:
/// l_i = c / max(|p_i - p_0|^2, epsilon) * g with p_0 at the origin.
ad::Var interpolate_regions(ad::Tape& t, ad::Var global, std::span<const Vec3> centroids,
                            const InterpolationConfig& config);

/// Row-wise [interp | encoder_regions] through the fusion MLP -> M x D.
ad::Var fuse_skip(ad::Tape& t, ad::Var interp, ad::Var encoder_regions, const MlpParams& mlp);

/// Feed each row of `regions` (B x D) to the LSTM for T steps and map every
/// hidden state through W_theta. Returns T matrices of B x D.
std::vector<ad::Var> rnn_decode_regions(ad::Tape& t, ad::Var regions, const LstmParams& lstm,
                                        ParamId w_theta, std::size_t steps);

/// Single-region form: 1 x D in, T x D out.
ad::Var rnn_decode_region(ad::Tape& t, ad::Var region, const LstmParams& lstm, ParamId w_theta,
                          std::size_t steps);

/// Per-scale affine map from area features (B x D) to B x 3K_t point rows.
ad::Var reconstruct_area(ad::Tape& t, ad::Var area_features, std::size_t scale_index,
                         const Model& model);

/// Concatenate all areas region-major, scale-minor and map them to N points.
/// Returns {dense concatenation, N x 3 cloud}.
std::pair<ad::Var, ad::Var> reconstruct_global(ad::Tape& t, std::span<const ad::Var> areas,
                                               const Model& model);

DecoderOutput decode(ad::Tape& t, ad::Var global, ad::Var encoder_regions,
                     std::span<const Vec3> centroids, const Model& model);

/// Unpack row `region` of a per-scale area matrix into K x 3 points.
Matrix area_points(const Matrix& area_rows, std::size_t region);

}  // namespace l2g
