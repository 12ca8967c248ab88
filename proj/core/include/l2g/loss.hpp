#pragma once

#include <span>
#include <vector>

#include "l2g/decoder.hpp"
#include "l2g/geometry.hpp"
#include "l2g/tape.hpp"

namespace l2g {

/// Local areas indexed [t][m], each a K_t x 3 point set.
using AreaSet = std::vector<std::vector<Matrix>>;

struct LossBreakdown {
  double local = 0.0;
  double global_ = 0.0;
  double total = 0.0;
  double gamma = 1.0;
  /// 0 switches the local term off (global-only ablation); 1 otherwise.
  double local_weight = 1.0;
};

struct LossWeights {
  double gamma = 1.0;
  double local_weight = 1.0;
};

/// Sum over scales of the region-averaged Chamfer distance between target and
/// reconstructed areas. Throws InvalidInput when the sets are not aligned.
double local_loss(const AreaSet& targets, const AreaSet& reconstructed);

/// local_weight * local + gamma * chamfer(P, P').
LossBreakdown total_loss(const PointCloud& input, const PointCloud& reconstructed,
                         const AreaSet& targets, const AreaSet& reconstructed_areas,
                         const LossWeights& weights);

/// Split the per-scale area rows of a decoder pass into an AreaSet.
AreaSet unpack_areas(const ad::Tape& t, const DecoderOutput& decoded);

struct LossVars {
  ad::Var local;
  ad::Var global;
  ad::Var total;
};

/// Differentiable form of total_loss over a decoder pass.
LossVars record_loss(ad::Tape& t, const DecoderOutput& decoded, const AreaSet& targets,
                     const Matrix& input_points, const LossWeights& weights);

}  // namespace l2g
