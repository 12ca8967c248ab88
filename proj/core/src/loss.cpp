#include "l2g/loss.hpp"

#include "l2g/errors.hpp"

namespace l2g {
namespace {

std::vector<Vec3> as_points(const Matrix& m) {
  if (m.cols() != 3) throw InvalidInput("area point sets must be K x 3");
  std::vector<Vec3> pts(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) pts[i] = {m(i, 0), m(i, 1), m(i, 2)};
  return pts;
}

}  // namespace

double local_loss(const AreaSet& targets, const AreaSet& reconstructed) {
  if (targets.size() != reconstructed.size() || targets.empty())
    throw InvalidInput("local_loss: scale count mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t].size() != reconstructed[t].size() || targets[t].empty())
      throw InvalidInput("local_loss: region count mismatch at scale " + std::to_string(t));
    double scale_sum = 0.0;
    for (std::size_t m = 0; m < targets[t].size(); ++m) {
      scale_sum += chamfer_distance(as_points(targets[t][m]), as_points(reconstructed[t][m]));
    }
    total += scale_sum / double(targets[t].size());
  }
  return total;
}

LossBreakdown total_loss(const PointCloud& input, const PointCloud& reconstructed,
                         const AreaSet& targets, const AreaSet& reconstructed_areas,
                         const LossWeights& weights) {
  LossBreakdown out;
  out.gamma = weights.gamma;
  out.local_weight = weights.local_weight;
  out.local = local_loss(targets, reconstructed_areas);
  out.global_ = chamfer_distance(input, reconstructed);
  out.total = weights.local_weight * out.local + weights.gamma * out.global_;
  return out;
}

AreaSet unpack_areas(const ad::Tape& t, const DecoderOutput& decoded) {
  AreaSet areas(decoded.areas.size());
  for (std::size_t s = 0; s < decoded.areas.size(); ++s) {
    const Matrix& rows = t.value(decoded.areas[s]);
    for (std::size_t m = 0; m < rows.rows(); ++m) areas[s].push_back(area_points(rows, m));
  }
  return areas;
}

LossVars record_loss(ad::Tape& t, const DecoderOutput& decoded, const AreaSet& targets,
                     const Matrix& input_points, const LossWeights& weights) {
  if (targets.size() != decoded.areas.size())
    throw InvalidInput("record_loss: scale count mismatch");
  LossVars out;
  std::vector<ad::Var> per_scale;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    if (targets[s].size() != t.value(decoded.areas[s]).rows())
      throw InvalidInput("record_loss: region count mismatch at scale " + std::to_string(s));
    auto rows = ad::chamfer_rows(t, decoded.areas[s], targets[s]);
    per_scale.push_back(ad::scale(t, ad::sum(t, rows), 1.0 / double(targets[s].size())));
  }
  out.local = ad::sum(t, ad::concat_rows(t, per_scale));
  out.global = ad::chamfer(t, decoded.cloud, input_points);
  // The two-term sum is built as (w_l * local) + (gamma * global) to match total_loss exactly.
  auto weighted_local = ad::scale(t, out.local, weights.local_weight);
  auto weighted_global = ad::scale(t, out.global, weights.gamma);
  out.total = ad::add(t, weighted_local, weighted_global);
  return out;
}

}  // namespace l2g
