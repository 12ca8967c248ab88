#include "l2g/decoder.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "l2g/errors.hpp"

namespace l2g {

ad::Var interpolate_regions(ad::Tape& t, ad::Var global, std::span<const Vec3> centroids,
                            const InterpolationConfig& config) {
  if (t.value(global).rows() != 1) throw ShapeError("interpolate_regions: global must be 1 x D");
  Matrix weights(centroids.size(), 1);
  const Vec3 origin{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    weights(i, 0) = config.c / std::max(squared_distance(centroids[i], origin), config.epsilon);
  }
  return ad::matmul(t, t.constant(std::move(weights)), global);
}

ad::Var fuse_skip(ad::Tape& t, ad::Var interp, ad::Var encoder_regions, const MlpParams& mlp) {
  if (t.value(interp).rows() != t.value(encoder_regions).rows()) {
    std::ostringstream os;
    os << "fuse_skip: " << t.value(interp).rows() << " interpolated rows vs "
       << t.value(encoder_regions).rows() << " encoder rows";
    throw ShapeError(os.str());
  }
  const ad::Var parts[] = {interp, encoder_regions};
  return apply_mlp(t, ad::concat_cols(t, parts), mlp);
}

std::vector<ad::Var> rnn_decode_regions(ad::Tape& t, ad::Var regions, const LstmParams& lstm,
                                        ParamId w_theta, std::size_t steps) {
  if (steps == 0) throw InvalidInput("rnn_decode_regions: T must be at least 1");
  const std::size_t batch = t.value(regions).rows();
  LstmState state{t.constant(Matrix(batch, lstm.hidden)), t.constant(Matrix(batch, lstm.hidden))};
  auto w = t.param(w_theta);
  std::vector<ad::Var> out;
  out.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    state = lstm_step(t, state, regions, lstm);
    out.push_back(ad::matmul(t, state.h, w));
  }
  return out;
}

ad::Var rnn_decode_region(ad::Tape& t, ad::Var region, const LstmParams& lstm, ParamId w_theta,
                          std::size_t steps) {
  if (t.value(region).rows() != 1) throw ShapeError("rnn_decode_region: expects a 1 x D row");
  auto per_step = rnn_decode_regions(t, region, lstm, w_theta, steps);
  return ad::concat_rows(t, per_step);
}

ad::Var reconstruct_area(ad::Tape& t, ad::Var area_features, std::size_t scale_index,
                         const Model& model) {
  const auto& fcs = model.layout().area_fc;
  if (scale_index >= fcs.size()) {
    throw InvalidInput("reconstruct_area: scale index " + std::to_string(scale_index) +
                       " out of range");
  }
  const auto& fc = fcs[scale_index];
  return ad::affine(t, area_features, t.param(fc.weight), t.param(fc.bias));
}

std::pair<ad::Var, ad::Var> reconstruct_global(ad::Tape& t, std::span<const ad::Var> areas,
                                               const Model& model) {
  const auto& cfg = model.config();
  if (areas.size() != cfg.num_scales()) {
    throw InvalidInput("reconstruct_global: expected " + std::to_string(cfg.num_scales()) +
                       " scale areas, got " + std::to_string(areas.size()));
  }
  for (std::size_t s = 0; s < areas.size(); ++s) {
    const Matrix& a = t.value(areas[s]);
    if (a.rows() != cfg.num_regions || a.cols() != 3 * cfg.scales[s])
      throw InvalidInput("reconstruct_global: area set for scale " + std::to_string(s) +
                         " is incomplete");
  }
  auto per_region = ad::concat_cols(t, areas);  // row m = [A'_{m,1} | ... | A'_{m,T}]
  auto dense = ad::reshape(t, per_region, 1, t.value(per_region).size());
  const auto& fc = model.layout().global_fc;
  auto flat = ad::affine(t, dense, t.param(fc.weight), t.param(fc.bias));
  return {dense, ad::reshape(t, flat, cfg.num_points, 3)};
}

DecoderOutput decode(ad::Tape& t, ad::Var global, ad::Var encoder_regions,
                     std::span<const Vec3> centroids, const Model& model) {
  const auto& cfg = model.config();
  const auto& layout = model.layout();
  DecoderOutput out;
  auto interp = interpolate_regions(t, global, centroids, cfg.interpolation);
  out.region_features = fuse_skip(t, interp, encoder_regions, layout.fuse_mlp);
  out.area_features =
      rnn_decode_regions(t, out.region_features, layout.lstm, layout.w_theta, cfg.num_scales());
  for (std::size_t s = 0; s < cfg.num_scales(); ++s) {
    out.areas.push_back(reconstruct_area(t, out.area_features[s], s, model));
  }
  std::tie(out.dense, out.cloud) = reconstruct_global(t, out.areas, model);
  return out;
}

Matrix area_points(const Matrix& area_rows, std::size_t region) {
  const auto row = area_rows.row(region);
  return Matrix(row.size() / 3, 3, std::vector<double>(row.begin(), row.end()));
}

}  // namespace l2g
