#include "l2g/encoder.hpp"

#include <sstream>

#include "l2g/errors.hpp"

namespace l2g {

ad::Var self_attention_block(ad::Tape& t, ad::Var x, const AttentionParams* params,
                             const AttentionBlockConfig& config, Matrix* attention_out) {
  if (!config.enabled) return x;
  if (params == nullptr) throw InvalidInput("self_attention_block: enabled block without weights");
  const Matrix& xv = t.value(x);
  const Matrix& wf = t.params()[params->w_f].value;
  if (wf.rows() != xv.cols() || wf.cols() != config.c_dim) {
    std::ostringstream os;
    os << "self_attention_block: input width " << xv.cols() << " and C=" << config.c_dim
       << " do not match projection " << wf.rows() << "x" << wf.cols();
    throw ShapeError(os.str());
  }
  auto f = ad::matmul(t, x, t.param(params->w_f));
  auto g = ad::matmul(t, x, t.param(params->w_g));
  auto h = ad::matmul(t, x, t.param(params->w_h));
  auto scores = ad::matmul_nt(t, f, g);         // (i, j) = f_i . g_j
  auto beta = ad::softmax_columns(t, scores);   // normalized over i
  auto r = ad::matmul_tn(t, beta, h);           // r_j = sum_i beta(i,j) h_i
  if (attention_out != nullptr) *attention_out = t.value(beta);
  const ad::Var parts[] = {x, r};
  return ad::concat_cols(t, parts);
}

ad::Var aggregate(ad::Tape& t, ad::Var x, const MlpParams& mlp) {
  if (t.value(x).rows() == 0) throw ShapeError("aggregate: empty feature map");
  return ad::maxpool_rows(t, apply_mlp(t, x, mlp));
}

EncoderOutput encode(ad::Tape& t, const PointCloud& cloud, const RegionPyramid& pyramid,
                     const Model& model, bool keep_attention) {
  const auto& cfg = model.config();
  const auto& layout = model.layout();
  const std::size_t regions = pyramid.num_regions();
  const std::size_t scales = pyramid.num_scales();
  if (regions != cfg.num_regions || pyramid.scales != cfg.scales) {
    throw ShapeError("encode: region pyramid does not match the model configuration");
  }
  const AttentionParams* point_attn = layout.point_attention ? &*layout.point_attention : nullptr;
  const AttentionParams* scale_attn = layout.scale_attention ? &*layout.scale_attention : nullptr;
  const AttentionParams* region_attn =
      layout.region_attention ? &*layout.region_attention : nullptr;

  EncoderOutput out;
  if (keep_attention) {
    out.attention.point.resize(regions * scales);
    out.attention.scale.resize(regions);
  }

  // Point level: every (m, t) group attends over its own K_t points.
  std::vector<ad::Var> attended;
  std::vector<std::size_t> group_rows;
  attended.reserve(regions * scales);
  for (std::size_t m = 0; m < regions; ++m) {
    const auto& center = cloud.points.at(pyramid.centroid_indices[m]);
    for (std::size_t t_idx = 0; t_idx < scales; ++t_idx) {
      Matrix coords = gather_points(cloud, pyramid.groups[m][t_idx]);
      if (cfg.centroid_relative) {
        for (std::size_t r = 0; r < coords.rows(); ++r)
          for (std::size_t a = 0; a < 3; ++a) coords(r, a) -= center[a];
      }
      group_rows.push_back(coords.rows());
      Matrix* map = keep_attention ? &out.attention.point[m * scales + t_idx] : nullptr;
      attended.push_back(
          self_attention_block(t, t.constant(std::move(coords)), point_attn, model.point_block(), map));
    }
  }
  // The MLP is shared per row, so all groups go through it as one stack.
  auto point_hidden = apply_mlp(t, ad::concat_rows(t, attended), layout.point_mlp);
  out.scale_features = ad::segment_maxpool(t, point_hidden, group_rows);

  // Scale level: the T scale features of each region.
  std::vector<ad::Var> scale_attended;
  scale_attended.reserve(regions);
  for (std::size_t m = 0; m < regions; ++m) {
    auto block = ad::slice_rows(t, out.scale_features, m * scales, scales);
    Matrix* map = keep_attention ? &out.attention.scale[m] : nullptr;
    scale_attended.push_back(self_attention_block(t, block, scale_attn, model.scale_block(), map));
  }
  auto scale_hidden = apply_mlp(t, ad::concat_rows(t, scale_attended), layout.scale_mlp);
  const std::vector<std::size_t> region_rows(regions, scales);
  out.region_features = ad::segment_maxpool(t, scale_hidden, region_rows);

  // Region level: all M region features.
  auto region_attended = self_attention_block(t, out.region_features, region_attn,
                                              model.region_block(),
                                              keep_attention ? &out.attention.region : nullptr);
  out.global_feature = aggregate(t, region_attended, layout.region_mlp);
  return out;
}

}  // namespace l2g
