#include "l2g/model.hpp"

#include <numeric>
#include <sstream>

#include "l2g/errors.hpp"

namespace l2g {
namespace {

AttentionParams make_attention(ParamStore& store, const std::string& name, std::size_t in_width,
                               std::size_t c_dim, std::uint64_t& ordinal, std::uint64_t seed) {
  auto xavier = [&] { return InitRecord{InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0}; };
  AttentionParams p;
  p.w_f = store.add(name + ".w_f", in_width, c_dim, xavier());
  p.w_g = store.add(name + ".w_g", in_width, c_dim, xavier());
  p.w_h = store.add(name + ".w_h", in_width, c_dim, xavier());
  return p;
}

DenseLayer make_dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::uint64_t& ordinal, std::uint64_t seed) {
  DenseLayer layer;
  layer.weight = store.add(name + ".w", in, out,
                           {InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0});
  layer.bias = store.add(name + ".b", 1, out, {InitScheme::Zeros, 0, 0.0});
  layer.activation = Activation::Identity;
  return layer;
}

}  // namespace

std::size_t ModelConfig::c_dim() const noexcept {
  if (attention_dim > 0) return attention_dim;
  return std::max<std::size_t>(1, num_regions / 8);
}

std::size_t ModelConfig::scale_sum() const noexcept {
  return std::accumulate(scales.begin(), scales.end(), std::size_t{0});
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidInput("model config: " + msg); };
  if (num_points == 0) fail("num_points must be positive");
  if (num_regions == 0 || num_regions > num_points) fail("num_regions must be in [1, num_points]");
  if (scales.empty()) fail("at least one scale is required");
  if (scales.front() == 0) fail("scale sizes must be positive");
  for (std::size_t t = 1; t < scales.size(); ++t)
    if (scales[t] <= scales[t - 1]) fail("scales must be strictly increasing");
  if (scales.back() > num_points) fail("largest scale exceeds num_points");
  if (feature_dim == 0 || global_dim == 0) fail("feature dimensions must be positive");
  if (!(interpolation.c > 0.0)) fail("interpolation c must be positive");
  if (!(interpolation.epsilon > 0.0)) fail("interpolation epsilon must be positive");
  for (auto w : point_mlp)
    if (w == 0) fail("point_mlp widths must be positive");
}

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.num_points = 1024;
  c.num_regions = 256;
  c.scales = {16, 32, 64, 128};
  c.feature_dim = 256;
  c.global_dim = 1024;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.num_points = 64;
  c.num_regions = 8;
  c.scales = {4, 8};
  c.feature_dim = 16;
  c.global_dim = 32;
  return c;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  config_.validate();
  const std::size_t c_dim = config_.c_dim();
  const std::size_t d = config_.feature_dim;
  std::uint64_t ordinal = 0;

  std::size_t point_in = 3;
  if (config_.point_attention) {
    layout_.point_attention = make_attention(params_, "encoder.point.attention", 3, c_dim, ordinal, seed);
    point_in += c_dim;
  }
  auto point_widths = config_.point_mlp;
  point_widths.push_back(d);
  layout_.point_mlp = make_mlp(params_, "encoder.point.mlp", point_in, point_widths, ordinal, seed);

  std::size_t scale_in = d;
  if (config_.scale_attention) {
    layout_.scale_attention = make_attention(params_, "encoder.scale.attention", d, c_dim, ordinal, seed);
    scale_in += c_dim;
  }
  layout_.scale_mlp = make_mlp(params_, "encoder.scale.mlp", scale_in, {d}, ordinal, seed);

  std::size_t region_in = d;
  if (config_.region_attention) {
    layout_.region_attention = make_attention(params_, "encoder.region.attention", d, c_dim, ordinal, seed);
    region_in += c_dim;
  }
  layout_.region_mlp =
      make_mlp(params_, "encoder.region.mlp", region_in, {config_.global_dim}, ordinal, seed);

  layout_.fuse_mlp =
      make_mlp(params_, "decoder.fuse.mlp", config_.global_dim + d, {d}, ordinal, seed);
  layout_.lstm = make_lstm(params_, "decoder.lstm", d, d, ordinal, seed, config_.forget_bias);
  layout_.w_theta = params_.add("decoder.w_theta", d, d,
                                {InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0});
  for (std::size_t t = 0; t < config_.scales.size(); ++t) {
    layout_.area_fc.push_back(make_dense(params_, "decoder.area." + std::to_string(t), d,
                                         3 * config_.scales[t], ordinal, seed));
  }
  layout_.global_fc = make_dense(params_, "decoder.global", 3 * config_.dense_pool_size(),
                                 3 * config_.num_points, ordinal, seed);
}

AttentionBlockConfig Model::point_block() const {
  return {config_.c_dim(), config_.point_attention};
}
AttentionBlockConfig Model::scale_block() const {
  return {config_.c_dim(), config_.scale_attention};
}
AttentionBlockConfig Model::region_block() const {
  return {config_.c_dim(), config_.region_attention};
}

}  // namespace l2g
