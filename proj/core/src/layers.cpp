#include "l2g/layers.hpp"

#include <sstream>

#include "l2g/errors.hpp"

namespace l2g {

std::size_t MlpParams::output_width(const ParamStore& store) const {
  if (layers.empty()) return 0;
  return store[layers.back().weight].value.cols();
}

MlpParams make_mlp(ParamStore& store, const std::string& name, std::size_t in_width,
                   const std::vector<std::size_t>& widths, std::uint64_t& ordinal,
                   std::uint64_t seed, Activation activation) {
  MlpParams mlp;
  std::size_t prev = in_width;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string prefix = name + "." + std::to_string(i);
    DenseLayer layer;
    layer.weight = store.add(prefix + ".w", prev, widths[i],
                             {InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0});
    layer.bias = store.add(prefix + ".b", 1, widths[i], {InitScheme::Zeros, 0, 0.0});
    layer.activation = activation;
    mlp.layers.push_back(layer);
    prev = widths[i];
  }
  return mlp;
}

ad::Var apply_mlp(ad::Tape& t, ad::Var x, const MlpParams& mlp) {
  for (const auto& layer : mlp.layers) {
    x = ad::affine(t, x, t.param(layer.weight), t.param(layer.bias));
    if (layer.activation == Activation::Relu) x = ad::relu(t, x);
  }
  return x;
}

LstmParams make_lstm(ParamStore& store, const std::string& name, std::size_t in_width,
                     std::size_t hidden, std::uint64_t& ordinal, std::uint64_t seed,
                     double forget_bias) {
  LstmParams p;
  p.hidden = hidden;
  p.w_input = store.add(name + ".w_input", in_width, 4 * hidden,
                        {InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0});
  p.w_hidden = store.add(name + ".w_hidden", hidden, 4 * hidden,
                         {InitScheme::XavierUniform, derive_seed(seed, ordinal++), 0.0});
  p.bias = store.add(name + ".b", 1, 4 * hidden, {InitScheme::LstmGateBias, 0, forget_bias});
  return p;
}

LstmState lstm_step(ad::Tape& t, const LstmState& state, ad::Var x, const LstmParams& p) {
  const std::size_t hidden = p.hidden;
  const Matrix& h = t.value(state.h);
  const Matrix& c = t.value(state.c);
  if (h.cols() != hidden || c.cols() != hidden || h.rows() != t.value(x).rows() ||
      c.rows() != h.rows()) {
    std::ostringstream os;
    os << "lstm_step: state " << h.rows() << "x" << h.cols() << " does not match hidden size "
       << hidden << " for a batch of " << t.value(x).rows();
    throw ShapeError(os.str());
  }
  auto z = ad::affine(t, x, t.param(p.w_input), t.param(p.bias));
  z = ad::add(t, z, ad::matmul(t, state.h, t.param(p.w_hidden)));
  auto in_gate = ad::sigmoid(t, ad::slice_cols(t, z, 0, hidden));
  auto forget_gate = ad::sigmoid(t, ad::slice_cols(t, z, hidden, hidden));
  auto candidate = ad::tanh(t, ad::slice_cols(t, z, 2 * hidden, hidden));
  auto out_gate = ad::sigmoid(t, ad::slice_cols(t, z, 3 * hidden, hidden));
  auto c_next = ad::add(t, ad::mul(t, forget_gate, state.c), ad::mul(t, in_gate, candidate));
  auto h_next = ad::mul(t, out_gate, ad::tanh(t, c_next));
  return {h_next, c_next};
}

}  // namespace l2g
