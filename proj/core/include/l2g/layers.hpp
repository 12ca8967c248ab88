#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "l2g/params.hpp"
#include "l2g/tape.hpp"

namespace l2g {

enum class Activation { Relu, Identity };

struct DenseLayer {
  ParamId weight = 0;
  ParamId bias = 0;
  Activation activation = Activation::Relu;
};

/// Shared-weight per-row MLP (a stack of "1x1 convolutions").
struct MlpParams {
  std::vector<DenseLayer> layers;

  [[nodiscard]] std::size_t output_width(const ParamStore& store) const;
};

/// Register `name.0.w`, `name.0.b`, ... with Xavier weights and zero biases.
MlpParams make_mlp(ParamStore& store, const std::string& name, std::size_t in_width,
                   const std::vector<std::size_t>& widths, std::uint64_t& ordinal,
                   std::uint64_t seed, Activation activation = Activation::Relu);

ad::Var apply_mlp(ad::Tape& t, ad::Var x, const MlpParams& mlp);

/// LSTM cell with gate blocks ordered [input, forget, candidate, output].
struct LstmParams {
  ParamId w_input = 0;   // in x 4H
  ParamId w_hidden = 0;  // H x 4H
  ParamId bias = 0;      // 1 x 4H
  std::size_t hidden = 0;
};

LstmParams make_lstm(ParamStore& store, const std::string& name, std::size_t in_width,
                     std::size_t hidden, std::uint64_t& ordinal, std::uint64_t seed,
                     double forget_bias = 1.0);

struct LstmState {
  ad::Var h;
  ad::Var c;
};

/// One LSTM update over a batch of rows: x is BxI, h and c are BxH.
LstmState lstm_step(ad::Tape& t, const LstmState& state, ad::Var x, const LstmParams& p);

}  // namespace l2g
