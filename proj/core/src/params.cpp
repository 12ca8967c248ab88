#include "l2g/params.hpp"

#include <cmath>
#include <random>

#include "l2g/errors.hpp"

namespace l2g {

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::XavierUniform: return "xavier_uniform";
    case InitScheme::Zeros: return "zeros";
    case InitScheme::LstmGateBias: return "lstm_gate_bias";
    case InitScheme::Constant: return "constant";
  }
  return "unknown";
}

InitScheme init_scheme_from_string(std::string_view name) {
  if (name == "xavier_uniform") return InitScheme::XavierUniform;
  if (name == "zeros") return InitScheme::Zeros;
  if (name == "lstm_gate_bias") return InitScheme::LstmGateBias;
  if (name == "constant") return InitScheme::Constant;
  throw InvalidInput("unknown init scheme '" + std::string(name) + "'");
}

std::uint64_t derive_seed(std::uint64_t model_seed, std::uint64_t ordinal) noexcept {
  // splitmix64 over the combined key
  std::uint64_t z = model_seed + 0x9E3779B97F4A7C15ULL * (ordinal + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void apply_init(Matrix& m, const InitRecord& init) {
  switch (init.scheme) {
    case InitScheme::XavierUniform: {
      const double limit = std::sqrt(6.0 / double(m.rows() + m.cols()));
      std::mt19937_64 rng(init.seed);
      for (auto& v : m.values()) {
        const double u = double(rng() >> 11) * 0x1.0p-53;
        v = (2.0 * u - 1.0) * limit;
      }
      break;
    }
    case InitScheme::Zeros:
      m.fill(0.0);
      break;
    case InitScheme::Constant:
      m.fill(init.value);
      break;
    case InitScheme::LstmGateBias: {
      if (m.cols() % 4 != 0) throw ShapeError("LSTM bias width must be a multiple of 4");
      m.fill(0.0);
      const std::size_t hidden = m.cols() / 4;
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = hidden; c < 2 * hidden; ++c) m(r, c) = init.value;
      break;
    }
  }
}

ParamId ParamStore::add(std::string name, std::size_t rows, std::size_t cols, InitRecord init) {
  Matrix value(rows, cols);
  apply_init(value, init);
  return add_value(std::move(name), std::move(value), init);
}

ParamId ParamStore::add_value(std::string name, Matrix value, InitRecord init) {
  if (find(name)) throw InvalidInput("duplicate parameter '" + name + "'");
  params_.push_back(Param{std::move(name), std::move(value), init});
  return ParamId(params_.size() - 1);
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return ParamId(i);
  }
  return std::nullopt;
}

ParamId ParamStore::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw InvalidInput("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Matrix> ParamStore::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.rows(), p.value.cols());
  return out;
}

void ParamStore::reinitialize() {
  for (auto& p : params_) apply_init(p.value, p.init);
}

}  // namespace l2g
