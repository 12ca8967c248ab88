#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "l2g/matrix.hpp"

namespace l2g {

using ParamId = std::uint32_t;

enum class InitScheme {
  XavierUniform,   // U(-a, a), a = sqrt(6 / (rows + cols))
  Zeros,
  LstmGateBias,    // zeros, except the forget-gate block [H, 2H) set to `value`
  Constant,
};

std::string_view to_string(InitScheme scheme);
InitScheme init_scheme_from_string(std::string_view name);

struct InitRecord {
  InitScheme scheme = InitScheme::Zeros;
  std::uint64_t seed = 0;
  double value = 0.0;

  bool operator==(const InitRecord&) const = default;
};

struct Param {
  std::string name;
  Matrix value;
  InitRecord init;
};

/// Named learnable tensors. Ids are dense and stable in insertion order.
class ParamStore {
 public:
  ParamId add(std::string name, std::size_t rows, std::size_t cols, InitRecord init);
  /// Insert an already-materialized value (checkpoint loading).
  ParamId add_value(std::string name, Matrix value, InitRecord init);

  [[nodiscard]] std::optional<ParamId> find(std::string_view name) const;
  /// Throws InvalidInput when the name is unknown.
  [[nodiscard]] ParamId id(std::string_view name) const;

  Param& operator[](ParamId id) { return params_.at(id); }
  const Param& operator[](ParamId id) const { return params_.at(id); }

  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const noexcept;

  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }

  /// Zero matrices shaped like every parameter, indexed by ParamId.
  [[nodiscard]] std::vector<Matrix> zeros_like() const;

  /// Recompute every value from its init record.
  void reinitialize();

 private:
  std::vector<Param> params_;
};

/// Fill `m` according to `init`; deterministic in init.seed.
void apply_init(Matrix& m, const InitRecord& init);

/// Per-parameter seed derived from a model seed and the parameter's ordinal.
std::uint64_t derive_seed(std::uint64_t model_seed, std::uint64_t ordinal) noexcept;

}  // namespace l2g
