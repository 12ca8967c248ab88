#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "l2g/model.hpp"

namespace l2g {

inline constexpr char kCheckpointMagic[8] = {'L', '2', 'G', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container:
///   magic[8] | u32 version | u64 header bytes | JSON header | f64 payloads
/// The JSON header carries the model configuration, the model seed and one
/// entry per parameter (name, rows, cols, init record). Payloads follow in
/// header order, row-major, little-endian IEEE-754.
void save_checkpoint(std::ostream& out, const Model& model);
void save_checkpoint(const std::filesystem::path& path, const Model& model);

/// Rebuilds the model layout from the stored configuration and verifies that
/// every parameter name and shape matches. Throws CheckpointError otherwise.
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::filesystem::path& path);

/// Human-readable one-line summary of the architecture dimensions.
std::string describe_dimensions(const ModelConfig& config);

}  // namespace l2g
