#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "l2g/model.hpp"
#include "l2g/training.hpp"

namespace l2g {

/// Hyper-parameters of the one-vs-rest linear SVM.
struct SvmConfig {
  double lambda = 1e-3;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

/// Everything a `train` or `eval` run reads from a config file.
struct RunConfig {
  ModelConfig model = ModelConfig::desk();
  TrainConfig train;
  SvmConfig svm;
};

/// Attention ablations: point only, area (scale) only, region only, none, all.
enum class AttentionAblation { PL, AL, RL, NSA, ASA };
/// Loss ablations: local term only, global term only, both.
enum class LossAblation { Local, Global, LocalGlobal };

void apply(AttentionAblation a, ModelConfig& config);
void apply(LossAblation a, TrainConfig& config);
AttentionAblation attention_ablation_from_string(const std::string& s);
LossAblation loss_ablation_from_string(const std::string& s);
std::string to_string(AttentionAblation a);
std::string to_string(LossAblation a);

/// Ordered key -> value pairs as written in the file.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; '#' starts a comment; blank lines are ignored.
/// Throws DataError with the line number on malformed input.
KeyValues parse_key_values(std::istream& in);

/// Apply settings in order. `preset` (toy|desk|full) resets the model block,
/// so it should come first. Unknown keys and bad values raise InvalidInput.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
void apply_settings(RunConfig& config, const KeyValues& settings);

RunConfig load_run_config(const std::filesystem::path& path);

/// Parses "key=value" (as passed to --set).
std::pair<std::string, std::string> split_override(const std::string& text);

/// Serialize every setting; parse_key_values + apply_settings round-trips it.
void write_run_config(std::ostream& out, const RunConfig& config);

}  // namespace l2g
