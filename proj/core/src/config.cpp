#include "l2g/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "l2g/errors.hpp"

namespace l2g {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw InvalidInput("config: bad value '" + value + "' for key '" + key + "'");
}

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto v = lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<std::size_t>(key, trim(item)));
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

void apply(AttentionAblation a, ModelConfig& c) {
  c.point_attention = a == AttentionAblation::PL || a == AttentionAblation::ASA;
  c.scale_attention = a == AttentionAblation::AL || a == AttentionAblation::ASA;
  c.region_attention = a == AttentionAblation::RL || a == AttentionAblation::ASA;
}

void apply(LossAblation a, TrainConfig& c) {
  c.use_local_loss = a != LossAblation::Global;
  c.use_global_loss = a != LossAblation::Local;
}

AttentionAblation attention_ablation_from_string(const std::string& s) {
  const auto v = lower(s);
  if (v == "pl") return AttentionAblation::PL;
  if (v == "al") return AttentionAblation::AL;
  if (v == "rl") return AttentionAblation::RL;
  if (v == "nsa") return AttentionAblation::NSA;
  if (v == "asa") return AttentionAblation::ASA;
  throw InvalidInput("unknown attention ablation '" + s + "' (PL|AL|RL|NSA|ASA)");
}

LossAblation loss_ablation_from_string(const std::string& s) {
  const auto v = lower(s);
  if (v == "local") return LossAblation::Local;
  if (v == "global") return LossAblation::Global;
  if (v == "local+global" || v == "both") return LossAblation::LocalGlobal;
  throw InvalidInput("unknown loss ablation '" + s + "' (local|global|local+global)");
}

std::string to_string(AttentionAblation a) {
  switch (a) {
    case AttentionAblation::PL: return "PL";
    case AttentionAblation::AL: return "AL";
    case AttentionAblation::RL: return "RL";
    case AttentionAblation::NSA: return "NSA";
    case AttentionAblation::ASA: return "ASA";
  }
  return "?";
}

std::string to_string(LossAblation a) {
  switch (a) {
    case LossAblation::Local: return "Local";
    case LossAblation::Global: return "Global";
    case LossAblation::LocalGlobal: return "Local+Global";
  }
  return "?";
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = trim(std::string_view(text).substr(0, eq));
    auto value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& m = cfg.model;
  auto& t = cfg.train;
  const auto size = [&] { return parse_integer<std::size_t>(key, value); };
  const auto u64 = [&] { return parse_integer<std::uint64_t>(key, value); };
  const auto real = [&] { return parse_real(key, value); };
  const auto flag = [&] { return parse_bool(key, value); };

  if (key == "preset") {
    const auto v = lower(value);
    if (v == "toy") m = ModelConfig::toy();
    else if (v == "desk") m = ModelConfig::desk();
    else if (v == "full") m = ModelConfig::full();
    else bad_value(key, value);
  } else if (key == "num_points") m.num_points = size();
  else if (key == "num_regions") m.num_regions = size();
  else if (key == "scales") m.scales = parse_list(key, value);
  else if (key == "feature_dim") m.feature_dim = size();
  else if (key == "global_dim") m.global_dim = size();
  else if (key == "attention_dim") m.attention_dim = size();
  else if (key == "point_mlp") m.point_mlp = parse_list(key, value);
  else if (key == "point_attention") m.point_attention = flag();
  else if (key == "scale_attention") m.scale_attention = flag();
  else if (key == "region_attention") m.region_attention = flag();
  else if (key == "attention") apply(attention_ablation_from_string(value), m);
  else if (key == "centroid_relative") m.centroid_relative = flag();
  else if (key == "interp_c") m.interpolation.c = real();
  else if (key == "interp_epsilon") m.interpolation.epsilon = real();
  else if (key == "forget_bias") m.forget_bias = real();
  else if (key == "fps_seed") m.fps_seed = u64();
  else if (key == "learning_rate") t.learning_rate = real();
  else if (key == "batch_size") t.batch_size = size();
  else if (key == "lr_decay_factor") t.lr_decay_factor = real();
  else if (key == "lr_decay_every_epochs") t.lr_decay_every_epochs = size();
  else if (key == "epochs") t.epochs = size();
  else if (key == "seed") t.seed = u64();
  else if (key == "gamma") t.gamma = real();
  else if (key == "use_local_loss") t.use_local_loss = flag();
  else if (key == "use_global_loss") t.use_global_loss = flag();
  else if (key == "loss") apply(loss_ablation_from_string(value), t);
  else if (key == "adam_beta1") t.adam.beta1 = real();
  else if (key == "adam_beta2") t.adam.beta2 = real();
  else if (key == "adam_epsilon") t.adam.epsilon = real();
  else if (key == "save_every") t.save_every = size();
  else if (key == "threads") t.threads = size();
  else if (key == "svm_lambda") cfg.svm.lambda = real();
  else if (key == "svm_epochs") cfg.svm.epochs = size();
  else if (key == "svm_seed") cfg.svm.seed = u64();
  else throw InvalidInput("config: unknown key '" + key + "'");
}

void apply_settings(RunConfig& config, const KeyValues& settings) {
  for (const auto& [k, v] : settings) apply_setting(config, k, v);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  RunConfig cfg;
  apply_settings(cfg, parse_key_values(in));
  return cfg;
}

std::pair<std::string, std::string> split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InvalidInput("override '" + text + "' is not key=value");
  auto key = trim(std::string_view(text).substr(0, eq));
  if (key.empty()) throw InvalidInput("override '" + text + "' has an empty key");
  return {key, trim(std::string_view(text).substr(eq + 1))};
}

void write_run_config(std::ostream& out, const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  const auto flags = out.flags();
  out << std::boolalpha << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "num_points = " << m.num_points << '\n'
      << "num_regions = " << m.num_regions << '\n'
      << "scales = " << join(m.scales) << '\n'
      << "feature_dim = " << m.feature_dim << '\n'
      << "global_dim = " << m.global_dim << '\n'
      << "attention_dim = " << m.attention_dim << '\n'
      << "point_mlp = " << join(m.point_mlp) << '\n'
      << "point_attention = " << m.point_attention << '\n'
      << "scale_attention = " << m.scale_attention << '\n'
      << "region_attention = " << m.region_attention << '\n'
      << "centroid_relative = " << m.centroid_relative << '\n'
      << "interp_c = " << m.interpolation.c << '\n'
      << "interp_epsilon = " << m.interpolation.epsilon << '\n'
      << "forget_bias = " << m.forget_bias << '\n'
      << "fps_seed = " << m.fps_seed << '\n'
      << "learning_rate = " << t.learning_rate << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "lr_decay_factor = " << t.lr_decay_factor << '\n'
      << "lr_decay_every_epochs = " << t.lr_decay_every_epochs << '\n'
      << "epochs = " << t.epochs << '\n'
      << "seed = " << t.seed << '\n'
      << "gamma = " << t.gamma << '\n'
      << "use_local_loss = " << t.use_local_loss << '\n'
      << "use_global_loss = " << t.use_global_loss << '\n'
      << "adam_beta1 = " << t.adam.beta1 << '\n'
      << "adam_beta2 = " << t.adam.beta2 << '\n'
      << "adam_epsilon = " << t.adam.epsilon << '\n'
      << "save_every = " << t.save_every << '\n'
      << "threads = " << t.threads << '\n'
      << "svm_lambda = " << c.svm.lambda << '\n'
      << "svm_epochs = " << c.svm.epochs << '\n'
      << "svm_seed = " << c.svm.seed << '\n';
  out.flags(flags);
}

}  // namespace l2g
