#include "l2g/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "l2g/errors.hpp"

namespace l2g {
namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"num_points", c.num_points},
              {"num_regions", c.num_regions},
              {"scales", c.scales},
              {"feature_dim", c.feature_dim},
              {"global_dim", c.global_dim},
              {"attention_dim", c.attention_dim},
              {"point_mlp", c.point_mlp},
              {"point_attention", c.point_attention},
              {"scale_attention", c.scale_attention},
              {"region_attention", c.region_attention},
              {"centroid_relative", c.centroid_relative},
              {"interp_c", c.interpolation.c},
              {"interp_epsilon", c.interpolation.epsilon},
              {"forget_bias", c.forget_bias},
              {"fps_seed", c.fps_seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  j.at("num_points").get_to(c.num_points);
  j.at("num_regions").get_to(c.num_regions);
  j.at("scales").get_to(c.scales);
  j.at("feature_dim").get_to(c.feature_dim);
  j.at("global_dim").get_to(c.global_dim);
  j.at("attention_dim").get_to(c.attention_dim);
  j.at("point_mlp").get_to(c.point_mlp);
  j.at("point_attention").get_to(c.point_attention);
  j.at("scale_attention").get_to(c.scale_attention);
  j.at("region_attention").get_to(c.region_attention);
  j.at("centroid_relative").get_to(c.centroid_relative);
  j.at("interp_c").get_to(c.interpolation.c);
  j.at("interp_epsilon").get_to(c.interpolation.epsilon);
  j.at("forget_bias").get_to(c.forget_bias);
  j.at("fps_seed").get_to(c.fps_seed);
  return c;
}

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model) {
  json header;
  header["config"] = config_to_json(model.config());
  header["seed"] = model.seed();
  json table = json::array();
  for (const auto& p : model.params()) {
    table.push_back({{"name", p.name},
                     {"rows", p.value.rows()},
                     {"cols", p.value.cols()},
                     {"init", {{"scheme", std::string(to_string(p.init.scheme))},
                               {"seed", p.init.seed},
                               {"value", p.init.value}}}});
  }
  header["params"] = std::move(table);
  const std::string text = header.dump();

  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_raw(out, kCheckpointVersion);
  write_raw(out, std::uint64_t(text.size()));
  out.write(text.data(), std::streamsize(text.size()));
  for (const auto& p : model.params()) {
    out.write(reinterpret_cast<const char*>(p.value.data()),
              std::streamsize(p.value.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  // Write to a sibling file first so an interrupted save never clobbers the old one.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint '" + tmp.string() + "'");
    save_checkpoint(out, model);
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw CheckpointError("not an l2g checkpoint (bad magic)");
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto header_bytes = read_raw<std::uint64_t>(in);
  std::string text(header_bytes, '\0');
  in.read(text.data(), std::streamsize(header_bytes));
  if (!in) throw CheckpointError("checkpoint header truncated");

  json header;
  ModelConfig config;
  std::uint64_t seed = 0;
  try {
    header = json::parse(text);
    config = config_from_json(header.at("config"));
    seed = header.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  Model model(config, seed);
  const auto& table = header.at("params");
  if (table.size() != model.params().size()) {
    throw CheckpointError("checkpoint has " + std::to_string(table.size()) +
                          " parameters, layout expects " + std::to_string(model.params().size()));
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    Param& p = model.params()[ParamId(i)];
    const auto& entry = table[i];
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<std::size_t>();
    const auto cols = entry.at("cols").get<std::size_t>();
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      std::ostringstream os;
      os << "checkpoint parameter '" << name << "' " << rows << "x" << cols
         << " does not match layout '" << p.name << "' " << p.value.rows() << "x" << p.value.cols();
      throw CheckpointError(os.str());
    }
    const auto& init = entry.at("init");
    p.init.scheme = init_scheme_from_string(init.at("scheme").get<std::string>());
    p.init.seed = init.at("seed").get<std::uint64_t>();
    p.init.value = init.at("value").get<double>();
  }
  for (auto& p : model.params()) {
    in.read(reinterpret_cast<char*>(p.value.data()),
            std::streamsize(p.value.size() * sizeof(double)));
    if (!in) throw CheckpointError("checkpoint payload truncated at '" + p.name + "'");
  }
  return model;
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return load_checkpoint(in);
}

std::string describe_dimensions(const ModelConfig& c) {
  std::ostringstream os;
  os << "N=" << c.num_points << " M=" << c.num_regions << " K=[";
  for (std::size_t t = 0; t < c.scales.size(); ++t) os << (t ? "," : "") << c.scales[t];
  os << "] D=" << c.feature_dim << " D_global=" << c.global_dim << " C=" << c.c_dim();
  return os.str();
}

}  // namespace l2g
