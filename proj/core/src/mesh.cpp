#include "l2g/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "l2g/errors.hpp"

namespace l2g {
namespace {

// Next non-empty, non-comment line with any '#' tail stripped.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

double unit_draw(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) noexcept {
  const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Vec3 v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const Vec3 x{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return 0.5 * std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    for (auto v : f) {
      if (v >= mesh.vertices.size()) throw InvalidInput("mesh face references missing vertex");
    }
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw InvalidInput("sample_mesh_surface: mesh has zero surface area");

  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = unit_draw(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[std::size_t(it - cumulative.begin())];
    const double r1 = std::sqrt(unit_draw(rng));
    const double r2 = unit_draw(rng);
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    cloud.points.push_back({wa * a[0] + wb * b[0] + wc * c[0], wa * a[1] + wb * b[1] + wc * c[1],
                            wa * a[2] + wb * b[2] + wc * c[2]});
  }
  return cloud;
}

TriangleMesh read_off(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line)) throw DataError("OFF: empty input");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic.rfind("OFF", 0) != 0) throw DataError("OFF: missing OFF header");

  // Some writers put the counts on the header line ("OFF8 6 0").
  std::string rest = magic.substr(3);
  std::string tail;
  std::getline(header, tail);
  rest += " " + tail;
  if (rest.find_first_not_of(" \t\r") == std::string::npos) {
    if (!next_content_line(in, rest)) throw DataError("OFF: missing element counts");
  }
  std::istringstream counts(rest);
  long long nv = -1, nf = -1;
  counts >> nv >> nf;
  if (!counts || nv < 0 || nf < 0) throw DataError("OFF: malformed element counts");

  TriangleMesh mesh;
  mesh.vertices.reserve(std::size_t(nv));
  for (long long i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw DataError("OFF: truncated vertex list");
    std::istringstream ls(line);
    Vec3 v{};
    ls >> v[0] >> v[1] >> v[2];
    if (!ls) throw DataError("OFF: malformed vertex at index " + std::to_string(i));
    mesh.vertices.push_back(v);
  }
  for (long long i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) throw DataError("OFF: truncated face list");
    std::istringstream ls(line);
    long long count = 0;
    ls >> count;
    if (!ls || count < 3) throw DataError("OFF: malformed face at index " + std::to_string(i));
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(count));
    for (auto& v : idx) {
      long long raw = -1;
      ls >> raw;
      if (!ls || raw < 0 || raw >= nv)
        throw DataError("OFF: bad vertex reference in face " + std::to_string(i));
      v = std::uint32_t(raw);
    }
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
  }
  return mesh;
}

TriangleMesh read_off(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return read_off(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Vec3 p{};
    ls >> p[0] >> p[1] >> p[2];
    std::string extra;
    if (!ls || (ls >> extra))
      throw DataError("XYZ: expected three coordinates on line " + std::to_string(line_no));
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud read_xyz(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    auto cloud = read_xyz(in);
    cloud.id = path.stem().string();
    return cloud;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_xyz(std::ostream& out, std::span<const Vec3> points) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : points) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
}

void write_xyz(const std::filesystem::path& path, std::span<const Vec3> points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_xyz(out, points);
}

}  // namespace l2g
