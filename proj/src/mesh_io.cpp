#include "osteoplan/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "osteoplan/errors.hpp"

namespace osteoplan {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

// OBJ face tokens look like "7", "7/1", "7//3" or "-1".
int obj_index(const std::string& token, int nverts) {
  const int raw = std::stoi(token.substr(0, token.find('/')));
  return raw < 0 ? nverts + raw : raw - 1;
}

TriMesh parse_obj(const std::filesystem::path& path) {
  auto in = open_in(path);
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw Error(fmt::format("{}:{}: malformed vertex", path.string(), lineno));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) idx.push_back(obj_index(tok, static_cast<int>(mesh.vertices.size())));
      if (idx.size() != 3) throw Error(fmt::format("{}:{}: only triangular faces are supported", path.string(), lineno));
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  return mesh;
}

TriMesh parse_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw Error(path.string() + ": missing ply magic");

  std::size_t nverts = 0, nfaces = 0;
  int vertex_props = 0;
  std::string current;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string kind;
      ls >> kind;
      ascii = (kind == "ascii");
    } else if (tag == "element") {
      ls >> current;
      std::size_t count = 0;
      ls >> count;
      if (current == "vertex") nverts = count;
      else if (current == "face") nfaces = count;
    } else if (tag == "property" && current == "vertex") {
      ++vertex_props;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw Error(path.string() + ": only ASCII PLY is supported");
  if (vertex_props < 3) throw Error(path.string() + ": vertex element needs x y z");

  TriMesh mesh;
  mesh.vertices.reserve(nverts);
  for (std::size_t i = 0; i < nverts; ++i) {
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw Error(path.string() + ": malformed vertex row");
    mesh.vertices.emplace_back(x, y, z);
  }
  for (std::size_t i = 0; i < nfaces; ++i) {
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated face list");
    std::istringstream ls(line);
    int count = 0;
    ls >> count;
    if (count != 3) throw Error(path.string() + ": only triangular faces are supported");
    std::array<int, 3> f{};
    if (!(ls >> f[0] >> f[1] >> f[2])) throw Error(path.string() + ": malformed face row");
    mesh.faces.push_back(f);
  }
  return mesh;
}

}  // namespace

TriMesh read_obj(const std::filesystem::path& path) {
  TriMesh mesh = parse_obj(path);
  mesh.clean();
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = open_out(path);
  for (const auto& v : mesh.vertices) out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& f : mesh.faces) out << fmt::format("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
}

TriMesh read_ply(const std::filesystem::path& path) {
  TriMesh mesh = parse_ply(path);
  mesh.clean();
  return mesh;
}

void write_ply(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\nproperty double x\nproperty double y\nproperty double z\n";
  out << "element face " << mesh.faces.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) out << fmt::format("{:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& f : mesh.faces) out << fmt::format("3 {} {} {}\n", f[0], f[1], f[2]);
}

TriMesh read_mesh(const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw Error("unsupported mesh format: " + path.string());
}

void write_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  const auto ext = lower_ext(path);
  if (ext == ".obj") return write_obj(path, mesh);
  if (ext == ".ply") return write_ply(path, mesh);
  throw Error("unsupported mesh format: " + path.string());
}

std::vector<Point3> read_points(const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".obj") return parse_obj(path).vertices;
  if (ext == ".ply") return parse_ply(path).vertices;
  if (ext == ".csv") return read_polyline_csv(path);
  throw Error("unsupported point format: " + path.string());
}

Polyline3 read_polyline_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  Polyline3 pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    double x, y, z;
    const bool numeric = cells.size() == 3 && parse_double(cells[0], x) && parse_double(cells[1], y) && parse_double(cells[2], z);
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(path.string() + ": malformed polyline row: " + line);
    }
    first = false;
    pts.emplace_back(x, y, z);
  }
  return pts;
}

void write_polyline_csv(const std::filesystem::path& path, const Polyline3& line) {
  auto out = open_out(path);
  out << "x,y,z\n";
  for (const auto& p : line) out << fmt::format("{:.17g},{:.17g},{:.17g}\n", p.x(), p.y(), p.z());
}

std::vector<NamedPoint> read_landmarks_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<NamedPoint> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (lineno == 1 && !cells.empty() && cells[0] == "name") continue;
    NamedPoint p;
    double x, y, z;
    if (cells.size() != 5 || !parse_double(cells[2], x) || !parse_double(cells[3], y) || !parse_double(cells[4], z))
      throw Error(fmt::format("{}:{}: expected name,parent,x,y,z", path.string(), lineno));
    p.name = cells[0];
    p.parent = cells[1];
    p.position = Point3(x, y, z);
    out.push_back(std::move(p));
  }
  return out;
}

void write_landmarks_csv(const std::filesystem::path& path, const std::vector<NamedPoint>& points) {
  auto out = open_out(path);
  out << "name,parent,x,y,z\n";
  for (const auto& p : points)
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", p.name, p.parent, p.position.x(), p.position.y(), p.position.z());
}

}  // namespace osteoplan
