#include "osteoplan/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "osteoplan/errors.hpp"

namespace osteoplan {

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

Plane Plane::from_normal(const Point3& origin, const Eigen::Vector3d& normal) {
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw Error("plane normal must be a finite nonzero vector");
  Plane plane;
  plane.origin = origin;
  plane.normal = normal / len;
  // Seed the roll axis with the world axis least aligned with the normal.
  Eigen::Index axis = 0;
  plane.normal.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d seed = Eigen::Vector3d::Unit(axis);
  plane.roll_axis = (seed - seed.dot(plane.normal) * plane.normal).normalized();
  plane.pitch_axis = plane.normal.cross(plane.roll_axis);
  return plane;
}

Eigen::Matrix3d Plane::frame() const {
  Eigen::Matrix3d f;
  f.col(0) = roll_axis;
  f.col(1) = pitch_axis;
  f.col(2) = normal;
  return f;
}

bool Plane::is_orthonormal(double tol) const {
  const Eigen::Matrix3d f = frame();
  return (f.transpose() * f - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(f.determinant() - 1.0) <= tol;
}

std::size_t TriMesh::clean(double area_eps) {
  const int n = static_cast<int>(vertices.size());
  std::vector<std::array<int, 3>> kept;
  kept.reserve(faces.size());
  for (const auto& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) throw Error("mesh face references vertex " + std::to_string(idx) + " of " + std::to_string(n));
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
    const Point3& a = vertices[f[0]];
    const double area2 = (vertices[f[1]] - a).cross(vertices[f[2]] - a).norm();
    if (area2 <= 2.0 * area_eps) continue;
    kept.push_back(f);
  }
  const std::size_t removed = faces.size() - kept.size();
  faces = std::move(kept);
  return removed;
}

bool TriMesh::is_watertight() const {
  if (faces.empty()) return false;
  auto key = [](int a, int b) { return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b); };
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(faces.size() * 3);
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) ++directed[key(f[e], f[(e + 1) % 3])];
  }
  for (const auto& [k, count] : directed) {
    if (count != 1) return false;
    const int a = static_cast<int>(k >> 32);
    const int b = static_cast<int>(k & 0xffffffffu);
    auto it = directed.find(key(b, a));
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

double perpendicular_deviation(const Point3& pk, const Point3& p1, const Point3& pn) {
  const Eigen::Vector3d seg = pn - p1;
  const double len = seg.norm();
  if (!(len > 0.0)) throw Error("perpendicular_deviation: degenerate segment (p1 == pn)");
  return seg.cross(p1 - pk).norm() / len;
}

std::vector<std::size_t> rdp_simplify(const Polyline3& contour, double tolerance) {
  if (contour.size() < 2) throw Error("rdp_simplify: contour needs at least 2 vertices");
  if (!(tolerance > 0.0)) throw Error("rdp_simplify: tolerance must be positive");

  const std::size_t n = contour.size();
  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;

  std::vector<std::pair<std::size_t, std::size_t>> spans{{0, n - 1}};
  while (!spans.empty()) {
    const auto [first, last] = spans.back();
    spans.pop_back();
    if (last <= first + 1) continue;
    const bool closed_span = (contour[last] - contour[first]).norm() == 0.0;
    double best = -1.0;
    std::size_t split = first;
    for (std::size_t k = first + 1; k < last; ++k) {
      const double dev = closed_span ? (contour[k] - contour[first]).norm()
                                     : perpendicular_deviation(contour[k], contour[first], contour[last]);
      if (dev > best) {
        best = dev;
        split = k;
      }
    }
    if (best > tolerance) {
      keep[split] = true;
      spans.emplace_back(split, last);
      spans.emplace_back(first, split);
    }
  }

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

Plane rotate_plane(const Plane& plane, double roll_deg, double pitch_deg) {
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(deg_to_rad(roll_deg), Eigen::Vector3d::UnitX()) *
                               Eigen::AngleAxisd(deg_to_rad(pitch_deg), Eigen::Vector3d::UnitY()))
                                  .toRotationMatrix();
  Eigen::Matrix3d f = plane.frame() * rot;
  // Re-orthonormalise so long compositions do not drift.
  Eigen::Vector3d x = f.col(0).normalized();
  Eigen::Vector3d y = (f.col(1) - f.col(1).dot(x) * x).normalized();
  Plane out;
  out.origin = plane.origin;
  out.roll_axis = x;
  out.pitch_axis = y;
  out.normal = x.cross(y);
  return out;
}

Plane offset_plane(const Plane& plane, double distance) {
  Plane out = plane;
  out.origin = plane.origin + distance * plane.normal;
  return out;
}

std::size_t project_to_surface(const Point3& p, const TriMesh& mesh) {
  if (mesh.vertices.empty()) throw Error("project_to_surface: empty mesh");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double d2 = (mesh.vertices[i] - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

double cross_section_area(const TriMesh& mesh, const Plane& plane) {
  if (!mesh.is_watertight()) throw UnreliableSectionError("cross_section_area: mesh is not closed; section unreliable");

  const std::size_t nv = mesh.vertices.size();
  std::vector<double> dist(nv);
  for (std::size_t i = 0; i < nv; ++i) dist[i] = plane.signed_distance(mesh.vertices[i]);

  // Vertices exactly on the plane count as above it, so shared edges always
  // agree on whether (and where) they cross.
  auto above = [&](int i) { return dist[i] >= 0.0; };
  auto edge_point = [&](int i, int j) -> Point3 {
    if (i > j) std::swap(i, j);
    const double t = dist[i] / (dist[i] - dist[j]);
    return mesh.vertices[i] + t * (mesh.vertices[j] - mesh.vertices[i]);
  };

  double twice_area = 0.0;
  for (const auto& f : mesh.faces) {
    const bool a0 = above(f[0]), a1 = above(f[1]), a2 = above(f[2]);
    if (a0 == a1 && a1 == a2) continue;
    Point3 pts[2];
    int found = 0;
    for (int e = 0; e < 3; ++e) {
      const int i = f[e], j = f[(e + 1) % 3];
      if (above(i) != above(j)) pts[found++] = edge_point(i, j);
    }
    Point3 a = pts[0], b = pts[1];
    const Eigen::Vector3d face_normal =
        (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    // Boundary runs counter-clockwise about the plane normal, interior on the left.
    if (plane.normal.cross(b - a).dot(face_normal) > 0.0) std::swap(a, b);
    twice_area += (a - plane.origin).cross(b - plane.origin).dot(plane.normal);
  }
  return std::abs(0.5 * twice_area) / 100.0;  // mm^2 -> cm^2
}

TriMesh make_box(const Point3& lo, const Point3& hi) {
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  }
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

TriMesh make_ellipsoid(const Point3& center, const Eigen::Vector3d& radii, int n_lat, int n_lon) {
  if (n_lat < 2 || n_lon < 3) throw Error("make_ellipsoid: need n_lat >= 2 and n_lon >= 3");
  TriMesh m;
  auto at = [&](double theta, double phi) {
    return Point3(center.x() + radii.x() * std::sin(theta) * std::cos(phi),
                  center.y() + radii.y() * std::sin(theta) * std::sin(phi), center.z() + radii.z() * std::cos(theta));
  };
  m.vertices.push_back(center + Eigen::Vector3d(0, 0, radii.z()));
  for (int k = 1; k < n_lat; ++k) {
    const double theta = std::numbers::pi * k / n_lat;
    for (int j = 0; j < n_lon; ++j) m.vertices.push_back(at(theta, 2.0 * std::numbers::pi * j / n_lon));
  }
  m.vertices.push_back(center - Eigen::Vector3d(0, 0, radii.z()));
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int k, int j) { return 1 + (k - 1) * n_lon + (j % n_lon); };

  for (int j = 0; j < n_lon; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int k = 1; k < n_lat - 1; ++k) {
    for (int j = 0; j < n_lon; ++j) {
      const int a = ring(k, j), b = ring(k, j + 1), c = ring(k + 1, j), d = ring(k + 1, j + 1);
      m.faces.push_back({a, c, d});
      m.faces.push_back({a, d, b});
    }
  }
  for (int j = 0; j < n_lon; ++j) m.faces.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)});
  return m;
}

}  // namespace osteoplan
