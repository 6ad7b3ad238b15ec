#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace osteoplan {

/// Coordinates in millimetres.
using Point3 = Eigen::Vector3d;
using Polyline3 = std::vector<Point3>;

/// A cutting plane with a right-handed local frame. The normal is the local
/// z axis; roll is about local x and pitch about local y.
struct Plane {
  Point3 origin = Point3::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d roll_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d pitch_axis = Eigen::Vector3d::UnitY();

  /// Builds a plane from an origin and a normal, completing the frame with
  /// an arbitrary but deterministic roll axis.
  static Plane from_normal(const Point3& origin, const Eigen::Vector3d& normal);

  /// Frame as columns [roll, pitch, normal].
  Eigen::Matrix3d frame() const;

  bool is_orthonormal(double tol = 1e-9) const;

  /// Signed distance of p along the normal.
  double signed_distance(const Point3& p) const { return normal.dot(p - origin); }
};

/// Indexed triangle surface. Vertices are in millimetres.
struct TriMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<int, 3>> faces;

  bool empty() const { return vertices.empty(); }

  /// Validates face indices (throws on out-of-range) and drops zero-area
  /// faces. Returns the number of faces removed.
  std::size_t clean(double area_eps = 1e-14);

  /// True when every undirected edge is shared by exactly two faces that
  /// traverse it in opposite directions.
  bool is_watertight() const;
};

/// Distance from pk to the infinite line through p1 and pn.
double perpendicular_deviation(const Point3& pk, const Point3& p1, const Point3& pn);

/// Ramer-Douglas-Peucker simplification. Returns retained vertex indices in
/// increasing order, always including both endpoints. A span is split at its
/// maximal-deviation vertex (lowest index on ties) when that deviation is
/// strictly greater than `tolerance` (mm). Spans whose endpoints coincide use
/// the point-to-point distance instead of the line deviation.
std::vector<std::size_t> rdp_simplify(const Polyline3& contour, double tolerance);

/// Rotates the plane about its local roll axis, then about the rolled local
/// pitch axis (right-hand rule, degrees). Origin is unchanged.
Plane rotate_plane(const Plane& plane, double roll_deg, double pitch_deg);

/// Translates the plane origin by `distance` (mm) along its unit normal.
Plane offset_plane(const Plane& plane, double distance);

/// Index of the mesh vertex closest to p; ties resolve to the lowest index.
std::size_t project_to_surface(const Point3& p, const TriMesh& mesh);

/// Area (cm^2) of the region where `plane` cuts a closed mesh. Disjoint loops
/// add up and nested loops subtract. Throws UnreliableSectionError on an open
/// mesh.
double cross_section_area(const TriMesh& mesh, const Plane& plane);

/// Axis-aligned box with outward-facing triangles.
TriMesh make_box(const Point3& lo, const Point3& hi);

/// Closed UV-sphere tessellation of an axis-aligned ellipsoid.
TriMesh make_ellipsoid(const Point3& center, const Eigen::Vector3d& radii, int n_lat, int n_lon);

double deg_to_rad(double deg);

}  // namespace osteoplan
