#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osteoplan/geometry.hpp"

namespace osteoplan {

// ASCII OBJ / PLY, triangles only. Readers call TriMesh::clean().
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const TriMesh& mesh);

/// Dispatches on extension (.obj / .ply, case-insensitive).
TriMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriMesh& mesh);

/// Vertex positions of a mesh file; faces may be absent (point-cloud PLY/OBJ).
std::vector<Point3> read_points(const std::filesystem::path& path);

/// Polyline as CSV rows "x,y,z". An optional non-numeric header row is skipped.
Polyline3 read_polyline_csv(const std::filesystem::path& path);
void write_polyline_csv(const std::filesystem::path& path, const Polyline3& line);

struct NamedPoint {
  std::string name;
  std::string parent;  // anatomical support, e.g. "mandible"
  Point3 position = Point3::Zero();
};

/// Landmark CSV with header "name,parent,x,y,z".
std::vector<NamedPoint> read_landmarks_csv(const std::filesystem::path& path);
void write_landmarks_csv(const std::filesystem::path& path, const std::vector<NamedPoint>& points);

}  // namespace osteoplan
