#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "osteoplan/errors.hpp"
#include "osteoplan/geometry.hpp"
#include "osteoplan/mesh_io.hpp"

using namespace osteoplan;

TEST_SUITE("geometry") {
  TEST_CASE("perpendicular deviation") {
    CHECK(perpendicular_deviation({3, 0, 0}, {0, 0, 0}, {10, 0, 0}) == doctest::Approx(0.0));
    CHECK(perpendicular_deviation({5, 3, 0}, {0, 0, 0}, {10, 0, 0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(perpendicular_deviation({1, 1, 1}, {2, 2, 2}, {2, 2, 2}), Error);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 500; ++i) {
      Point3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), p(u(rng), u(rng), u(rng));
      // area of the triangle from Heron's formula, an independent route
      const double x = (b - a).norm(), y = (p - a).norm(), z = (p - b).norm();
      const double s = 0.5 * (x + y + z);
      const double area = std::sqrt(std::max(0.0, s * (s - x) * (s - y) * (s - z)));
      CHECK(perpendicular_deviation(p, a, b) == doctest::Approx(2.0 * area / x).epsilon(1e-6));

      // reflection of p across the line through a and b
      const Eigen::Vector3d dir = (b - a).normalized();
      const Point3 foot = a + dir * dir.dot(p - a);
      const Point3 mirrored = 2.0 * foot - p;
      CHECK(perpendicular_deviation(mirrored, a, b) == doctest::Approx(perpendicular_deviation(p, a, b)).epsilon(1e-9));
    }
  }

  TEST_CASE("rdp simple cases") {
    Polyline3 line;
    for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, -i);
    CHECK(rdp_simplify(line, 0.01) == std::vector<std::size_t>{0, 19});
    CHECK_THROWS_AS(rdp_simplify({Point3::Zero()}, 1.0), Error);

    // square wave with amplitude twice the tolerance
    const double tol = 0.5;
    Polyline3 wave;
    for (int k = 0; k < 8; ++k) {
      const double h = (k % 2) ? 2 * tol : 0.0;
      wave.emplace_back(2.0 * k, h, 0);
      wave.emplace_back(2.0 * k + 2.0, h, 0);
    }
    const auto kept = rdp_simplify(wave, tol);
    CHECK(kept == oracle::rdp(wave, tol));
    CHECK(kept.size() > 2);

    Polyline3 bump{{0, 0, 0}, {1, 0.3, 0}, {2, 0, 0}};
    CHECK(rdp_simplify(bump, 1.0) == std::vector<std::size_t>{0, 2});
    CHECK(rdp_simplify(bump, 0.3) == std::vector<std::size_t>{0, 2});  // strict
    CHECK(rdp_simplify(bump, 0.29) == std::vector<std::size_t>{0, 1, 2});

    // equal deviations split at the lower index
    Polyline3 twin{{0, 0, 0}, {1, 1, 0}, {2, 1, 0}, {3, 0, 0}};
    CHECK(rdp_simplify(twin, 0.5) == std::vector<std::size_t>{0, 1, 3});
    Polyline3 closed{{0, 0, 0}, {1, 0, 0}, {0, 0, 0}};
    CHECK(rdp_simplify(closed, 0.5) == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("rdp matches brute force and is rigid invariant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t n = 2 + rng() % 120;
      Polyline3 c;
      Point3 p = Point3::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        p += Point3(1.0 + u(rng), u(rng), 0.5 * u(rng));
        c.push_back(p);
      }
      const double tol = 0.05 + 0.5 * (u(rng) + 1.0);
      const auto kept = rdp_simplify(c, tol);
      CHECK(kept == oracle::rdp(c, tol));

      const Eigen::Matrix3d r = oracle::random_rotation(rng);
      Polyline3 moved;
      for (const auto& q : c) moved.push_back(r * q + Eigen::Vector3d(3, -7, 11));
      CHECK(rdp_simplify(moved, tol) == kept);
    }
  }

  TEST_CASE("plane rotation") {
    const Plane p0;
    const Plane same = rotate_plane(p0, 0, 0);
    CHECK((same.normal - p0.normal).norm() == doctest::Approx(0.0));
    CHECK((same.roll_axis - p0.roll_axis).norm() == doctest::Approx(0.0));

    const Plane rolled = rotate_plane(p0, 90, 0);
    CHECK((rolled.normal - Eigen::Vector3d(0, -1, 0)).norm() < 1e-12);
    const Plane pitched = rotate_plane(p0, 0, 90);
    CHECK((pitched.normal - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a(-180, 180);
    Plane p = Plane::from_normal({1, 2, 3}, {0.3, -0.4, 0.8});
    for (int i = 0; i < 10000; ++i) p = rotate_plane(p, a(rng), a(rng));
    CHECK(p.is_orthonormal(1e-9));
    CHECK(p.frame().determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((p.origin - Point3(1, 2, 3)).norm() == 0.0);
  }

  TEST_CASE("plane offset") {
    const Plane p0;
    CHECK(offset_plane(p0, 0).origin == p0.origin);
    CHECK((offset_plane(p0, 25).origin - Point3(0, 0, 25)).norm() < 1e-15);
    const Plane q = Plane::from_normal({1.5, -2, 7}, {1, 1, 1});
    const Plane back = offset_plane(offset_plane(q, 3.7), -3.7);
    CHECK((back.origin - q.origin).norm() < 1e-12);
  }

  TEST_CASE("projection to surface") {
    TriMesh m = make_ellipsoid({0, 0, 0}, {10, 8, 6}, 12, 16);
    CHECK(project_to_surface(m.vertices[5], m) == 5);
    CHECK_THROWS_AS(project_to_surface({0, 0, 0}, TriMesh{}), Error);

    TriMesh ties;
    for (int i = 0; i < 10; ++i) ties.vertices.emplace_back(100.0 + i, 0, 0);
    ties.vertices[3] = Point3(1, 0, 0);
    ties.vertices[7] = Point3(-1, 0, 0);
    CHECK(project_to_surface({0, 0, 0}, ties) == 3);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-15, 15);
    for (int i = 0; i < 300; ++i) {
      const Point3 p(u(rng), u(rng), u(rng));
      std::size_t best = 0;
      for (std::size_t k = 1; k < m.vertices.size(); ++k)
        if ((m.vertices[k] - p).norm() < (m.vertices[best] - p).norm()) best = k;
      const std::size_t got = project_to_surface(p, m);
      CHECK((m.vertices[got] - p).norm() == doctest::Approx((m.vertices[best] - p).norm()));
    }
  }

  TEST_CASE("cross-section area") {
    const TriMesh cube = make_box({-5, -5, -5}, {5, 5, 5});
    CHECK(cube.is_watertight());
    CHECK(cross_section_area(cube, Plane{}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cross_section_area(cube, Plane::from_normal({0, 0, 0}, {1, 0, 0})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cross_section_area(cube, offset_plane(Plane{}, 20)) == 0.0);

    const double r = 10.0;
    const TriMesh sphere = make_ellipsoid({0, 0, 0}, {r, r, r}, 160, 320);
    for (double h : {0.0, 3.0, 6.5}) {
      const double want = std::numbers::pi * (r * r - h * h) / 100.0;
      const double got = cross_section_area(sphere, offset_plane(Plane{}, h));
      CHECK(std::abs(got - want) / want < 0.02);
    }

    // two disjoint boxes add, a tilted cut through one box grows by 1/cos
    TriMesh two = make_box({0, 0, 0}, {10, 10, 10});
    const TriMesh other = make_box({20, 0, 0}, {25, 10, 10});
    const int base = static_cast<int>(two.vertices.size());
    two.vertices.insert(two.vertices.end(), other.vertices.begin(), other.vertices.end());
    for (auto f : other.faces) two.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    CHECK(cross_section_area(two, Plane::from_normal({0, 0, 5}, {0, 0, 1})) == doctest::Approx(1.5));
    CHECK(cross_section_area(cube, rotate_plane(Plane{}, 30, 0)) ==
          doctest::Approx(1.0 / std::cos(std::numbers::pi / 6)).epsilon(1e-9));

    TriMesh open = cube;
    open.faces.pop_back();
    CHECK_THROWS_AS(cross_section_area(open, Plane{}), UnreliableSectionError);
  }

  TEST_CASE("mesh cleaning") {
    TriMesh m = make_box({0, 0, 0}, {1, 1, 1});
    m.faces.push_back({0, 0, 1});
    CHECK(m.clean() == 1);
    m.faces.push_back({0, 1, 99});
    CHECK_THROWS_AS(m.clean(), Error);
  }

  TEST_CASE("mesh io round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "osteoplan_geom_io";
    std::filesystem::create_directories(dir);
    const TriMesh m = make_ellipsoid({1, 2, 3}, {4, 5, 6}, 6, 8);
    for (const char* name : {"m.obj", "m.ply", "M.OBJ"}) {
      write_mesh(dir / name, m);
      const TriMesh r = read_mesh(dir / name);
      REQUIRE(r.vertices.size() == m.vertices.size());
      REQUIRE(r.faces == m.faces);
      for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((r.vertices[i] - m.vertices[i]).norm() < 1e-12);
    }
    Polyline3 line{{0, 0, 0}, {1.25, -3, 1e-7}};
    write_polyline_csv(dir / "l.csv", line);
    const auto back = read_polyline_csv(dir / "l.csv");
    REQUIRE(back.size() == 2);
    CHECK((back[1] - line[1]).norm() < 1e-15);
    write_landmarks_csv(dir / "lm.csv", {{"Me", "mandible", {1, 2, 3}}});
    const auto lm = read_landmarks_csv(dir / "lm.csv");
    REQUIRE(lm.size() == 1);
    CHECK(lm[0].name == "Me");
    CHECK(lm[0].parent == "mandible");
    CHECK_THROWS_AS(read_mesh(dir / "missing.obj"), Error);
  }
}
