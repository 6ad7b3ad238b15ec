#include <cmath>
#include <limits>

#include "doctest.h"
#include "osteoplan/bone_model.hpp"
#include "osteoplan/errors.hpp"

using namespace osteoplan;

TEST_SUITE("bone_model") {
  TEST_CASE("density calibration") {
    CHECK(hu_to_density(350) == doctest::Approx(0.70).epsilon(1e-15));
    CHECK(hu_to_density(1700) == doctest::Approx(1.80).epsilon(1e-15));
    CHECK(hu_to_density(2500) == 1.8);
    CHECK(hu_to_density(-100) == 0.7);
    CHECK(hu_to_density(1600) == doctest::Approx(0.7 + 1.1 * 1250.0 / 1350.0));
    CHECK(hu_to_density(1400) == doctest::Approx(1.5556).epsilon(1e-4));

    // tabulated apparent densities next to their mean HU
    const double table[][2] = {{1600, 1.70}, {350, 0.70}, {1400, 1.54}, {550, 0.85}, {1400, 1.56},
                               {500, 0.82},  {1500, 1.64}, {300, 0.70}, {1250, 1.45}};
    for (const auto& row : table) CHECK(std::abs(hu_to_density(row[0]) - row[1]) <= 0.02);

    double prev = 0.0;
    for (double hu = -500; hu <= 3000; hu += 7.5) {
      const double r = hu_to_density(hu);
      CHECK(r >= prev);
      prev = r;
    }
  }

  TEST_CASE("region classification") {
    CHECK(classify_region(1001) == BoneRegion::Cortical);
    CHECK(classify_region(1000) == BoneRegion::Cancellous);
    CHECK(classify_region(350) == BoneRegion::Cancellous);
  }

  TEST_CASE("contact pressure") {
    const ContactParams d;
    const double k = 0.7 * 30.0 / (1.3 * 0.4);
    CHECK(k == doctest::Approx(40.3846).epsilon(1e-5));
    CHECK(contact_pressure(0.0, d) == 0.0);
    CHECK(contact_pressure(0.1, d) == doctest::Approx(k * std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(contact_pressure(0.1, d) - 27.99) < 0.01);
    CHECK(contact_pressure(0.19, d) == doctest::Approx(k * std::log(20.0)).epsilon(1e-14));
    CHECK(std::abs(contact_pressure(0.19, d) - 120.98) < 0.01);
    CHECK_THROWS_AS(contact_pressure(0.2, d), Error);
    CHECK_THROWS_AS(contact_pressure(-1e-9, d), Error);
    CHECK(contact_pressure(0.2 - 1e-12, d) > 1000.0);

    for (int i = 0; i < 100; ++i) {
      const double x = 0.001 + 0.19 * i / 100.0;
      const double h = 1e-7;
      CHECK((contact_pressure(x + h, d) - contact_pressure(x - h, d)) / (2 * h) > 0.0);
    }
  }

  TEST_CASE("strain energy density") {
    CHECK(sed(SymTensor3{}, SymTensor3{}) == 0.0);
    CHECK(sed(SymTensor3::from_components(2, 0, 0, 0, 0, 0), SymTensor3::from_components(0.001, 0, 0, 0, 0, 0)) ==
          doctest::Approx(0.001));
    const auto s = SymTensor3::from_components(0, 0, 0, 1, 0, 0);
    const auto e = SymTensor3::from_components(0, 0, 0, 0.0005, 0, 0);
    CHECK(sed(s, e) == doctest::Approx(0.0005));

    // nine explicit terms
    const auto a = SymTensor3::from_components(1.5, -2, 0.5, 0.3, -0.7, 1.1);
    const auto b = SymTensor3::from_components(0.01, 0.02, -0.03, 0.004, 0.005, -0.006);
    const double full[3][3] = {{1.5, 0.3, 1.1}, {0.3, -2, -0.7}, {1.1, -0.7, 0.5}};
    const double fe[3][3] = {{0.01, 0.004, -0.006}, {0.004, 0.02, 0.005}, {-0.006, 0.005, -0.03}};
    double sum = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) sum += full[i][j] * fe[i][j];
    CHECK(sed(a, b) == doctest::Approx(0.5 * sum).epsilon(1e-14));
    CHECK(sed(a, b) == sed(b, a));
  }

  TEST_CASE("stimulus threshold") {
    const StimulusParams p;
    CHECK(remodeling_threshold(p) == doctest::Approx(0.0396).epsilon(1e-14));
    CHECK_FALSE(exceeds_threshold(remodeling_threshold(p), p));
    CHECK(exceeds_threshold(0.040, p));
    CHECK(exceeds_threshold(0.037, StimulusParams{0.036, 0.0}));

    // sed in mJ/mm^3 with density 1 g/cm^3 = 1e-3 g/mm^3
    CHECK(stimulus(0.04e-3, 1.0) == doctest::Approx(0.04));
    CHECK(stimulus_exceeds(0.040e-3, 1.0, p));
    CHECK_FALSE(stimulus_exceeds(0.039e-3, 1.0, p));
    CHECK_THROWS_AS(stimulus_exceeds(1.0, 0.0, p), Error);
  }

  TEST_CASE("worst safety factor") {
    CHECK(worst_safety_factor(100, 5) == 1.0);
    CHECK(worst_safety_factor(50, 2.5) == 2.0);
    CHECK(worst_safety_factor(10, 10) == 0.5);
    CHECK(std::isinf(worst_safety_factor(0, 0)));
    CHECK(worst_safety_factor(0, 2.5) == 2.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double s = 0; s < 20; s += 0.25) {
      const double v = worst_safety_factor(s, 1.0);
      CHECK(v <= prev);
      prev = v;
    }
  }
}
