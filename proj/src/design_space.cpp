#include "osteoplan/design_space.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "osteoplan/errors.hpp"

namespace osteoplan {
namespace {

void check_arity(const FeasibleRegion& region, const DesignVector& phi) {
  if (region.segment_count() != phi.segment_count())
    throw Error(fmt::format("design vector has {} components but region expects {}", phi.dims(), region.dims()));
}

}  // namespace

std::vector<double> DesignVector::to_vector() const {
  std::vector<double> v{theta_Lr, theta_Lp, theta_Rr, theta_Rp, l_Z};
  if (l_RDP) v.push_back(*l_RDP);
  return v;
}

DesignVector DesignVector::from_vector(const std::vector<double>& v) {
  if (v.size() != 5 && v.size() != 6) throw Error(fmt::format("design vector needs 5 or 6 components, got {}", v.size()));
  DesignVector phi{v[0], v[1], v[2], v[3], v[4], std::nullopt};
  if (v.size() == 6) phi.l_RDP = v[5];
  return phi;
}

DesignVector DesignVector::baseline(int segment_count) {
  DesignVector phi;
  if (segment_count == 2) phi.l_RDP = 0.0;
  else if (segment_count != 1) throw Error("segment count must be 1 or 2");
  return phi;
}

std::vector<double> FeasibleRegion::half_widths() const {
  std::vector<double> w{alpha_r, alpha_p, beta_r, beta_p, z};
  if (r) w.push_back(*r);
  return w;
}

void FeasibleRegion::validate() const {
  const char* names[] = {"alpha_r", "alpha_p", "beta_r", "beta_p", "z", "r"};
  const auto w = half_widths();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) throw Error(fmt::format("feasible region: {} must be positive", names[i]));
  }
}

bool contains(const FeasibleRegion& region, const DesignVector& phi) {
  check_arity(region, phi);
  const auto v = phi.to_vector();
  const auto w = region.half_widths();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(std::abs(v[i]) <= w[i])) return false;
  }
  return true;
}

std::vector<double> normalize(const FeasibleRegion& region, const DesignVector& phi) {
  if (!contains(region, phi)) throw Error("normalize: design vector outside the feasible region");
  auto v = phi.to_vector();
  const auto w = region.half_widths();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 100.0 * v[i] / w[i];
  return v;
}

DesignVector denormalize(const FeasibleRegion& region, const std::vector<double>& normalized) {
  if (normalized.size() != region.dims())
    throw Error(fmt::format("denormalize: expected {} components, got {}", region.dims(), normalized.size()));
  const auto w = region.half_widths();
  std::vector<double> v(normalized.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(std::abs(normalized[i]) <= 100.0)) throw Error("denormalize: component outside [-100, 100]");
    v[i] = normalized[i] / 100.0 * w[i];
  }
  return DesignVector::from_vector(v);
}

DesignVector from_unit_cube(const FeasibleRegion& region, const std::vector<double>& u) {
  if (u.size() != region.dims()) throw Error("from_unit_cube: dimension mismatch");
  const auto w = region.half_widths();
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(-w[i] + 2.0 * w[i] * u[i], -w[i], w[i]);
  return DesignVector::from_vector(v);
}

std::vector<double> to_unit_cube(const FeasibleRegion& region, const DesignVector& phi) {
  check_arity(region, phi);
  auto v = phi.to_vector();
  const auto w = region.half_widths();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] + w[i]) / (2.0 * w[i]);
  return v;
}

std::vector<std::string> design_component_names(int segment_count) {
  std::vector<std::string> names{"theta_Lr", "theta_Lp", "theta_Rr", "theta_Rp", "l_Z"};
  if (segment_count == 2) names.emplace_back("l_RDP");
  return names;
}

}  // namespace osteoplan
