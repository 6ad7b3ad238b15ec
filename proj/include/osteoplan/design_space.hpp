#pragma once

#include <optional>
#include <string>
#include <vector>

namespace osteoplan {

/// Surgical design variables: roll/pitch of the left and right cut planes
/// (degrees), vertical donor offset l_Z (mm), and for two-segment cases the
/// intermediate-cut offset l_RDP (mm).
struct DesignVector {
  double theta_Lr = 0.0;
  double theta_Lp = 0.0;
  double theta_Rr = 0.0;
  double theta_Rp = 0.0;
  double l_Z = 0.0;
  std::optional<double> l_RDP;

  int segment_count() const { return l_RDP ? 2 : 1; }
  std::size_t dims() const { return l_RDP ? 6 : 5; }

  /// Components in declaration order; 5 or 6 entries.
  std::vector<double> to_vector() const;
  static DesignVector from_vector(const std::vector<double>& v);

  /// Zero (baseline) vector for the given segment count.
  static DesignVector baseline(int segment_count);

  bool operator==(const DesignVector&) const = default;
};

/// Symmetric box bounds on each design variable.
struct FeasibleRegion {
  double alpha_r = 0.0;  // |theta_Lr| <= alpha_r
  double alpha_p = 0.0;  // |theta_Lp| <= alpha_p
  double beta_r = 0.0;   // |theta_Rr| <= beta_r
  double beta_p = 0.0;   // |theta_Rp| <= beta_p
  double z = 0.0;        // |l_Z| <= z
  std::optional<double> r;  // |l_RDP| <= r, two-segment cases only

  int segment_count() const { return r ? 2 : 1; }
  std::size_t dims() const { return r ? 6 : 5; }

  /// Half-widths in component order.
  std::vector<double> half_widths() const;

  /// Throws if any range parameter is not strictly positive.
  void validate() const;
};

/// Inclusive membership test. Throws when the vector's arity does not match
/// the region.
bool contains(const FeasibleRegion& region, const DesignVector& phi);

/// Component-wise map of the region onto [-100, 100].
std::vector<double> normalize(const FeasibleRegion& region, const DesignVector& phi);
DesignVector denormalize(const FeasibleRegion& region, const std::vector<double>& normalized);

/// Maps a unit-cube point u in [0,1]^d linearly onto the region.
DesignVector from_unit_cube(const FeasibleRegion& region, const std::vector<double>& u);
std::vector<double> to_unit_cube(const FeasibleRegion& region, const DesignVector& phi);

std::vector<std::string> design_component_names(int segment_count);

}  // namespace osteoplan
