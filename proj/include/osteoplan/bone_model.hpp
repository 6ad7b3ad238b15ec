#pragma once

#include <array>

namespace osteoplan {

// Units used throughout this header:
//   density  g/cm^3     moduli  GPa (bone), kPa (contact layer)
//   stress   MPa        SED     mJ/mm^3 (== MPa)
//   stimulus mJ/g       lengths mm

enum class BoneRegion { Cortical, Cancellous };

struct BoneMaterial {
  BoneRegion region = BoneRegion::Cortical;
  double density = 1.8;        // g/cm^3
  double youngs_gpa = 13.7;
  double poisson = 0.3;
  double yield_mpa = 100.0;

  static BoneMaterial cortical_default(double density);
  static BoneMaterial cancellous_default(double density);
};

/// Elastic-foundation contact layer.
struct ContactParams {
  double youngs_kpa = 30.0;
  double poisson = 0.3;
  double thickness_mm = 0.2;

  void validate() const;
};

struct StimulusParams {
  double s0 = 0.036;    // mJ/g, remodeling set-point
  double delta = 0.1;   // half-width of the lazy zone

  void validate() const;
};

/// Symmetric 3x3 tensor stored as (xx, yy, zz, xy, yz, xz).
struct SymTensor3 {
  std::array<double, 6> v{};

  static SymTensor3 from_components(double xx, double yy, double zz, double xy, double yz, double xz) {
    return SymTensor3{{xx, yy, zz, xy, yz, xz}};
  }
  double operator()(int i, int j) const;
};

inline constexpr double kHuMin = 350.0;
inline constexpr double kHuMax = 1700.0;
inline constexpr double kDensityMin = 0.7;
inline constexpr double kDensityMax = 1.8;
inline constexpr double kCorticalHuThreshold = 1000.0;

/// Linear HU -> apparent density calibration, clamped to [0.7, 1.8] g/cm^3.
double hu_to_density(double hu);

/// Cortical iff hu > 1000.
BoneRegion classify_region(double hu);

/// Elastic-foundation pressure (kPa) for penetration depth d (mm). Requires
/// 0 <= d < thickness.
double contact_pressure(double depth_mm, const ContactParams& params);

/// Full double sum 1/2 sum_ij sigma_ij eps_ij; off-diagonal pairs count twice.
double sed(const SymTensor3& stress, const SymTensor3& strain);

/// S0 (1 + delta), mJ/g.
double remodeling_threshold(const StimulusParams& params);

/// Density-normalised stimulus (mJ/g) from SED (mJ/mm^3) and density (g/cm^3).
double stimulus(double sed_mj_per_mm3, double density_g_per_cm3);

/// Strict comparison of a stimulus value against the remodeling threshold.
bool exceeds_threshold(double stimulus_mj_per_g, const StimulusParams& params);

/// stimulus(sed, rho) > S0 (1 + delta). Throws for rho <= 0.
bool stimulus_exceeds(double sed_mj_per_mm3, double density_g_per_cm3, const StimulusParams& params);

/// min(yield_cort / maxP_cort, yield_canc / maxP_canc). A zero stress on a
/// branch makes that branch +inf; both zero yields +inf ("unloaded").
double worst_safety_factor(double max_principal_cortical, double max_principal_cancellous,
                           double yield_cortical = 100.0, double yield_cancellous = 5.0);

}  // namespace osteoplan
