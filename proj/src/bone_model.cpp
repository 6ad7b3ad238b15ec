#include "osteoplan/bone_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "osteoplan/errors.hpp"

namespace osteoplan {

BoneMaterial BoneMaterial::cortical_default(double density) {
  return BoneMaterial{BoneRegion::Cortical, density, 13.7, 0.3, 100.0};
}

BoneMaterial BoneMaterial::cancellous_default(double density) {
  return BoneMaterial{BoneRegion::Cancellous, density, 1.1, 0.3, 5.0};
}

void ContactParams::validate() const {
  if (!(youngs_kpa > 0.0)) throw Error("contact: E must be positive");
  if (!(poisson > 0.0 && poisson < 0.5)) throw Error("contact: Poisson ratio must lie in (0, 0.5)");
  if (!(thickness_mm > 0.0)) throw Error("contact: layer thickness must be positive");
}

void StimulusParams::validate() const {
  if (!(s0 > 0.0)) throw Error("stimulus: S0 must be positive");
  if (!(delta >= 0.0)) throw Error("stimulus: delta must be nonnegative");
}

double SymTensor3::operator()(int i, int j) const {
  if (i == j) return v[i];
  const int a = std::min(i, j), b = std::max(i, j);
  if (a == 0 && b == 1) return v[3];
  if (a == 1 && b == 2) return v[4];
  return v[5];
}

double hu_to_density(double hu) {
  const double rho = kDensityMin + (kDensityMax - kDensityMin) * (hu - kHuMin) / (kHuMax - kHuMin);
  return std::clamp(rho, kDensityMin, kDensityMax);
}

BoneRegion classify_region(double hu) { return hu > kCorticalHuThreshold ? BoneRegion::Cortical : BoneRegion::Cancellous; }

double contact_pressure(double depth_mm, const ContactParams& params) {
  if (depth_mm < 0.0) throw Error("contact_pressure: negative penetration depth");
  if (!(depth_mm < params.thickness_mm))
    throw Error(fmt::format("contact_pressure: depth {} mm reaches the layer thickness {} mm", depth_mm, params.thickness_mm));
  const double nu = params.poisson;
  const double foundation = (1.0 - nu) * params.youngs_kpa / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return -foundation * std::log1p(-depth_mm / params.thickness_mm);
}

double sed(const SymTensor3& stress, const SymTensor3& strain) {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sum += stress(i, j) * strain(i, j);
  return 0.5 * sum;
}

double remodeling_threshold(const StimulusParams& params) { return params.s0 * (1.0 + params.delta); }

double stimulus(double sed_mj_per_mm3, double density_g_per_cm3) {
  if (!(density_g_per_cm3 > 0.0)) throw Error("stimulus: density must be positive");
  return sed_mj_per_mm3 / (density_g_per_cm3 * 1e-3);  // g/cm^3 -> g/mm^3
}

bool exceeds_threshold(double stimulus_mj_per_g, const StimulusParams& params) {
  return stimulus_mj_per_g > remodeling_threshold(params);
}

bool stimulus_exceeds(double sed_mj_per_mm3, double density_g_per_cm3, const StimulusParams& params) {
  return exceeds_threshold(stimulus(sed_mj_per_mm3, density_g_per_cm3), params);
}

double worst_safety_factor(double max_principal_cortical, double max_principal_cancellous, double yield_cortical,
                           double yield_cancellous) {
  if (max_principal_cortical < 0.0 || max_principal_cancellous < 0.0)
    throw Error("worst_safety_factor: stresses must be nonnegative");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double cortical = max_principal_cortical > 0.0 ? yield_cortical / max_principal_cortical : inf;
  const double cancellous = max_principal_cancellous > 0.0 ? yield_cancellous / max_principal_cancellous : inf;
  return std::min(cortical, cancellous);
}

}  // namespace osteoplan
