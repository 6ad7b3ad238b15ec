#include "osteoplan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "osteoplan/errors.hpp"

namespace osteoplan {

const char* interface_name(Interface iface) {
  switch (iface) {
    case Interface::Left: return "left";
    case Interface::Right: return "right";
    case Interface::Middle: return "middle";
  }
  return "?";
}

const std::vector<double>& EvaluationResult::apposition(Interface iface) const {
  switch (iface) {
    case Interface::Left: return apposition_left;
    case Interface::Right: return apposition_right;
    case Interface::Middle: return apposition_middle;
  }
  throw Error("unknown interface");
}

std::vector<Interface> EvaluationResult::interfaces() const {
  std::vector<Interface> out{Interface::Left, Interface::Right};
  if (has_middle()) out.push_back(Interface::Middle);
  return out;
}

void EvaluationResult::validate() const {
  auto check_len = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != steps) throw Error(fmt::format("evaluation result: {} has {} samples, expected {}", name, v.size(), steps));
  };
  if (steps == 0) throw Error("evaluation result: zero timesteps");
  check_len(apposition_left, "apposition.left");
  check_len(apposition_right, "apposition.right");
  if (has_middle()) check_len(apposition_middle, "apposition.middle");
  check_len(sf_left, "sf_worst.left");
  check_len(sf_right, "sf_worst.right");
  for (Interface iface : interfaces()) {
    for (double a : apposition(iface)) {
      if (!(a >= 0.0 && a <= 1.0)) throw Error(fmt::format("evaluation result: apposition {} outside [0,1]", a));
    }
  }
  for (const auto* sf : {&sf_left, &sf_right}) {
    for (double s : *sf) {
      if (std::isnan(s) || s < 0.0) throw Error("evaluation result: safety factor must be nonnegative");
    }
  }
}

void SyntheticModelConfig::set_hu(double cortical_mean_hu, double cancellous_mean_hu) {
  cortical_hu = cortical_mean_hu;
  cancellous_hu = cancellous_mean_hu;
  cortical.density = hu_to_density(cortical_mean_hu);
  cancellous.density = hu_to_density(cancellous_mean_hu);
}

void SyntheticModelConfig::validate(const FeasibleRegion& region) const {
  contact.validate();
  stimulus.validate();
  if (elements_per_interface == 0) throw Error("synthetic model: elements_per_interface must be positive");
  if (steps == 0) throw Error("synthetic model: steps must be positive");
  if (!(peak_gap_mm > 0.0 && peak_gap_mm < contact.thickness_mm))
    throw Error("synthetic model: peak gap d0 must lie in (0, t_contact)");
  if (!(bolus_start >= 0.0 && bolus_start <= bolus_end && bolus_end <= 1.0))
    throw Error("synthetic model: bolus window must satisfy 0 <= t_a <= t_b <= 1");
  if (!(clip_fraction > 0.0 && clip_fraction < 1.0)) throw Error("synthetic model: clip fraction must lie in (0, 1)");
  if (!(cortical.density > 0.0 && cancellous.density > 0.0)) throw Error("synthetic model: densities must be positive");
  if (!(cortical.youngs_gpa > 0.0 && cancellous.youngs_gpa > 0.0)) throw Error("synthetic model: moduli must be positive");
  if (!(muscle.optimal_length_scale > 0.0 && muscle.force_scale >= 0.0)) throw Error("synthetic model: invalid muscle drive");
  if (!contains(region, phi_star)) throw Error("synthetic model: planted optimum phi_star lies outside the feasible region");
}

double element_coefficient(std::uint64_t element, std::uint64_t salt) {
  // SplitMix64 finaliser; platform independent.
  std::uint64_t z = element + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

EvaluationResult assemble_result(const ElementField& field, const StimulusParams& stimulus, double yield_cortical,
                                 double yield_cancellous) {
  if (field.samples.size() < 2) throw Error("assemble_result: need at least left and right interfaces");
  if (field.elements_per_interface == 0) throw Error("assemble_result: empty interface");
  const std::size_t steps = field.samples.front().size();
  const double threshold = remodeling_threshold(stimulus);

  EvaluationResult result;
  result.steps = steps;
  for (std::size_t k = 0; k < field.samples.size(); ++k) {
    const auto& per_step = field.samples[k];
    if (per_step.size() != steps) throw Error("assemble_result: interfaces disagree on step count");
    std::vector<double> fractions(steps);
    std::vector<double> sf(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const auto& elems = per_step[i];
      if (elems.empty()) throw Error(fmt::format("assemble_result: interface {} has no elements", k));
      std::size_t above = 0;
      double max_cort = 0.0, max_canc = 0.0;
      for (const auto& s : elems) {
        if (s.stimulus > threshold) ++above;
        if (s.region == BoneRegion::Cortical) max_cort = std::max(max_cort, s.max_principal);
        else max_canc = std::max(max_canc, s.max_principal);
      }
      fractions[i] = static_cast<double>(above) / static_cast<double>(field.elements_per_interface);
      sf[i] = worst_safety_factor(max_cort, max_canc, yield_cortical, yield_cancellous);
    }
    switch (k) {
      case 0:
        result.apposition_left = std::move(fractions);
        result.sf_left = std::move(sf);
        break;
      case 1:
        result.apposition_right = std::move(fractions);
        result.sf_right = std::move(sf);
        break;
      default:
        result.apposition_middle = std::move(fractions);
        break;
    }
  }
  return result;
}

SyntheticEvaluator::SyntheticEvaluator(FeasibleRegion region, SyntheticModelConfig config)
    : region_(std::move(region)), config_(std::move(config)) {
  region_.validate();
  config_.validate(region_);
  const std::size_t n = config_.elements_per_interface;
  coeff_.resize(n);
  regions_.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    coeff_[e] = element_coefficient(e, 0);
    regions_[e] = element_coefficient(e, 1) < config_.cortical_fraction ? BoneRegion::Cortical : BoneRegion::Cancellous;
  }
}

double SyntheticEvaluator::misalignment(const DesignVector& phi, Interface iface) const {
  const auto& s = config_.scales;
  const auto& star = config_.phi_star;
  switch (iface) {
    case Interface::Left:
      return s.left_roll * std::abs(phi.theta_Lr - star.theta_Lr) + s.left_pitch * std::abs(phi.theta_Lp - star.theta_Lp) +
             s.vertical * std::abs(phi.l_Z - star.l_Z);
    case Interface::Right:
      return s.right_roll * std::abs(phi.theta_Rr - star.theta_Rr) +
             s.right_pitch * std::abs(phi.theta_Rp - star.theta_Rp) + s.vertical * std::abs(phi.l_Z - star.l_Z);
    case Interface::Middle: {
      if (!phi.l_RDP || !star.l_RDP) throw Error("middle interface requires a two-segment design vector");
      const double mean = 0.25 * (phi.theta_Lr + phi.theta_Lp + phi.theta_Rr + phi.theta_Rp);
      const double mean_star = 0.25 * (star.theta_Lr + star.theta_Lp + star.theta_Rr + star.theta_Rp);
      return s.rdp * std::abs(*phi.l_RDP - *star.l_RDP) + s.middle_angle * std::abs(mean - mean_star);
    }
  }
  throw Error("unknown interface");
}

double SyntheticEvaluator::waveform(double t_norm) const {
  const double s = std::sin(std::numbers::pi * t_norm);
  const bool bolus = t_norm >= config_.bolus_start && t_norm <= config_.bolus_end;
  return s * s * (bolus ? 1.0 + config_.bolus_boost : 1.0);
}

double SyntheticEvaluator::step_time(std::size_t i) const {
  return static_cast<double>(i) / static_cast<double>(config_.steps);
}

double SyntheticEvaluator::element_penetration(const DesignVector& phi, Interface iface, std::size_t element,
                                               double t_norm) const {
  if (element >= config_.elements_per_interface) throw Error("element index out of range");
  const double m = misalignment(phi, iface) * (1.0 + config_.heterogeneity * coeff_[element]);
  const double d = std::max(0.0, config_.peak_gap_mm * waveform(t_norm) - m);
  return std::min(d, config_.clip_fraction * config_.contact.thickness_mm);
}

BoneRegion SyntheticEvaluator::element_region(std::size_t element) const {
  if (element >= regions_.size()) throw Error("element index out of range");
  return regions_[element];
}

ElementSample SyntheticEvaluator::sample_at_depth(double depth_mm, BoneRegion region) const {
  ElementSample out;
  out.region = region;
  if (depth_mm <= 0.0) return out;
  const BoneMaterial& mat = region == BoneRegion::Cortical ? config_.cortical : config_.cancellous;
  const double ell = 1.0 / config_.muscle.optimal_length_scale - 1.0;
  // Gaussian active force-length curve, shape factor 0.45.
  const double drive = config_.muscle.force_scale * std::exp(-ell * ell / 0.45);
  const double pressure_mpa = contact_pressure(depth_mm, config_.contact) * 1e-3;
  const double stress = config_.load_gain * drive * pressure_mpa;
  const double sed_value = stress * stress / (2.0 * mat.youngs_gpa * 1e3);
  out.stimulus = stimulus(sed_value, mat.density);
  out.max_principal = 1.0 * stress;
  return out;
}

ElementSample SyntheticEvaluator::element_sample(const DesignVector& phi, Interface iface, std::size_t element,
                                                 double t_norm) const {
  return sample_at_depth(element_penetration(phi, iface, element, t_norm), element_region(element));
}

ElementField SyntheticEvaluator::element_field(const DesignVector& phi) const {
  if (!contains(region_, phi)) throw Error("evaluate: design vector outside the feasible region");
  std::vector<Interface> ifaces{Interface::Left, Interface::Right};
  if (region_.segment_count() == 2) ifaces.push_back(Interface::Middle);

  const std::size_t n = config_.elements_per_interface;
  ElementField field;
  field.elements_per_interface = n;
  field.samples.resize(ifaces.size());
  std::vector<double> wave(config_.steps);
  for (std::size_t i = 0; i < config_.steps; ++i) wave[i] = waveform(step_time(i));
  const double cap = config_.clip_fraction * config_.contact.thickness_mm;

  for (std::size_t k = 0; k < ifaces.size(); ++k) {
    const double base = misalignment(phi, ifaces[k]);
    auto& per_step = field.samples[k];
    per_step.assign(config_.steps, InterfaceSamples(n));
    for (std::size_t e = 0; e < n; ++e) {
      const double m = base * (1.0 + config_.heterogeneity * coeff_[e]);
      for (std::size_t i = 0; i < config_.steps; ++i) {
        const double d = std::min(std::max(0.0, config_.peak_gap_mm * wave[i] - m), cap);
        per_step[i][e] = sample_at_depth(d, regions_[e]);
      }
    }
  }
  return field;
}

EvaluationResult SyntheticEvaluator::evaluate(const DesignVector& phi) const {
  return assemble_result(element_field(phi), config_.stimulus, config_.cortical.yield_mpa, config_.cancellous.yield_mpa);
}

std::vector<std::vector<double>> SyntheticEvaluator::element_history(const DesignVector& phi, Interface iface) const {
  if (!contains(region_, phi)) throw Error("element_history: design vector outside the feasible region");
  std::vector<std::vector<double>> hist(config_.elements_per_interface, std::vector<double>(config_.steps));
  for (std::size_t e = 0; e < config_.elements_per_interface; ++e)
    for (std::size_t i = 0; i < config_.steps; ++i) hist[e][i] = element_sample(phi, iface, e, step_time(i)).stimulus;
  return hist;
}

Point3 SyntheticEvaluator::element_centroid(Interface iface, std::size_t element) const {
  // 20-wide grid at 0.5 mm pitch on the plane x = const of each interface.
  constexpr std::size_t kColumns = 20;
  constexpr double kPitch = 0.5;
  Point3 origin;
  switch (iface) {
    case Interface::Left: origin = Point3(-30.0, 0.0, 0.0); break;
    case Interface::Right: origin = Point3(30.0, 0.0, 0.0); break;
    case Interface::Middle: origin = Point3(0.0, -20.0, 0.0); break;
  }
  const double col = static_cast<double>(element % kColumns);
  const double row = static_cast<double>(element / kColumns);
  return origin + Point3(0.0, col * kPitch, row * kPitch);
}

}  // namespace osteoplan
