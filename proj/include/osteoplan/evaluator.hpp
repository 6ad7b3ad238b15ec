#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "osteoplan/bone_model.hpp"
#include "osteoplan/design_space.hpp"
#include "osteoplan/geometry.hpp"

namespace osteoplan {

enum class Interface { Left = 0, Right = 1, Middle = 2 };

const char* interface_name(Interface iface);

/// Apposition fractions and worst-case safety factors sampled over one
/// chewing cycle. Safety factors may be +inf on an unloaded side.
struct EvaluationResult {
  std::size_t steps = 0;
  std::vector<double> apposition_left;
  std::vector<double> apposition_right;
  std::vector<double> apposition_middle;  // empty for single-segment cases
  std::vector<double> sf_left;
  std::vector<double> sf_right;

  bool has_middle() const { return !apposition_middle.empty(); }
  const std::vector<double>& apposition(Interface iface) const;
  std::vector<Interface> interfaces() const;

  /// Throws if lengths disagree or a fraction leaves [0, 1].
  void validate() const;

  bool operator==(const EvaluationResult&) const = default;
};

/// Contract for anything that scores a design vector.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluationResult evaluate(const DesignVector& phi) const = 0;
  virtual const FeasibleRegion& region() const = 0;
};

/// Per-unit-deviation misalignment (mm per degree or mm per mm).
struct MisalignmentScales {
  double left_roll = 0.0015;
  double left_pitch = 0.0012;
  double right_roll = 0.0012;
  double right_pitch = 0.0015;
  double vertical = 0.008;
  double rdp = 0.006;
  double middle_angle = 0.002;  // applied to the mean of the four angles
};

/// Muscle drive multipliers; 1.0 is the nominal template calibration.
struct MuscleDrive {
  double force_scale = 1.0;           // F_max multiplier
  double optimal_length_scale = 1.0;  // l_opt multiplier
};

/// Closed-form stand-in for the chewing-cycle simulation.
///
/// Element e on an interface penetrates the contact layer by
///
///   d_e(phi, t) = min(clip * t_contact, max(0, d0 * w(t) - m_e(phi)))
///   w(t)        = sin^2(pi t) * (1 + bolus_boost * [t_a <= t <= t_b])
///   m_e(phi)    = M_X(phi) * (1 + heterogeneity * u_e)
///
/// where M_X is the weighted L1 distance to the planted optimum on the
/// components that drive interface X (left: theta_Lr, theta_Lp, l_Z; right:
/// theta_Rr, theta_Rp, l_Z; middle: l_RDP and the mean of the four angles)
/// and u_e in [0,1) is a fixed SplitMix64 hash of the element index.
///
/// The penetration is turned into an elastic-foundation pressure p (kPa),
/// an interface stress sigma = load_gain * drive * p (MPa), an SED proxy
/// sigma^2 / (2 E_region) (mJ/mm^3), and a stimulus SED / rho (mJ/g). The
/// element's maximum principal stress is taken as 1.0 * sigma.
struct SyntheticModelConfig {
  std::size_t elements_per_interface = 200;
  std::size_t steps = 62;
  double cycle_seconds = 0.62;
  DesignVector phi_star;
  MisalignmentScales scales;
  double peak_gap_mm = 0.15;  // d0
  double bolus_start = 0.40;  // t_a, normalised cycle time
  double bolus_end = 0.60;    // t_b
  double bolus_boost = 0.5;
  double clip_fraction = 0.995;  // penetration capped at clip * t_contact
  double heterogeneity = 0.2;
  double cortical_fraction = 0.4;  // share of elements in the cortical region
  double load_gain = 25.0;
  double cortical_hu = 1600.0;
  double cancellous_hu = 350.0;
  BoneMaterial cortical = BoneMaterial::cortical_default(hu_to_density(1600.0));
  BoneMaterial cancellous = BoneMaterial::cancellous_default(hu_to_density(350.0));
  ContactParams contact;
  StimulusParams stimulus;
  MuscleDrive muscle;

  /// Re-derives both densities from the HU fields.
  void set_hu(double cortical_mean_hu, double cancellous_mean_hu);

  /// Throws if the configuration violates its invariants for `region`.
  void validate(const FeasibleRegion& region) const;
};

/// Stimulus and stress of one element at one timestep.
struct ElementSample {
  double stimulus = 0.0;        // mJ/g
  double max_principal = 0.0;   // MPa
  BoneRegion region = BoneRegion::Cancellous;
};

/// Samples for every element of one interface at one timestep.
using InterfaceSamples = std::vector<ElementSample>;

/// Per-interface, per-step element samples; outer index is the interface in
/// the order Left, Right[, Middle], then the timestep.
struct ElementField {
  std::vector<std::vector<InterfaceSamples>> samples;
  std::size_t elements_per_interface = 0;
};

/// Counts threshold crossings and folds stresses into worst-case safety
/// factors. Throws if any interface/timestep has no elements.
EvaluationResult assemble_result(const ElementField& field, const StimulusParams& stimulus,
                                 double yield_cortical, double yield_cancellous);

/// Deterministic per-element coefficient in [0,1).
double element_coefficient(std::uint64_t element, std::uint64_t salt = 0);

class SyntheticEvaluator final : public Evaluator {
 public:
  SyntheticEvaluator(FeasibleRegion region, SyntheticModelConfig config);

  EvaluationResult evaluate(const DesignVector& phi) const override;
  const FeasibleRegion& region() const override { return region_; }
  const SyntheticModelConfig& config() const { return config_; }

  /// Interface misalignment M_X(phi) in mm.
  double misalignment(const DesignVector& phi, Interface iface) const;

  /// Waveform w(t) before clipping.
  double waveform(double t_norm) const;

  /// Penetration depth d_e(phi, t) in mm.
  double element_penetration(const DesignVector& phi, Interface iface, std::size_t element, double t_norm) const;

  ElementSample element_sample(const DesignVector& phi, Interface iface, std::size_t element, double t_norm) const;

  /// Stimulus sample for a given penetration depth and region.
  ElementSample sample_at_depth(double depth_mm, BoneRegion region) const;

  BoneRegion element_region(std::size_t element) const;

  /// Stimulus history [element][step] for one interface.
  std::vector<std::vector<double>> element_history(const DesignVector& phi, Interface iface) const;

  /// Nominal centroid of an interface element (mm), used for splatting.
  Point3 element_centroid(Interface iface, std::size_t element) const;

  /// Normalised time of step i: i / steps.
  double step_time(std::size_t i) const;

  ElementField element_field(const DesignVector& phi) const;

 private:
  FeasibleRegion region_;
  SyntheticModelConfig config_;
  std::vector<double> coeff_;  // u_e
  std::vector<BoneRegion> regions_;
};

}  // namespace osteoplan
