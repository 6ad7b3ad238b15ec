#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osteoplan/design_space.hpp"
#include "osteoplan/evaluator.hpp"
#include "osteoplan/geometry.hpp"
#include "osteoplan/objective.hpp"

namespace osteoplan {

struct GridSpec {
  std::array<std::size_t, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();  // mm
  Point3 origin = Point3::Zero();                     // centre of voxel (0,0,0)

  std::size_t count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return i + dims[0] * (j + dims[1] * k); }
  Point3 center(std::size_t i, std::size_t j, std::size_t k) const;
  double voxel_volume() const { return spacing.prod(); }
  bool operator==(const GridSpec&) const = default;
};

/// Binary label map on a regular grid, x fastest.
struct VoxelMask {
  GridSpec grid;
  std::vector<std::uint8_t> values;

  explicit VoxelMask(GridSpec g = {});
  std::size_t count() const;  // number of set voxels
  void validate() const;
};

/// Header JSON {dims, spacing, origin, data} next to a raw 0/1 byte file.
VoxelMask read_mask(const std::filesystem::path& header);
void write_mask(const std::filesystem::path& header, const VoxelMask& mask);

/// 2|A and B| / (|A| + |B|). Two empty masks give 1.0 (with a warning).
double dice(const VoxelMask& a, const VoxelMask& b);

/// Ranks elements by the number of steps whose stimulus exceeds `threshold`,
/// then by mean stimulus, then by lower index, and returns the first
/// ceil(fraction * M) indices in rank order.
std::vector<std::size_t> select_apposition_elements(const std::vector<std::vector<double>>& history, double threshold,
                                                    double fraction);

/// Sum of unit-height isotropic Gaussians centred on `points`, sampled at
/// voxel centres (truncated at 6 sigma).
std::vector<double> splat_field(const std::vector<Point3>& points, const GridSpec& grid, double sigma);

/// splat_field thresholded: a voxel is set when the field is >= threshold.
VoxelMask splat_to_grid(const std::vector<Point3>& points, const GridSpec& grid, double sigma, double threshold);

/// Voxels whose centre lies within `thickness` mm of some interface point.
VoxelMask region_of_interest(const std::vector<Point3>& interface_points, const GridSpec& grid,
                             double thickness = 0.5);

/// Voxel-wise AND; the grids must match.
VoxelMask restrict_mask(const VoxelMask& mask, const VoxelMask& roi);

/// Fraction of voxels with HU strictly above `threshold`.
double cortical_fraction(const std::vector<double>& hu, double threshold = 1000.0);

// ---- sensitivity -------------------------------------------------------

/// Names accepted by apply_parameter: rho_cortical, rho_cancellous,
/// E_cortical, E_cancellous, contact_E, contact_nu, t_contact, S0,
/// l_opt_scale, F_max_scale, yield_scale, plus any numeric model field such
/// as cycle_seconds or peak_gap.
void apply_parameter(SyntheticModelConfig& config, const std::string& name, double factor);

std::vector<std::string> default_sensitivity_parameters();

struct SensitivitySpec {
  std::vector<std::string> parameters = default_sensitivity_parameters();
  double perturbation = 0.10;
  std::size_t repeats = 5;

  void validate() const;
};

struct SensitivityCase {
  std::string name;
  FeasibleRegion region;
  SyntheticModelConfig config;
  DesignVector baseline;
};

struct SensitivityRow {
  std::string case_name;
  std::string parameter;
  int direction = 0;                 // -1 or +1
  double factor = 1.0;               // applied multiplier
  double baseline_f_opt = 0.0;
  std::vector<double> f_opt;         // one per repeat
  double mean_relative_change = 0.0;  // mean over repeats of (F - F0) / |F0|
  std::optional<std::string> error;
};

struct SensitivityReport {
  std::vector<SensitivityRow> rows;
  std::size_t evaluations = 0;  // perturbed cells executed (baselines excluded)
};

using EvaluatorFactory =
    std::function<std::unique_ptr<Evaluator>(const FeasibleRegion&, const SyntheticModelConfig&)>;

EvaluatorFactory synthetic_factory();

/// Every case x parameter x {-p, +p} x repeat cell; failures are recorded on
/// the row and the sweep continues.
SensitivityReport sensitivity_run(const std::vector<SensitivityCase>& cases, const SensitivitySpec& spec,
                                  const ObjectiveWeights& weights = {}, const EvaluatorFactory& factory = synthetic_factory(),
                                  unsigned threads = 1);

// ---- convergence ----------------------------------------------------------

struct ConvergenceSummary {
  std::vector<double> mean;
  std::vector<double> stddev;  // population
};

/// Per-index statistics of best-so-far curves; shorter curves are padded
/// with their last value. Throws on an empty set or an empty curve.
ConvergenceSummary convergence_summary(const std::vector<std::vector<double>>& curves);

}  // namespace osteoplan
