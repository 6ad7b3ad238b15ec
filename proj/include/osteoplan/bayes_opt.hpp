#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "osteoplan/design_space.hpp"
#include "osteoplan/evaluator.hpp"
#include "osteoplan/gp.hpp"
#include "osteoplan/objective.hpp"

namespace osteoplan {

struct BoConfig {
  std::size_t n_sobol = 25;
  std::uint64_t sobol_skip = 1000;
  std::uint64_t sobol_leap = 100;
  std::size_t n_iterations = 50;
  double t_sigma = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t candidates = 5000;
  std::size_t local_refinements = 20;
  double inflation_factor = 1.5;
  int max_inflations = 5;
  double duplicate_tolerance = 1e-9;  // unit-cube distance
  double duplicate_step = 1.0 / 64.0;  // unit-cube perturbation for duplicates
  bool shift_sobol_per_seed = true;    // seeded digital shift of the initial design
  int fit_starts = 8;
  std::vector<DesignVector> warm_start;  // evaluated before the Sobol' design

  /// Defaults with t_sigma = 0.5 (one segment) or 0.6 (two segments).
  static BoConfig for_segments(int segment_count);
  void validate() const;
};

/// Expected improvement for minimisation with predictive variance S > 0.
double ei_plus(double mean, double predictive_var, double f_min);

double normal_pdf(double z);
double normal_cdf(double z);

struct Proposal {
  Eigen::VectorXd unit;        // location in [0,1]^d
  double ei = 0.0;
  double latent_std = 0.0;     // sigma_F at the proposal
  bool perturbed = false;      // moved off an evaluated point
};

/// Maximises EI over `candidates` quasi-random points (digitally shifted with
/// draws from `rng`), then refines the best `local_refinements` by compass
/// search. Points within `duplicate_tolerance` of an observed input are moved
/// by `duplicate_step` along the first coordinate that keeps them inside.
Proposal propose_next_unit(const GpPosterior& posterior, double f_min, const BoConfig& config, std::mt19937_64& rng);

/// Same, mapped onto the feasible region.
DesignVector propose_next(const GpPosterior& posterior, const FeasibleRegion& region, double f_min,
                          const BoConfig& config, std::mt19937_64& rng);

enum class SafeguardDecision { Accept, Inflate };

/// Inflate iff sigma_F(proposal) < t_sigma * sigma, with sigma the fitted
/// observation-noise standard deviation.
SafeguardDecision safeguard_check(const GpPosterior& posterior, const Eigen::VectorXd& unit, const BoConfig& config);

struct TraceRecord {
  std::size_t evaluation = 0;  // 1-based
  std::string phase;           // warm | sobol | bo
  DesignVector phi;
  std::vector<double> unit;
  double score = 0.0;          // objective value (maximised)
  double loss = 0.0;           // -score
  double best_loss = 0.0;      // best-so-far (minimisation)
  std::optional<KernelParams> kernel;
  double noise_var = 0.0;
  double ei = 0.0;
  int inflations = 0;
  bool safeguard_triggered = false;
  bool safeguard_capped = false;
};

struct OptimizationTrace {
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  std::optional<std::string> error;
  std::size_t initial_evaluations = 0;  // warm-start + Sobol'

  std::vector<double> best_so_far() const;
  /// Best-so-far loss after BO iteration k (k = 0 is the end of the
  /// initial design).
  double best_after_iteration(std::size_t k) const;
  const TraceRecord* best() const;
};

struct AggregateStats {
  std::vector<double> mean_best;  // per evaluation index, across seeds
  std::vector<double> std_best;   // population std
  std::optional<DesignVector> best_phi;
  double best_score = 0.0;
};

struct RunResult {
  std::vector<OptimizationTrace> traces;
  AggregateStats aggregate;
};

/// Full optimisation for one seed.
OptimizationTrace run_seed(const Evaluator& evaluator, ObjectiveKind objective, const ObjectiveWeights& weights,
                           const BoConfig& config, std::uint64_t seed);

/// Runs every seed in `config.seeds`, up to `threads` at a time. A seed whose
/// evaluator throws is recorded with an error; the others continue.
RunResult run(const Evaluator& evaluator, ObjectiveKind objective, const ObjectiveWeights& weights,
              const BoConfig& config, unsigned threads = 1);

/// Mean / population std of best-so-far curves, padding shorter traces with
/// their last value.
AggregateStats aggregate_traces(const std::vector<OptimizationTrace>& traces);

}  // namespace osteoplan
