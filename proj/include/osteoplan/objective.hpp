#pragma once

#include <string>
#include <vector>

#include "osteoplan/evaluator.hpp"

namespace osteoplan {

struct ObjectiveWeights {
  double w1 = 0.5;          // total apposition reward
  double w2 = 0.5;          // imbalance penalty
  double w_side = 0.5;      // per-side safety-factor penalty weight
  double sf_desired = 1.0;
  bool ordered_pairs = false;  // count each imbalance pair in both orders

  void validate() const;
};

enum class ObjectiveKind { FOpt, FSf };

ObjectiveKind parse_objective(const std::string& name);
std::string objective_name(ObjectiveKind kind);

/// Arithmetic mean of a per-step trace.
double cycle_average(const std::vector<double>& trace);

/// W1 * sum of averages - W2 * sum over interface pairs of |a - b|.
/// Each unordered pair is counted once unless `ordered_pairs` is set.
double f_opt(const std::vector<double>& averages, const ObjectiveWeights& w);

/// Mean over steps of sum_side w_side * max(0, SF_desired - SF)^2. Infinite
/// safety factors contribute nothing.
double sf_penalty(const std::vector<double>& sf_left, const std::vector<double>& sf_right, const ObjectiveWeights& w);

double f_sf(const std::vector<double>& averages, const std::vector<double>& sf_left, const std::vector<double>& sf_right,
            const ObjectiveWeights& w);

inline double to_minimization(double score) { return -score; }

/// Cycle averages for every interface present in the result.
std::vector<double> interface_averages(const EvaluationResult& result);

/// Score (to be maximised) of an evaluation under the chosen objective.
double score(const EvaluationResult& result, ObjectiveKind kind, const ObjectiveWeights& w);

}  // namespace osteoplan
