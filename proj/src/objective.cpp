#include "osteoplan/objective.hpp"

#include <cmath>
#include <numeric>

#include "osteoplan/errors.hpp"

namespace osteoplan {

void ObjectiveWeights::validate() const {
  if (w1 < 0.0 || w2 < 0.0 || w_side < 0.0 || sf_desired < 0.0) throw Error("objective weights must be nonnegative");
}

ObjectiveKind parse_objective(const std::string& name) {
  if (name == "fopt") return ObjectiveKind::FOpt;
  if (name == "fsf") return ObjectiveKind::FSf;
  throw Error("unknown objective '" + name + "' (expected fopt or fsf)");
}

std::string objective_name(ObjectiveKind kind) { return kind == ObjectiveKind::FOpt ? "fopt" : "fsf"; }

double cycle_average(const std::vector<double>& trace) {
  if (trace.empty()) throw Error("cycle_average: empty trace");
  return std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
}

double f_opt(const std::vector<double>& averages, const ObjectiveWeights& w) {
  if (averages.size() < 2) throw Error("f_opt: need at least two interfaces");
  double total = 0.0;
  for (double a : averages) total += a;
  double imbalance = 0.0;
  for (std::size_t i = 0; i < averages.size(); ++i)
    for (std::size_t j = i + 1; j < averages.size(); ++j) imbalance += std::abs(averages[i] - averages[j]);
  if (w.ordered_pairs) imbalance *= 2.0;
  return w.w1 * total - w.w2 * imbalance;
}

double sf_penalty(const std::vector<double>& sf_left, const std::vector<double>& sf_right, const ObjectiveWeights& w) {
  if (sf_left.size() != sf_right.size()) throw Error("sf_penalty: side traces differ in length");
  if (sf_left.empty()) throw Error("sf_penalty: empty traces");
  auto term = [&](double sf) {
    const double shortfall = std::max(0.0, w.sf_desired - sf);  // +inf sf -> 0
    return w.w_side * shortfall * shortfall;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < sf_left.size(); ++i) sum += term(sf_left[i]) + term(sf_right[i]);
  return sum / static_cast<double>(sf_left.size());
}

double f_sf(const std::vector<double>& averages, const std::vector<double>& sf_left, const std::vector<double>& sf_right,
            const ObjectiveWeights& w) {
  return f_opt(averages, w) - sf_penalty(sf_left, sf_right, w);
}

std::vector<double> interface_averages(const EvaluationResult& result) {
  std::vector<double> out;
  for (Interface iface : result.interfaces()) out.push_back(cycle_average(result.apposition(iface)));
  return out;
}

double score(const EvaluationResult& result, ObjectiveKind kind, const ObjectiveWeights& w) {
  const auto averages = interface_averages(result);
  if (kind == ObjectiveKind::FOpt) return f_opt(averages, w);
  return f_sf(averages, result.sf_left, result.sf_right, w);
}

}  // namespace osteoplan
