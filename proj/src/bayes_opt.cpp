#include "osteoplan/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "osteoplan/analysis.hpp"
#include "osteoplan/errors.hpp"
#include "osteoplan/sobol.hpp"

namespace osteoplan {

BoConfig BoConfig::for_segments(int segment_count) {
  BoConfig c;
  c.t_sigma = segment_count == 2 ? 0.6 : 0.5;
  return c;
}

void BoConfig::validate() const {
  if (n_sobol + warm_start.size() == 0) throw Error("bo: the initial design is empty");
  if (!(t_sigma > 0.0)) throw Error("bo: t_sigma must be positive");
  if (candidates == 0) throw Error("bo: candidate budget must be positive");
  if (seeds.empty()) throw Error("bo: at least one seed is required");
  if (!(inflation_factor > 1.0)) throw Error("bo: inflation factor must exceed 1");
  if (max_inflations < 0) throw Error("bo: max_inflations must be nonnegative");
  if (fit_starts < 1) throw Error("bo: fit_starts must be positive");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ei_plus(double mean, double predictive_var, double f_min) {
  if (!(predictive_var > 0.0)) throw Error("ei_plus: predictive variance must be positive");
  const double sd = std::sqrt(predictive_var);
  const double gap = f_min - mean;
  const double z = gap / sd;
  return std::max(0.0, gap * normal_cdf(z) + sd * normal_pdf(z));
}

namespace {

double acquisition(const GpPosterior& post, const Eigen::VectorXd& u, double f_min) {
  const PosteriorValue pv = post.predict(u);
  return ei_plus(pv.mean, pv.predictive_var, f_min);
}

bool near_observed(const GpPosterior& post, const Eigen::VectorXd& u, double tol) {
  const auto& x = post.model().inputs;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if ((x.row(i).transpose() - u).norm() <= tol) return true;
  return false;
}

}  // namespace

Proposal propose_next_unit(const GpPosterior& posterior, double f_min, const BoConfig& config, std::mt19937_64& rng) {
  const int d = static_cast<int>(posterior.model().dims());
  SobolSequence seq(d);
  std::vector<std::uint32_t> shift(static_cast<std::size_t>(d));
  for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);

  struct Scored {
    Eigen::VectorXd u;
    double ei;
  };
  std::vector<Scored> pool;
  pool.reserve(config.candidates);
  for (std::size_t k = 0; k < config.candidates; ++k) {
    const auto pt = seq.at(k, shift);
    Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(pt.data(), d);
    const double ei = acquisition(posterior, u, f_min);
    pool.push_back({std::move(u), ei});
  }
  // Stable order on ties keeps the proposal deterministic.
  std::stable_sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) { return a.ei > b.ei; });

  Scored best = pool.front();
  const std::size_t refine = std::min(config.local_refinements, pool.size());
  for (std::size_t r = 0; r < refine; ++r) {
    Scored cur = pool[r];
    for (double step = 0.05; step >= 1e-4; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int k = 0; k < d; ++k) {
          for (double dir : {1.0, -1.0}) {
            Eigen::VectorXd trial = cur.u;
            trial[k] = std::clamp(trial[k] + dir * step, 0.0, 1.0);
            if (trial[k] == cur.u[k]) continue;
            const double ei = acquisition(posterior, trial, f_min);
            if (ei > cur.ei) {
              cur = {std::move(trial), ei};
              improved = true;
            }
          }
        }
      }
    }
    if (cur.ei > best.ei) best = cur;
  }

  Proposal out;
  out.unit = best.u;
  out.ei = best.ei;
  if (posterior.model().size() > 0 && near_observed(posterior, out.unit, config.duplicate_tolerance)) {
    for (int k = 0; k < d && near_observed(posterior, out.unit, config.duplicate_tolerance); ++k) {
      Eigen::VectorXd moved = out.unit;
      moved[k] = out.unit[k] + config.duplicate_step <= 1.0 ? out.unit[k] + config.duplicate_step
                                                            : out.unit[k] - config.duplicate_step;
      out.unit = moved;
    }
    out.perturbed = true;
    out.ei = acquisition(posterior, out.unit, f_min);
  }
  out.latent_std = std::sqrt(posterior.predict(out.unit).latent_var);
  return out;
}

DesignVector propose_next(const GpPosterior& posterior, const FeasibleRegion& region, double f_min,
                          const BoConfig& config, std::mt19937_64& rng) {
  const Proposal p = propose_next_unit(posterior, f_min, config, rng);
  return from_unit_cube(region, std::vector<double>(p.unit.data(), p.unit.data() + p.unit.size()));
}

SafeguardDecision safeguard_check(const GpPosterior& posterior, const Eigen::VectorXd& unit, const BoConfig& config) {
  const double latent_std = std::sqrt(posterior.predict(unit).latent_var);
  const double noise_std = std::sqrt(posterior.model().noise_var);
  return latent_std < config.t_sigma * noise_std ? SafeguardDecision::Inflate : SafeguardDecision::Accept;
}

std::vector<double> OptimizationTrace::best_so_far() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.best_loss);
  return out;
}

double OptimizationTrace::best_after_iteration(std::size_t k) const {
  if (records.empty()) throw Error("trace is empty");
  const std::size_t idx = std::min(initial_evaluations + k, records.size()) - 1;
  return records[idx].best_loss;
}

const TraceRecord* OptimizationTrace::best() const {
  const TraceRecord* best = nullptr;
  for (const auto& r : records)
    if (!best || r.loss < best->loss) best = &r;
  return best;
}

OptimizationTrace run_seed(const Evaluator& evaluator, ObjectiveKind objective, const ObjectiveWeights& weights,
                           const BoConfig& config, std::uint64_t seed) {
  config.validate();
  const FeasibleRegion& region = evaluator.region();
  const int d = static_cast<int>(region.dims());

  OptimizationTrace trace;
  trace.seed = seed;
  std::mt19937_64 rng(seed);

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  double best_loss = std::numeric_limits<double>::infinity();

  auto record = [&](TraceRecord rec, const DesignVector& phi) {
    const EvaluationResult res = evaluator.evaluate(phi);
    rec.evaluation = trace.records.size() + 1;
    rec.phi = phi;
    rec.unit = to_unit_cube(region, phi);
    rec.score = score(res, objective, weights);
    rec.loss = to_minimization(rec.score);
    best_loss = std::min(best_loss, rec.loss);
    rec.best_loss = best_loss;
    xs.push_back(Eigen::Map<const Eigen::VectorXd>(rec.unit.data(), d));
    ys.push_back(rec.loss);
    trace.records.push_back(std::move(rec));
  };

  try {
    for (const auto& phi : config.warm_start) {
      if (!contains(region, phi)) throw Error("warm-start design lies outside the feasible region");
      TraceRecord rec;
      rec.phase = "warm";
      record(std::move(rec), phi);
    }
    std::optional<std::uint64_t> shift;
    if (config.shift_sobol_per_seed) shift = seed;
    for (const auto& u : sobol_points(d, config.n_sobol, config.sobol_skip, config.sobol_leap, shift)) {
      TraceRecord rec;
      rec.phase = "sobol";
      record(std::move(rec), from_unit_cube(region, u));
    }
    trace.initial_evaluations = trace.records.size();

    FitOptions fit;
    fit.widths = Eigen::VectorXd::Ones(d);
    fit.starts = config.fit_starts;
    for (std::size_t it = 1; it <= config.n_iterations; ++it) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(xs.size()), d);
      for (std::size_t i = 0; i < xs.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
      const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));

      fit.seed = seed * 1000003ULL + it;
      const FitResult fitted = fit_hyperparameters(x, y, fit);
      GpModel model = fitted.model(x, y);
      auto post = std::make_unique<GpPosterior>(model);
      const double f_min = y.minCoeff();

      Proposal prop = propose_next_unit(*post, f_min, config, rng);
      int inflations = 0;
      bool capped = false;
      while (safeguard_check(*post, prop.unit, config) == SafeguardDecision::Inflate) {
        if (inflations == config.max_inflations) {
          capped = true;
          break;
        }
        model.kernel = inflate_kernel(model.kernel, config.inflation_factor);
        post = std::make_unique<GpPosterior>(model);
        prop = propose_next_unit(*post, f_min, config, rng);
        ++inflations;
      }

      TraceRecord rec;
      rec.phase = "bo";
      rec.kernel = fitted.kernel;
      rec.noise_var = fitted.noise_var;
      rec.ei = prop.ei;
      rec.inflations = inflations;
      rec.safeguard_triggered = inflations > 0 || capped;
      rec.safeguard_capped = capped;
      std::vector<double> u(prop.unit.data(), prop.unit.data() + d);
      record(std::move(rec), from_unit_cube(region, u));
    }
  } catch (const std::exception& e) {
    trace.error = e.what();
  }
  if (trace.initial_evaluations == 0) trace.initial_evaluations = trace.records.size();
  return trace;
}

AggregateStats aggregate_traces(const std::vector<OptimizationTrace>& traces) {
  AggregateStats agg;
  std::vector<std::vector<double>> curves;
  for (const auto& t : traces)
    if (!t.records.empty()) curves.push_back(t.best_so_far());
  if (curves.empty()) return agg;
  const ConvergenceSummary summary = convergence_summary(curves);
  agg.mean_best = summary.mean;
  agg.std_best = summary.stddev;
  const TraceRecord* best = nullptr;
  for (const auto& t : traces) {
    const TraceRecord* b = t.best();
    if (b && (!best || b->loss < best->loss)) best = b;
  }
  if (best) {
    agg.best_phi = best->phi;
    agg.best_score = best->score;
  }
  return agg;
}

RunResult run(const Evaluator& evaluator, ObjectiveKind objective, const ObjectiveWeights& weights,
              const BoConfig& config, unsigned threads) {
  config.validate();
  RunResult result;
  result.traces.resize(config.seeds.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.seeds.size())));

  std::mutex mutex;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t job;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next >= config.seeds.size()) return;
        job = next++;
      }
      result.traces[job] = run_seed(evaluator, objective, weights, config, config.seeds[job]);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.aggregate = aggregate_traces(result.traces);
  return result;
}

}  // namespace osteoplan
