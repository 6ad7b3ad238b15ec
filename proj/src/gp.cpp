#include "osteoplan/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "osteoplan/errors.hpp"

namespace osteoplan {
namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

double matern52(double r, double sigma_f) {
  const double s = kSqrt5 * r;
  return sigma_f * sigma_f * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

}  // namespace

void KernelParams::validate() const {
  if (!(sigma_f > 0.0)) throw Error("kernel: sigma_f must be positive");
  if (lengthscales.size() == 0) throw Error("kernel: no length scales");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
    if (!(lengthscales[i] > 0.0)) throw Error("kernel: length scales must be positive");
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& params) {
  if (x.size() != y.size() || x.size() != params.lengthscales.size())
    throw Error(fmt::format("kernel_eval: dimension mismatch ({}, {}, {} length scales)", x.size(), y.size(),
                            params.lengthscales.size()));
  const double r = ((x - y).array() / params.lengthscales.array()).matrix().norm();
  return matern52(r, params.sigma_f);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params) {
  if (a.cols() != params.lengthscales.size() || b.cols() != params.lengthscales.size())
    throw Error("kernel_matrix: dimension mismatch");
  const Eigen::ArrayXd inv = params.lengthscales.array().inverse();
  const Eigen::MatrixXd as = a * inv.matrix().asDiagonal();
  const Eigen::MatrixXd bs = b * inv.matrix().asDiagonal();
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = matern52((as.row(i) - bs.row(j)).norm(), params.sigma_f);
  return k;
}

GpPosterior::GpPosterior(GpModel model, JitterPolicy jitter) : model_(std::move(model)) {
  model_.kernel.validate();
  if (!(model_.noise_var > 0.0)) throw Error("gp: noise variance must be positive");
  const Eigen::Index n = model_.targets.size();
  if (model_.inputs.rows() != n) throw Error("gp: inputs and targets disagree in length");
  if (n == 0) return;
  if (model_.inputs.cols() != model_.dims()) throw Error("gp: input dimension does not match the kernel");

  Eigen::MatrixXd k = kernel_matrix(model_.inputs, model_.inputs, model_.kernel);
  k.diagonal().array() += model_.noise_var;
  const double scale = k.trace() / static_cast<double>(n);

  double add = 0.0;
  for (;;) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += add;
    chol_.compute(kj);
    if (chol_.info() == Eigen::Success && (chol_.matrixLLT().diagonal().array() > 0.0).all()) break;
    const double next = add == 0.0 ? jitter.first * scale : add * 10.0;
    if (!(next > add) || next > jitter.last * scale * (1.0 + 1e-12))
      throw Error("gp: kernel matrix is not positive definite even with maximal jitter");
    add = next;
  }
  jitter_ = add;
  alpha_ = chol_.solve(model_.targets - Eigen::VectorXd::Constant(n, model_.prior_mean));
}

PosteriorValue GpPosterior::predict(const Eigen::VectorXd& x) const {
  const double prior_var = model_.kernel.sigma_f * model_.kernel.sigma_f;
  PosteriorValue out;
  if (model_.targets.size() == 0) {
    if (x.size() != model_.dims()) throw Error("gp: query dimension mismatch");
    out.mean = model_.prior_mean;
    out.latent_var = prior_var;
    out.predictive_var = prior_var + model_.noise_var;
    return out;
  }
  if (x.size() != model_.dims()) throw Error("gp: query dimension mismatch");
  const Eigen::VectorXd kx = kernel_matrix(model_.inputs, x.transpose(), model_.kernel).col(0);
  out.mean = model_.prior_mean + kx.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(kx);
  out.latent_var = std::max(0.0, prior_var - v.squaredNorm());
  out.predictive_var = out.latent_var + model_.noise_var;
  return out;
}

double GpPosterior::log_marginal_likelihood() const {
  const Eigen::Index n = model_.targets.size();
  if (n == 0) return 0.0;
  const Eigen::VectorXd r = model_.targets - Eigen::VectorXd::Constant(n, model_.prior_mean);
  const double log_det = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  return -0.5 * r.dot(alpha_) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

PosteriorValue posterior(const GpModel& model, const Eigen::VectorXd& x, JitterPolicy jitter) {
  return GpPosterior(model, jitter).predict(x);
}

GpModel FitResult::model(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const {
  return GpModel{kernel, noise_var, prior_mean, inputs, targets};
}

FitResult fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const FitOptions& options) {
  const Eigen::Index n = targets.size();
  const Eigen::Index d = inputs.cols();
  if (n < 3) throw Error(fmt::format("fit_hyperparameters: need at least 3 observations, got {}", n));
  if (inputs.rows() != n) throw Error("fit_hyperparameters: inputs and targets disagree in length");
  if (options.widths.size() != d) throw Error("fit_hyperparameters: widths must match the input dimension");

  const double mean = targets.mean();
  const double var = (targets.array() - mean).square().sum() / static_cast<double>(n);
  const double y_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  // Parameter layout: [log sigma_f, log l_1..l_d, log sigma^2].
  const Eigen::Index p = d + 2;
  Eigen::VectorXd lo(p), hi(p);
  lo[0] = std::log(1e-3 * y_scale);
  hi[0] = std::log(1e1 * y_scale);
  for (Eigen::Index m = 0; m < d; ++m) {
    if (!(options.widths[m] > 0.0)) throw Error("fit_hyperparameters: widths must be positive");
    lo[m + 1] = std::log(1e-2 * options.widths[m]);
    hi[m + 1] = std::log(1e2 * options.widths[m]);
  }
  lo[p - 1] = std::log(1e-8 * y_scale * y_scale);
  hi[p - 1] = std::log(1.0 * y_scale * y_scale);

  auto unpack = [&](const Eigen::VectorXd& theta) {
    FitResult r;
    r.kernel.sigma_f = std::exp(theta[0]);
    r.kernel.lengthscales = theta.segment(1, d).array().exp();
    r.noise_var = std::exp(theta[p - 1]);
    r.prior_mean = mean;
    return r;
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    try {
      return GpPosterior(unpack(theta).model(inputs, targets)).log_marginal_likelihood();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  FitResult best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int start = 0; start < options.starts; ++start) {
    Eigen::VectorXd theta(p);
    if (start == 0) {
      // Deterministic centre-ish start: unit signal, quarter-width scales, small noise.
      theta[0] = std::log(y_scale);
      for (Eigen::Index m = 0; m < d; ++m) theta[m + 1] = std::log(0.25 * options.widths[m]);
      theta[p - 1] = std::log(1e-4 * y_scale * y_scale);
    } else {
      std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(start));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (Eigen::Index k = 0; k < p; ++k) theta[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
    }
    theta = theta.cwiseMax(lo).cwiseMin(hi);

    double value = objective(theta);
    int evals = 1;
    double step = 1.0;
    while (step >= options.min_step && evals < options.max_evaluations_per_start) {
      bool improved = false;
      for (Eigen::Index k = 0; k < p && evals < options.max_evaluations_per_start; ++k) {
        for (double dir : {1.0, -1.0}) {
          Eigen::VectorXd trial = theta;
          trial[k] = std::clamp(theta[k] + dir * step, lo[k], hi[k]);
          if (trial[k] == theta[k]) continue;
          const double v = objective(trial);
          ++evals;
          if (v > value) {
            value = v;
            theta = trial;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (!have_best || value > best.log_likelihood) {
      best = unpack(theta);
      best.log_likelihood = value;
      have_best = true;
    }
  }
  if (!std::isfinite(best.log_likelihood)) throw Error("fit_hyperparameters: likelihood is not finite for any start");
  return best;
}

KernelParams inflate_kernel(const KernelParams& params, double factor) {
  if (!(factor > 0.0)) throw Error("inflate_kernel: factor must be positive");
  KernelParams out = params;
  out.sigma_f *= factor;
  out.lengthscales *= factor;
  return out;
}

}  // namespace osteoplan
