#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace osteoplan {

/// ARD Matern 5/2 hyperparameters.
struct KernelParams {
  double sigma_f = 1.0;
  Eigen::VectorXd lengthscales;

  void validate() const;
};

/// Exact GP with constant prior mean and Gaussian observation noise. Rows of
/// `inputs` are observation locations.
struct GpModel {
  KernelParams kernel;
  double noise_var = 1e-6;  // sigma^2
  double prior_mean = 0.0;
  Eigen::MatrixXd inputs;   // N x d
  Eigen::VectorXd targets;  // N

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
  Eigen::Index dims() const { return kernel.lengthscales.size(); }
};

struct PosteriorValue {
  double mean = 0.0;            // mu_N
  double latent_var = 0.0;      // sigma_F^2
  double predictive_var = 0.0;  // sigma_Q^2 = sigma_F^2 + sigma^2
};

/// Diagonal jitter schedule for the Cholesky factorisation, relative to the
/// mean diagonal of K + sigma^2 I. The first attempt adds nothing; after a
/// failure the jitter starts at `first` and grows by 10x up to `last`.
struct JitterPolicy {
  double first = 1e-10;
  double last = 1e-4;
};

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& params);

/// Gram matrix K(A, B).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params);

/// Factorised posterior. Build once per fitted model, then query many times.
class GpPosterior {
 public:
  explicit GpPosterior(GpModel model, JitterPolicy jitter = {});

  PosteriorValue predict(const Eigen::VectorXd& x) const;
  const GpModel& model() const { return model_; }
  double jitter() const { return jitter_; }
  /// Log marginal likelihood of the stored targets.
  double log_marginal_likelihood() const;

 private:
  GpModel model_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// One-shot posterior at x (factorises on every call).
PosteriorValue posterior(const GpModel& model, const Eigen::VectorXd& x, JitterPolicy jitter = {});

struct FitOptions {
  Eigen::VectorXd widths;      // per-dimension input range
  int starts = 8;
  std::uint64_t seed = 20240;  // start k uses seed + k
  int max_evaluations_per_start = 600;
  double min_step = 1e-3;      // in log units
};

struct FitResult {
  KernelParams kernel;
  double noise_var = 0.0;
  double prior_mean = 0.0;
  double log_likelihood = 0.0;

  GpModel model(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) const;
};

/// Maximises the log marginal likelihood over log sigma_f, log l_m and log
/// sigma^2 by multi-start compass search within
///   l_m in [1e-2, 1e2] * width_m, sigma_f in [1e-3, 1e1] * std(y),
///   sigma^2 in [1e-8, 1] * var(y).
/// The prior mean is fixed to mean(y). Requires at least 3 observations.
FitResult fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const FitOptions& options);

/// Multiplies sigma_f and every length scale by `factor` (> 0).
KernelParams inflate_kernel(const KernelParams& params, double factor);

}  // namespace osteoplan
