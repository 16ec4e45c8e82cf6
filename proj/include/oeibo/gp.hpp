// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "oeibo/dataset.hpp"
#include "oeibo/kernel.hpp"
#include "oeibo/mean.hpp"

namespace oeibo::gp {

/// Relative jitter policy: `base * variance` is always added to prior
/// covariance diagonals; on factorization failure the jitter escalates by
/// x10 up to `max * variance` before giving up.
struct JitterPolicy {
  double base = 1e-6;
  double max = 1e-2;
};

/// Batch posterior: mean vector, covariance matrix, and the diagonal jitter
/// under which `covariance + jitter * I` was verified positive definite.
struct PosteriorMoments {
  Vector mean;
  Matrix covariance;
  double jitter = 0.0;
  bool covariance_pd = true;

  /// Covariance with the verified jitter applied.
  Matrix effective_covariance() const {
    Matrix c = covariance;
    c.diagonal().array() += jitter;
    return c;
  }
};

/// Bordered second-order moment matrix
///   [ Sigma + mu mu^T   mu ]
///   [ mu^T               1 ]
struct MomentMatrix {
  Matrix omega;

  Index batch_size() const { return omega.rows() - 1; }
  Vector mean() const { return omega.topRightCorner(batch_size(), 1); }
};

/// GP regression model bundle shared by the acquisition machinery.
struct GpModel {
  Dataset data;
  Kernel kernel;
  MeanFunction mean;
  double noise = 1e-6;
};

/// Per-coordinate derivatives of the batch posterior with respect to the
/// entries of vec(X). X is k x n and vec stacks columns, so coordinate
/// index i corresponds to batch row i % k and input dimension i / k.
struct PosteriorJacobian {
  std::vector<Vector> dmean;        // k-vector per coordinate
  std::vector<Matrix> dcovariance;  // k x k symmetric matrix per coordinate
};

/// Standard GP regression equations at batch locations X (k x n, one row
/// per point). An empty dataset yields the prior. Throws
/// IllConditionedError when the training Gram matrix cannot be factorized
/// after jitter escalation.
PosteriorMoments posterior(const Dataset& data, const Kernel& kernel, const MeanFunction& mean,
                           const Matrix& X, double noise, const JitterPolicy& policy = {});

inline PosteriorMoments posterior(const GpModel& model, const Matrix& X) {
  return posterior(model.data, model.kernel, model.mean, X, model.noise);
}

/// Analytic derivatives of posterior mean and covariance over vec(X).
PosteriorJacobian posterior_jacobian(const Dataset& data, const Kernel& kernel,
                                     const MeanFunction& mean, const Matrix& X, double noise,
                                     const JitterPolicy& policy = {});

inline PosteriorJacobian posterior_jacobian(const GpModel& model, const Matrix& X) {
  return posterior_jacobian(model.data, model.kernel, model.mean, X, model.noise);
}

/// Assembles the bordered moment matrix from the (jittered) posterior.
MomentMatrix moment_matrix(const PosteriorMoments& post);

/// d Omega / d vec(X)_i for every scalar coordinate of vec(X); each entry
/// is a symmetric (k+1) x (k+1) matrix.
std::vector<Matrix> moment_matrix_jacobian(const Dataset& data, const Kernel& kernel,
                                           const MeanFunction& mean, const Matrix& X, double noise,
                                           const JitterPolicy& policy = {});

inline std::vector<Matrix> moment_matrix_jacobian(const GpModel& model, const Matrix& X) {
  return moment_matrix_jacobian(model.data, model.kernel, model.mean, X, model.noise);
}

/// Entrywise mean of moment matrices from several hyperparameter samples.
MomentMatrix marginalized_moment_matrix(const std::vector<MomentMatrix>& omegas);

/// Log marginal likelihood and its gradient over
/// (log lengthscale, log variance).
struct LogMarginalLikelihood {
  double value = 0.0;
  Vector gradient;  // size 2
};

LogMarginalLikelihood log_marginal_likelihood(const Dataset& data, const Kernel& kernel,
                                              const MeanFunction& mean, double noise,
                                              const JitterPolicy& policy = {});

/// Hyperparameter box in log space; defaults keep fits non-degenerate on
/// normalized data.
struct FitOptions {
  double log_lengthscale_lo = std::log(1e-3);
  double log_lengthscale_hi = std::log(1e3);
  double log_variance_lo = std::log(1e-4);
  double log_variance_hi = std::log(1e4);
  int restarts = 20;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

/// Fits (lengthscale, variance) by maximizing the marginal likelihood with
/// multistart quasi-Newton in log space. Returns the fitted kernel.
Kernel fit_kernel(const Dataset& data, KernelFamily family, const MeanFunction& mean, double noise,
                  const FitOptions& options = {});

}  // namespace oeibo::gp
