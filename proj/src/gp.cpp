// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/gp.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "oeibo/optimize.hpp"

namespace oeibo::gp {

namespace {

Matrix gram(const Kernel& kernel, const Matrix& A, const Matrix& B) {
  Matrix K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < B.rows(); ++j) {
      K(i, j) = kernel_eval(kernel, A.row(i), B.row(j)).value;
    }
  }
  return K;
}

Vector mean_values(const MeanFunction& mean, const Matrix& X) {
  Vector v(X.rows());
  for (Index i = 0; i < X.rows(); ++i) v(i) = mean.value(X.row(i));
  return v;
}

/// Factorizes G + j*I, escalating j by x10 within the policy bounds.
/// Returns the jitter that succeeded; throws when the cap is exceeded.
double factorize_with_jitter(const Matrix& G, double noise, const Kernel& kernel,
                             const JitterPolicy& policy, Eigen::LLT<Matrix>& llt) {
  double jitter = policy.base * kernel.variance;
  const double cap = policy.max * kernel.variance;
  while (true) {
    Matrix Gj = G;
    Gj.diagonal().array() += noise + jitter;
    llt.compute(Gj);
    if (llt.info() == Eigen::Success) return jitter;
    jitter *= 10.0;
    if (jitter > cap * (1.0 + 1e-12)) {
      throw IllConditionedError("ill-conditioned kernel matrix");
    }
  }
}

}  // namespace

PosteriorMoments posterior(const Dataset& data, const Kernel& kernel, const MeanFunction& mean,
                           const Matrix& X, double noise, const JitterPolicy& policy) {
  if (X.rows() < 1) throw std::invalid_argument("posterior: empty batch");
  if (noise < 0.0) throw std::invalid_argument("posterior: negative noise");

  PosteriorMoments out;
  const Matrix Kxx = gram(kernel, X, X);
  if (data.empty()) {
    out.mean = mean_values(mean, X);
    out.covariance = Kxx;
  } else {
    if (data.dimension() != X.cols()) throw std::invalid_argument("posterior: dimension mismatch");
    Eigen::LLT<Matrix> llt;
    factorize_with_jitter(gram(kernel, data.inputs(), data.inputs()), noise, kernel, policy, llt);
    const Vector resid = data.values() - mean_values(mean, data.inputs());
    const Matrix B = gram(kernel, X, data.inputs());
    const Vector alpha = llt.solve(resid);
    const Matrix W = llt.solve(B.transpose());
    out.mean = mean_values(mean, X) + B * alpha;
    out.covariance = Kxx - B * W;
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();

  // Verify positive definiteness of the batch covariance under the same
  // escalation policy; record the jitter that worked.
  double jitter = policy.base * kernel.variance;
  const double cap = policy.max * kernel.variance;
  out.covariance_pd = false;
  while (true) {
    Matrix Sj = out.covariance;
    Sj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(Sj);
    if (llt.info() == Eigen::Success) {
      out.covariance_pd = true;
      break;
    }
    if (jitter * 10.0 > cap * (1.0 + 1e-12)) break;
    jitter *= 10.0;
  }
  out.jitter = jitter;
  return out;
}

PosteriorJacobian posterior_jacobian(const Dataset& data, const Kernel& kernel,
                                     const MeanFunction& mean, const Matrix& X, double noise,
                                     const JitterPolicy& policy) {
  const Index k = X.rows();
  const Index n = X.cols();
  const Index ell = data.size();

  Vector alpha;
  Matrix W;
  if (!data.empty()) {
    Eigen::LLT<Matrix> llt;
    factorize_with_jitter(gram(kernel, data.inputs(), data.inputs()), noise, kernel, policy, llt);
    const Vector resid = data.values() - mean_values(mean, data.inputs());
    const Matrix B = gram(kernel, X, data.inputs());
    alpha = llt.solve(resid);
    W = llt.solve(B.transpose());  // ell x k
  }

  // Per batch row r: kernel gradients against the data and the batch.
  std::vector<Matrix> grad_data(k);  // n x ell, column t = d kappa(x_r, xd_t) / dx_r
  std::vector<Matrix> grad_batch(k);  // n x k, column j = d kappa(x_r, x_j) / dx_r
  std::vector<Vector> grad_mean(k);
  for (Index r = 0; r < k; ++r) {
    grad_data[r].resize(n, ell);
    for (Index t = 0; t < ell; ++t) {
      grad_data[r].col(t) = kernel_eval(kernel, X.row(r), data.inputs().row(t), 1).grad;
    }
    grad_batch[r] = Matrix::Zero(n, k);
    for (Index j = 0; j < k; ++j) {
      if (j == r) continue;  // kappa(x, x) is constant for stationary kernels
      grad_batch[r].col(j) = kernel_eval(kernel, X.row(r), X.row(j), 1).grad;
    }
    grad_mean[r] = mean.gradient(X.row(r));
  }

  PosteriorJacobian out;
  out.dmean.resize(static_cast<std::size_t>(k * n));
  out.dcovariance.resize(static_cast<std::size_t>(k * n));
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < k; ++r) {
      const Index idx = r + k * c;
      Vector dmu = Vector::Zero(k);
      dmu(r) = grad_mean[r](c);
      Matrix dSig = Matrix::Zero(k, k);
      for (Index j = 0; j < k; ++j) {
        if (j == r) continue;
        const double g = grad_batch[r](c, j);
        dSig(r, j) += g;
        dSig(j, r) += g;
      }
      if (!data.empty()) {
        const Vector db = grad_data[r].row(c).transpose();  // ell
        dmu(r) += db.dot(alpha);
        const Vector v = W.transpose() * db;  // k
        dSig.row(r) -= v.transpose();
        dSig.col(r) -= v;
      }
      out.dmean[static_cast<std::size_t>(idx)] = std::move(dmu);
      out.dcovariance[static_cast<std::size_t>(idx)] = std::move(dSig);
    }
  }
  return out;
}

MomentMatrix moment_matrix(const PosteriorMoments& post) {
  const Index k = post.mean.size();
  MomentMatrix mm;
  mm.omega.resize(k + 1, k + 1);
  mm.omega.topLeftCorner(k, k) = post.effective_covariance() + post.mean * post.mean.transpose();
  mm.omega.topRightCorner(k, 1) = post.mean;
  mm.omega.bottomLeftCorner(1, k) = post.mean.transpose();
  mm.omega(k, k) = 1.0;
  return mm;
}

std::vector<Matrix> moment_matrix_jacobian(const Dataset& data, const Kernel& kernel,
                                           const MeanFunction& mean, const Matrix& X, double noise,
                                           const JitterPolicy& policy) {
  const Index k = X.rows();
  const PosteriorMoments post = posterior(data, kernel, mean, X, noise, policy);
  const PosteriorJacobian jac = posterior_jacobian(data, kernel, mean, X, noise, policy);

  std::vector<Matrix> out(jac.dmean.size());
  for (std::size_t i = 0; i < jac.dmean.size(); ++i) {
    const Vector& dmu = jac.dmean[i];
    Matrix dOmega = Matrix::Zero(k + 1, k + 1);
    dOmega.topLeftCorner(k, k) =
        jac.dcovariance[i] + dmu * post.mean.transpose() + post.mean * dmu.transpose();
    dOmega.topRightCorner(k, 1) = dmu;
    dOmega.bottomLeftCorner(1, k) = dmu.transpose();
    out[i] = std::move(dOmega);
  }
  return out;
}

MomentMatrix marginalized_moment_matrix(const std::vector<MomentMatrix>& omegas) {
  if (omegas.empty()) throw std::invalid_argument("marginalized_moment_matrix: empty list");
  Matrix acc = omegas.front().omega;
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    if (omegas[i].omega.rows() != acc.rows()) {
      throw std::invalid_argument("marginalized_moment_matrix: dimension mismatch");
    }
    acc += omegas[i].omega;
  }
  acc /= static_cast<double>(omegas.size());
  return MomentMatrix{std::move(acc)};
}

LogMarginalLikelihood log_marginal_likelihood(const Dataset& data, const Kernel& kernel,
                                              const MeanFunction& mean, double noise,
                                              const JitterPolicy& policy) {
  if (data.empty()) throw std::invalid_argument("log_marginal_likelihood: empty dataset");
  const Index ell = data.size();
  const Matrix K = gram(kernel, data.inputs(), data.inputs());
  Eigen::LLT<Matrix> llt;
  const double jitter = factorize_with_jitter(K, noise, kernel, policy, llt);

  const Vector resid = data.values() - mean_values(mean, data.inputs());
  const Vector alpha = llt.solve(resid);

  double logdet = 0.0;
  for (Index i = 0; i < ell; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));

  LogMarginalLikelihood out;
  out.value = -0.5 * resid.dot(alpha) - 0.5 * logdet - 0.5 * ell * std::log(2.0 * M_PI);

  // Gradient over (log lengthscale, log variance). The jitter scales with
  // the variance, so it contributes to the second component.
  Matrix dG_dll(ell, ell);
  for (Index i = 0; i < ell; ++i) {
    for (Index j = 0; j < ell; ++j) {
      const double r = (data.inputs().row(i) - data.inputs().row(j)).norm();
      dG_dll(i, j) = kernel_dlog_lengthscale(kernel, r);
    }
  }
  Matrix dG_dlv = K;
  dG_dlv.diagonal().array() += jitter;

  out.gradient.resize(2);
  const auto dir = [&](const Matrix& dG) {
    const Matrix GinvdG = llt.solve(dG);
    return 0.5 * (alpha.dot(dG * alpha) - GinvdG.trace());
  };
  out.gradient(0) = dir(dG_dll);
  out.gradient(1) = dir(dG_dlv);
  return out;
}

Kernel fit_kernel(const Dataset& data, KernelFamily family, const MeanFunction& mean, double noise,
                  const FitOptions& options) {
  if (data.empty()) throw std::invalid_argument("fit_kernel: empty dataset");

  opt::BoxDomain box;
  box.lower = Vector(2);
  box.upper = Vector(2);
  box.lower << options.log_lengthscale_lo, options.log_variance_lo;
  box.upper << options.log_lengthscale_hi, options.log_variance_hi;

  const auto objective = [&](const Vector& theta, Vector& grad) {
    const Kernel k(family, std::exp(theta(1)), std::exp(theta(0)));
    const LogMarginalLikelihood lml = log_marginal_likelihood(data, k, mean, noise);
    grad = -lml.gradient;
    return -lml.value;
  };

  opt::MultistartConfig cfg;
  cfg.restarts = options.restarts;
  cfg.max_iterations = options.max_iterations;
  cfg.seed = options.seed;
  cfg.mode = opt::Mode::QuasiNewton;
  const opt::MinimizeResult res = opt::minimize(opt::make_objective(objective), box, cfg);
  return Kernel(family, std::exp(res.x(1)), std::exp(res.x(0)));
}

}  // namespace oeibo::gp
