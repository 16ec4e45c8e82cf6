// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/oei.hpp"

#include <cmath>
#include <cstring>

namespace oeibo::oei {

namespace {

std::uint64_t hash_matrix(const Matrix& X) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      std::uint64_t bits = 0;
      const double v = X(i, j);
      std::memcpy(&bits, &v, sizeof(bits));
      h = (h ^ bits) * 0x100000001b3ULL;
    }
  }
  return h;
}

double fd_step(double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * (1.0 + std::abs(x));
}

}  // namespace

bool perturb_duplicate_rows(Matrix& X, double diameter, double distance_rel, double jitter_rel) {
  const Index k = X.rows();
  const double threshold = distance_rel * diameter;
  bool any = false;
  RandomStream rng(split_seed(hash_matrix(X), 0x6f65695fULL));
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      if ((X.row(i) - X.row(j)).norm() < threshold) {
        for (Index c = 0; c < X.cols(); ++c) {
          X(j, c) += rng.uniform(-1.0, 1.0) * jitter_rel * diameter;
        }
        any = true;
      }
    }
  }
  return any;
}

OeiEvaluator::OeiEvaluator(gp::GpModel model, EvaluatorOptions options)
    : model_(std::move(model)), options_(options), solver_(options.solver) {}

AcquisitionEval OeiEvaluator::evaluate_omega(const Matrix& X, const gp::MomentMatrix& omega,
                                             const std::vector<Matrix>* jacobian,
                                             bool want_hessian) {
  sdp::SdpProblem problem;
  try {
    problem = sdp::build_problem(omega, model_.data.incumbent());
  } catch (const DegeneratePosteriorError&) {
    throw DegeneratePosteriorError("perturb duplicate batch points: posterior moment matrix is degenerate");
  }

  std::optional<sdp::WarmStart> warm;
  if (options_.warm_start && warm_.has_value() && warm_->block_size() == problem.block_size()) {
    warm = warm_;
  }
  AcquisitionEval out;
  out.solution = solver_.solve(problem, warm, options_.sdp_tol);
  if (options_.warm_start && out.solution.converged) {
    warm_ = sdp::warm_start_from(out.solution);
  }
  out.value = out.solution.value;
  out.batch = X;

  if (jacobian != nullptr) {
    const Index coords = static_cast<Index>(jacobian->size());
    out.gradient.resize(coords);
    for (Index i = 0; i < coords; ++i) {
      out.gradient(i) =
          out.solution.m_bar.cwiseProduct((*jacobian)[static_cast<std::size_t>(i)]).sum();
    }
  }

  if (want_hessian && jacobian != nullptr) {
    const Index k = X.rows();
    const Index n = X.cols();
    const Index coords = k * n;
    Matrix H(coords, coords);

    bool analytic_second_term = true;
    try {
      const DerivativeSystem dsys(out.solution);
      for (Index i = 0; i < coords; ++i) {
        const Matrix m_dot = dsys.directional_derivative((*jacobian)[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < coords; ++j) {
          H(i, j) = m_dot.cwiseProduct((*jacobian)[static_cast<std::size_t>(j)]).sum();
        }
      }
    } catch (const std::exception&) {
      analytic_second_term = false;
    }

    if (analytic_second_term) {
      // First term of the chain rule: contract the optimizer against the
      // second derivatives of the moment matrix, obtained by central
      // differences of the analytic first derivatives.
      const Matrix& m_bar = out.solution.m_bar;
      const auto contracted_gradient = [&](const Matrix& Xp) {
        const std::vector<Matrix> jac = gp::moment_matrix_jacobian(model_, Xp);
        Vector g(coords);
        for (Index j = 0; j < coords; ++j) {
          g(j) = m_bar.cwiseProduct(jac[static_cast<std::size_t>(j)]).sum();
        }
        return g;
      };
      for (Index i = 0; i < coords; ++i) {
        const Index r = i % k;
        const Index c = i / k;
        const double h = fd_step(X(r, c));
        Matrix Xp = X;
        Xp(r, c) += h;
        const Vector gp_ = contracted_gradient(Xp);
        Xp(r, c) -= 2.0 * h;
        const Vector gm = contracted_gradient(Xp);
        H.col(i) += (gp_ - gm) / (2.0 * h);
      }
    } else {
      // Fallback: central differences of the full analytic gradient, with
      // fresh solves warm-started from the current solution.
      out.hessian_by_finite_differences = true;
      const auto gradient_at = [&](const Matrix& Xp) {
        const gp::PosteriorMoments post = gp::posterior(model_, Xp);
        const gp::MomentMatrix om = gp::moment_matrix(post);
        const sdp::SdpProblem prob = sdp::build_problem(om, model_.data.incumbent());
        const sdp::SdpSolution sol =
            solver_.solve(prob, sdp::warm_start_from(out.solution), options_.sdp_tol);
        const std::vector<Matrix> jac = gp::moment_matrix_jacobian(model_, Xp);
        Vector g(coords);
        for (Index j = 0; j < coords; ++j) {
          g(j) = sol.m_bar.cwiseProduct(jac[static_cast<std::size_t>(j)]).sum();
        }
        return g;
      };
      for (Index i = 0; i < coords; ++i) {
        const Index r = i % k;
        const Index c = i / k;
        const double h = fd_step(X(r, c));
        Matrix Xp = X;
        Xp(r, c) += h;
        const Vector gp_ = gradient_at(Xp);
        Xp(r, c) -= 2.0 * h;
        const Vector gm = gradient_at(Xp);
        H.col(i) = (gp_ - gm) / (2.0 * h);
      }
    }

    const double norm = H.norm();
    out.hessian_asymmetry = norm > 0.0 ? (H - H.transpose()).norm() / norm : 0.0;
    out.hessian = (0.5 * (H + H.transpose())).eval();
  }
  return out;
}

AcquisitionEval OeiEvaluator::evaluate(const Matrix& X, bool want_gradient, bool want_hessian) {
  Matrix Xe = X;
  const bool perturbed = perturb_duplicate_rows(Xe, options_.domain_diameter,
                                                options_.duplicate_distance_rel,
                                                options_.duplicate_jitter_rel);
  if (perturbed) ++perturbation_count_;

  const gp::PosteriorMoments post = gp::posterior(model_, Xe);
  const gp::MomentMatrix omega = gp::moment_matrix(post);

  std::vector<Matrix> jac;
  const bool need_jacobian = want_gradient || want_hessian;
  if (need_jacobian) jac = gp::moment_matrix_jacobian(model_, Xe);

  AcquisitionEval out =
      evaluate_omega(Xe, omega, need_jacobian ? &jac : nullptr, want_hessian);
  out.perturbed = perturbed;
  return out;
}

AcquisitionEval OeiEvaluator::evaluate_marginalized(const Matrix& X,
                                                    const std::vector<gp::Kernel>& samples,
                                                    bool want_gradient) {
  if (samples.empty()) {
    throw std::invalid_argument("evaluate_marginalized: need at least one hyperparameter sample");
  }
  Matrix Xe = X;
  const bool perturbed = perturb_duplicate_rows(Xe, options_.domain_diameter,
                                                options_.duplicate_distance_rel,
                                                options_.duplicate_jitter_rel);
  if (perturbed) ++perturbation_count_;

  std::vector<gp::MomentMatrix> omegas;
  omegas.reserve(samples.size());
  std::vector<Matrix> jac_mean;
  for (const gp::Kernel& kernel : samples) {
    omegas.push_back(gp::moment_matrix(
        gp::posterior(model_.data, kernel, model_.mean, Xe, model_.noise)));
    if (want_gradient) {
      const std::vector<Matrix> jac =
          gp::moment_matrix_jacobian(model_.data, kernel, model_.mean, Xe, model_.noise);
      if (jac_mean.empty()) {
        jac_mean = jac;
      } else {
        for (std::size_t i = 0; i < jac.size(); ++i) jac_mean[i] += jac[i];
      }
    }
  }
  for (Matrix& j : jac_mean) j /= static_cast<double>(samples.size());

  const gp::MomentMatrix averaged = gp::marginalized_moment_matrix(omegas);
  AcquisitionEval out =
      evaluate_omega(Xe, averaged, want_gradient ? &jac_mean : nullptr, false);
  out.perturbed = perturbed;
  return out;
}

Matrix solution_derivative(const sdp::SdpSolution& solution, const Matrix& direction) {
  const DerivativeSystem dsys(solution);
  return dsys.directional_derivative(direction);
}

WorstCaseDistribution worst_case_distribution(const sdp::SdpSolution& solution) {
  if (!solution.converged) {
    throw std::invalid_argument("worst_case_distribution: solution did not converge");
  }
  const int p = solution.problem.block_size();
  const int k = solution.problem.k;

  WorstCaseDistribution out;
  std::vector<std::pair<Vector, double>> kept;
  kept.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    const Vector& y = solution.dual_factors[static_cast<std::size_t>(i)];
    const double w = y(p - 1);
    if (std::abs(w) <= 1e-8) {
      out.complete = false;  // atom at infinity or negligible weight
      continue;
    }
    kept.emplace_back(y.head(k) / w, w * w);
  }
  out.atoms.resize(static_cast<Index>(kept.size()), k);
  out.weights.resize(static_cast<Index>(kept.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.atoms.row(static_cast<Index>(i)) = kept[i].first.transpose();
    out.weights(static_cast<Index>(i)) = kept[i].second;
    total += kept[i].second;
  }
  if (total > 0.0) out.weights /= total;
  return out;
}

}  // namespace oeibo::oei
