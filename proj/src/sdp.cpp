// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/sdp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace oeibo::sdp {

namespace {

// vec_u position of entry (a, b), a <= b, column-stacked upper triangle.
inline int idx_u(int a, int b) { return b * (b + 1) / 2 + a; }

Matrix psd_part(const Matrix& V, Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  es.compute(V);
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

double max_eigenvalue(const Matrix& A, Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  es.compute(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

std::vector<Matrix> constraint_list(const SdpProblem& problem) {
  std::vector<Matrix> C(static_cast<std::size_t>(problem.k) + 1);
  for (int i = 0; i <= problem.k; ++i) C[static_cast<std::size_t>(i)] = problem.constraint(i);
  return C;
}

double dual_objective_of(const SdpProblem& problem, const std::vector<Vector>& ys) {
  // <y y^T, C_i> = y(i-1) y(p-1) - incumbent * y(p-1)^2 for i >= 1; C_0 = 0.
  const int p = problem.block_size();
  double obj = 0.0;
  for (int i = 1; i <= problem.k; ++i) {
    const Vector& y = ys[static_cast<std::size_t>(i)];
    obj += y(i - 1) * y(p - 1) - problem.incumbent * y(p - 1) * y(p - 1);
  }
  return obj;
}

double dual_objective_of(const SdpProblem& problem, const std::vector<Matrix>& Y) {
  const int p = problem.block_size();
  double obj = 0.0;
  for (int i = 1; i <= problem.k; ++i) {
    const Matrix& Yi = Y[static_cast<std::size_t>(i)];
    obj += Yi(i - 1, p - 1) - problem.incumbent * Yi(p - 1, p - 1);
  }
  return obj;
}

/// KKT residual pieces at (M, {y_i}): the moment equation sum_i y_i y_i^T =
/// Omega and the complementarity equations (M - C_i) y_i = 0.
struct KktResidual {
  Matrix moment;               // sum y y^T - Omega
  std::vector<Vector> compl_;  // (M - C_i) y_i
  double norm = 0.0;
};

KktResidual kkt_residual(const SdpProblem& problem, const std::vector<Matrix>& C, const Matrix& M,
                         const std::vector<Vector>& ys) {
  KktResidual r;
  const int p = problem.block_size();
  r.moment = -problem.omega;
  r.compl_.resize(ys.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    r.moment += ys[i] * ys[i].transpose();
    r.compl_[i] = (M - C[i]) * ys[i];
    acc += r.compl_[i].squaredNorm();
  }
  (void)p;
  acc += r.moment.squaredNorm();
  r.norm = std::sqrt(acc);
  return r;
}

Eigen::SparseMatrix<double> assemble_kkt(const std::vector<Matrix>& Sbar,
                                         const std::vector<Vector>& ys) {
  const int p = static_cast<int>(Sbar[0].rows());
  const int nb = static_cast<int>(ys.size());  // == p
  const int m = p * (p + 1) / 2;
  const int N = nb * p + m;

  // Structurally dense entries are always inserted so the sparsity pattern
  // is identical across Newton steps; the symbolic analysis is then reused.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(2 * nb * p * p + 2 * m * nb));
  for (int i = 0; i < nb; ++i) {
    const int row0 = i * p;
    const Matrix& S = Sbar[static_cast<std::size_t>(i)];
    const Vector& y = ys[static_cast<std::size_t>(i)];
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        trip.emplace_back(row0 + a, i * p + b, S(a, b));
        const int col = nb * p + (a <= b ? idx_u(a, b) : idx_u(b, a));
        trip.emplace_back(row0 + a, col, y(b));
      }
    }
  }
  for (int b = 0; b < p; ++b) {
    for (int a = 0; a <= b; ++a) {
      const int row = nb * p + idx_u(a, b);
      for (int i = 0; i < nb; ++i) {
        const Vector& y = ys[static_cast<std::size_t>(i)];
        trip.emplace_back(row, i * p + a, y(b));
        trip.emplace_back(row, i * p + b, y(a));
      }
    }
  }
  Eigen::SparseMatrix<double> J(N, N);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

void pack_rhs(const KktResidual& r, int p, Vector& rhs) {
  const int nb = static_cast<int>(r.compl_.size());
  const int m = p * (p + 1) / 2;
  rhs.resize(nb * p + m);
  for (int i = 0; i < nb; ++i) rhs.segment(i * p, p) = -r.compl_[static_cast<std::size_t>(i)];
  for (int b = 0; b < p; ++b) {
    for (int a = 0; a <= b; ++a) rhs(nb * p + idx_u(a, b)) = -r.moment(a, b);
  }
}

void unpack_solution(const Vector& delta, int p, std::vector<Vector>& dy, Matrix& dM) {
  const int nb = p;
  dy.resize(static_cast<std::size_t>(nb));
  for (int i = 0; i < nb; ++i) dy[static_cast<std::size_t>(i)] = delta.segment(i * p, p);
  dM.resize(p, p);
  for (int b = 0; b < p; ++b) {
    for (int a = 0; a <= b; ++a) {
      dM(a, b) = delta(nb * p + idx_u(a, b));
      dM(b, a) = dM(a, b);
    }
  }
}

/// Fixes the sign of an eigenvector-derived factor for determinism.
void normalize_sign(Vector& y) {
  const int p = static_cast<int>(y.size());
  double pivot = y(p - 1);
  if (std::abs(pivot) < 1e-14 * y.norm()) {
    Index imax = 0;
    y.cwiseAbs().maxCoeff(&imax);
    pivot = y(imax);
  }
  if (pivot < 0.0) y = -y;
}

struct PolishOutcome {
  bool success = false;
  bool attempted = false;
  Matrix m;
  std::vector<Vector> ys;
  int steps = 0;
  double kkt_norm = std::numeric_limits<double>::infinity();
  double start_kkt_norm = std::numeric_limits<double>::infinity();
  SdpResiduals residuals;
  double value = 0.0;
};

/// Newton refinement of the KKT equations in the rank-one dual
/// parameterization. Quadratic near the solution; rejected unless every
/// certificate lands under `tol`, but the best iterate is returned even on
/// failure so the caller can restart the first-order method from it. The
/// symbolic factorization is computed once and numeric refactorizations are
/// amortized over cheap chord steps.
PolishOutcome try_polish(const SdpProblem& problem, const std::vector<Matrix>& C, const Matrix& M0,
                         const std::vector<Matrix>& Y, double tol) {
  PolishOutcome out;
  const int p = problem.block_size();

  // Every multiplier is rank one with a strictly positive eigenvalue at the
  // optimum, so tiny atoms are kept: they only make the Newton system
  // ill-conditioned, which the factorization and the final certificate
  // checks already guard against.
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  Matrix M;
  std::vector<Vector> ys(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    es.compute(Y[static_cast<std::size_t>(i)]);
    const double lam = es.eigenvalues()(p - 1);
    if (!(lam > 0.0)) return out;
    ys[static_cast<std::size_t>(i)] = std::sqrt(lam) * es.eigenvectors().col(p - 1);
    normalize_sign(ys[static_cast<std::size_t>(i)]);
  }
  M = 0.5 * (M0 + M0.transpose());
  out.attempted = true;

  KktResidual res = kkt_residual(problem, C, M, ys);
  out.start_kkt_norm = res.norm;
  const double scale = 1.0 + problem.omega.norm();
  const double target = 1e-14 * scale;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  std::vector<Matrix> Sbar(static_cast<std::size_t>(p));
  Vector rhs;
  std::vector<Vector> dy;
  Matrix dM;

  bool stalled = false;
  for (int outer = 0; outer < 12 && !stalled && res.norm > target; ++outer) {
    for (int i = 0; i < p; ++i) {
      Sbar[static_cast<std::size_t>(i)] = M - C[static_cast<std::size_t>(i)];
    }
    const Eigen::SparseMatrix<double> J = assemble_kkt(Sbar, ys);
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) break;

    // One Newton step plus cheap chord steps on the same factorization.
    for (int inner = 0; inner < 4 && res.norm > target; ++inner) {
      pack_rhs(res, p, rhs);
      const Vector delta = lu.solve(rhs);
      if (!delta.allFinite()) {
        stalled = true;
        break;
      }
      unpack_solution(delta, p, dy, dM);

      bool accepted = false;
      double t = 1.0;
      for (int half = 0; half < 6; ++half) {
        Matrix Mc = M + t * dM;
        std::vector<Vector> yc(ys);
        for (int i = 0; i < p; ++i) {
          yc[static_cast<std::size_t>(i)] += t * dy[static_cast<std::size_t>(i)];
        }
        KktResidual rc = kkt_residual(problem, C, Mc, yc);
        if (rc.norm < res.norm) {
          M = std::move(Mc);
          ys = std::move(yc);
          res = std::move(rc);
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      ++out.steps;
      if (!accepted) {
        stalled = inner == 0;  // a fresh factorization made no progress
        break;
      }
      if (t < 1.0) break;  // damped step: refresh the factorization
    }
  }

  // Exact certificates for the candidate.
  double primal = 0.0;
  for (int i = 0; i < p; ++i) {
    primal = std::max(primal, max_eigenvalue(M - C[static_cast<std::size_t>(i)], es));
  }
  out.residuals.primal = std::max(primal, 0.0) / (1.0 + M.norm());
  out.residuals.dual = res.moment.norm() / (1.0 + problem.omega.norm());
  out.value = problem.omega.cwiseProduct(M).sum();
  const double dobj = dual_objective_of(problem, ys);
  out.residuals.gap = std::abs(out.value - dobj) / (1.0 + std::abs(out.value) + std::abs(dobj));
  out.success = out.residuals.max_residual() <= tol;
  out.kkt_norm = res.norm;
  out.m = std::move(M);
  out.ys = std::move(ys);
  return out;
}

}  // namespace

Matrix SdpProblem::constraint(int i) const {
  const int p = block_size();
  Matrix C = Matrix::Zero(p, p);
  if (i == 0) return C;
  if (i < 0 || i > k) throw std::out_of_range("constraint index");
  C(i - 1, p - 1) = 0.5;
  C(p - 1, i - 1) = 0.5;
  C(p - 1, p - 1) = -incumbent;
  return C;
}

SdpProblem build_problem(const Matrix& omega, double incumbent) {
  if (omega.rows() != omega.cols() || omega.rows() < 2) {
    throw std::invalid_argument("build_problem: omega must be square with k >= 1");
  }
  SdpProblem problem;
  problem.omega = 0.5 * (omega + omega.transpose());
  problem.incumbent = incumbent;
  problem.k = static_cast<int>(omega.rows()) - 1;

  Eigen::SelfAdjointEigenSolver<Matrix> es(problem.omega, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig >= 1e-9 * problem.omega.trace())) {
    throw DegeneratePosteriorError(
        "degenerate posterior: moment matrix nearly singular; perturb duplicate batch points");
  }
  return problem;
}

SdpProblem build_problem(const gp::MomentMatrix& omega, double incumbent) {
  return build_problem(omega.omega, incumbent);
}

double SdpSolution::dual_objective() const { return dual_objective_of(problem, dual_factors); }

bool SdpSolution::all_active() const {
  for (bool a : active) {
    if (!a) return false;
  }
  return !active.empty();
}

WarmStart warm_start_from(const SdpSolution& solution) {
  WarmStart ws;
  ws.m = solution.m_bar;
  ws.rho = solution.rho;
  const int p = solution.problem.block_size();
  ws.slacks.resize(static_cast<std::size_t>(p));
  ws.duals.resize(static_cast<std::size_t>(p));
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  for (int i = 0; i < p; ++i) {
    ws.duals[static_cast<std::size_t>(i)] = solution.dual_matrix(i);
    ws.slacks[static_cast<std::size_t>(i)] =
        psd_part(solution.problem.constraint(i) - solution.m_bar, es);
  }
  return ws;
}

WarmStart first_order_warm_start(const SdpSolution& prev, const Matrix& delta_omega) {
  if (!prev.converged) throw std::invalid_argument("first_order_warm_start: previous solve did not converge");
  const int p = prev.problem.block_size();
  if (delta_omega.rows() != p || delta_omega.cols() != p) {
    throw std::invalid_argument("first_order_warm_start: direction dimension mismatch");
  }
  WarmStart ws = warm_start_from(prev);
  try {
    const SolutionDerivativeSystem dsys(prev);
    const auto d = dsys.directional_derivative_full(delta_omega);
    ws.m += d.m_dot;
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    for (int i = 0; i < p; ++i) {
      const Vector& y = prev.dual_factors[static_cast<std::size_t>(i)];
      const Vector& yd = d.y_dot[static_cast<std::size_t>(i)];
      ws.duals[static_cast<std::size_t>(i)] += yd * y.transpose() + y * yd.transpose();
      ws.slacks[static_cast<std::size_t>(i)] =
          psd_part(prev.problem.constraint(i) - ws.m, es);
    }
  } catch (const std::exception&) {
    return warm_start_from(prev);  // fallback contract
  }
  return ws;
}

SdpSolution SdpSolver::solve(const SdpProblem& problem, const std::optional<WarmStart>& warm,
                             std::optional<double> tol_opt) {
  const double tol = tol_opt.value_or(options_.tol);
  if (!(tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
  const int p = problem.block_size();
  const std::vector<Matrix> C = constraint_list(problem);
  Matrix Csum = Matrix::Zero(p, p);
  for (const Matrix& Ci : C) Csum += Ci;

  const double omega_norm = problem.omega.norm();
  const double alpha = options_.over_relaxation;

  double rho = std::clamp(omega_norm / p, 1e-2, 1e3);
  Matrix M;
  std::vector<Matrix> S(static_cast<std::size_t>(p)), U(static_cast<std::size_t>(p));
  Eigen::SelfAdjointEigenSolver<Matrix> es;

  if (warm.has_value()) {
    if (warm->block_size() != p) throw std::invalid_argument("solve: warm start dimension mismatch");
    if (warm->rho > 0.0) rho = warm->rho;
    M = warm->m;
    for (int i = 0; i < p; ++i) {
      S[static_cast<std::size_t>(i)] = warm->slacks[static_cast<std::size_t>(i)];
      U[static_cast<std::size_t>(i)] = warm->duals[static_cast<std::size_t>(i)] / rho;
    }
  } else {
    // Strictly feasible primal/dual start: M in the cone interior, duals at
    // the interior point Omega / (k+1).
    M = -0.1 * (1.0 + std::abs(problem.incumbent)) * Matrix::Identity(p, p);
    for (int i = 0; i < p; ++i) {
      S[static_cast<std::size_t>(i)] = psd_part(C[static_cast<std::size_t>(i)] - M, es);
      U[static_cast<std::size_t>(i)] = problem.omega / (p * rho);
    }
  }

  SdpSolution sol;
  sol.problem = problem;
  sol.rho = rho;

  // Polish attempts are cheap (a few sparse factorizations) relative to the
  // thousands of first-order iterations they can save, so the gate is loose
  // and retries are rate-limited rather than threshold-limited.
  const double polish_gate = std::max(5e-2, 10.0 * tol);
  const int polish_retry = std::max(4 * options_.check_interval, 100);
  int last_polish_attempt = -polish_retry;
  double last_injected_norm = std::numeric_limits<double>::infinity();
  std::vector<Matrix> Y(static_cast<std::size_t>(p));
  int it = 0;

  const auto finalize_from_iterates = [&](bool converged) {
    sol.m_bar = 0.5 * (M + M.transpose());
    sol.value = problem.omega.cwiseProduct(sol.m_bar).sum();
    sol.iterations = it;
    sol.converged = converged;
    sol.rho = rho;
    sol.dual_factors.assign(static_cast<std::size_t>(p), Vector::Zero(p));
    sol.active.assign(static_cast<std::size_t>(p), false);
    sol.dual_rank_defect = 0.0;
    const double trace_omega = problem.omega.trace();
    for (int i = 0; i < p; ++i) {
      es.compute(Y[static_cast<std::size_t>(i)]);
      const double lam = std::max(es.eigenvalues()(p - 1), 0.0);
      const double second = p >= 2 ? std::abs(es.eigenvalues()(p - 2)) : 0.0;
      const double norm = Y[static_cast<std::size_t>(i)].norm();
      if (norm > 0.0) sol.dual_rank_defect = std::max(sol.dual_rank_defect, second / norm);
      Vector y = std::sqrt(lam) * es.eigenvectors().col(p - 1);
      normalize_sign(y);
      sol.dual_factors[static_cast<std::size_t>(i)] = std::move(y);
      sol.active[static_cast<std::size_t>(i)] = lam >= options_.inactive_atom_rel * trace_omega;
    }
  };

  const auto exact_primal_residual = [&]() {
    double worst = 0.0;
    for (int i = 0; i < p; ++i) {
      worst = std::max(worst, max_eigenvalue(M - C[static_cast<std::size_t>(i)], es));
    }
    return std::max(worst, 0.0) / (1.0 + M.norm());
  };

  while (it < options_.max_iterations) {
    ++it;
    // Closed-form update of the matrix variable.
    M = problem.omega / rho + Csum;
    for (int i = 0; i < p; ++i) {
      M -= S[static_cast<std::size_t>(i)] + U[static_cast<std::size_t>(i)];
    }
    M /= static_cast<double>(p);

    // Conic block projections with over-relaxation. The dual update
    // U = proj_psd(-V) keeps every multiplier exactly PSD.
    for (int i = 0; i < p; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const Matrix Mhat = alpha * M + (1.0 - alpha) * (C[ii] - S[ii]);
      const Matrix V = C[ii] - Mhat - U[ii];
      S[ii] = psd_part(V, es);
      U[ii] = S[ii] - V;
    }

    if (it % options_.check_interval != 0 && it != options_.max_iterations) continue;

    double rp_sq = 0.0;
    Matrix Ysum = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      rp_sq += (M + S[ii] - C[ii]).squaredNorm();
      Y[ii] = rho * U[ii];
      Ysum += Y[ii];
    }
    const double rp = std::sqrt(rp_sq) / (1.0 + M.norm());
    const double rd = (Ysum - problem.omega).norm() / (1.0 + omega_norm);
    const double pobj = problem.omega.cwiseProduct(M).sum();
    const double dobj = dual_objective_of(problem, Y);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double res = std::max({rp, rd, gap});

    static const bool trace = std::getenv("OEIBO_SOLVER_TRACE") != nullptr;
    if (trace) {
      std::fprintf(stderr, "it=%6d rho=%9.3g rp=%9.3g rd=%9.3g gap=%9.3g\n", it, rho, rp, rd, gap);
    }

    if (options_.polish && res <= polish_gate && it - last_polish_attempt >= polish_retry) {
      last_polish_attempt = it;
      PolishOutcome po = try_polish(problem, C, M, Y, tol);
      if (trace) {
        std::fprintf(stderr, "  polish attempt at it=%d: success=%d steps=%d res=(%g %g %g)\n", it,
                     int(po.success), po.steps, po.residuals.primal, po.residuals.dual,
                     po.residuals.gap);
      }
      if (po.success) {
        sol.m_bar = 0.5 * (po.m + po.m.transpose());
        sol.value = po.value;
        sol.residuals = po.residuals;
        sol.iterations = it;
        sol.polish_steps = po.steps;
        sol.polished = true;
        sol.converged = true;
        sol.rho = rho;
        sol.dual_factors = std::move(po.ys);
        sol.active.assign(static_cast<std::size_t>(p), false);
        const double trace_omega = problem.omega.trace();
        for (int i = 0; i < p; ++i) {
          sol.active[static_cast<std::size_t>(i)] =
              sol.dual_factors[static_cast<std::size_t>(i)].squaredNorm() >=
              options_.inactive_atom_rel * trace_omega;
        }
        return sol;
      }
      // A partial polish that clearly beat the current iterates still helps:
      // restart the first-order method from it.
      if (po.attempted && po.kkt_norm < 0.2 * po.start_kkt_norm &&
          po.kkt_norm < 0.25 * last_injected_norm) {
        last_injected_norm = po.kkt_norm;
        M = po.m;
        for (int i = 0; i < p; ++i) {
          const std::size_t ii = static_cast<std::size_t>(i);
          U[ii] = po.ys[ii] * po.ys[ii].transpose() / rho;
          S[ii] = psd_part(C[ii] - M, es);
        }
        if (trace) {
          std::fprintf(stderr, "  injected polished iterates (kkt %.3g -> %.3g)\n",
                       po.start_kkt_norm, po.kkt_norm);
        }
        continue;
      }
    }

    if (res <= tol) {
      const double exact_primal = exact_primal_residual();
      if (exact_primal <= tol) {
        finalize_from_iterates(true);
        sol.residuals.primal = exact_primal;
        sol.residuals.dual = rd;
        sol.residuals.gap = gap;
        return sol;
      }
    }

    // Residual balancing.
    if (rp > 10.0 * rd && rho < 1e8) {
      rho *= 2.0;
      for (auto& u : U) u *= 0.5;
    } else if (rd > 10.0 * rp && rho > 1e-8) {
      rho *= 0.5;
      for (auto& u : U) u *= 2.0;
    }
  }

  // Iteration limit: report iterates with honest residuals; caller decides.
  double rp_sq = 0.0;
  Matrix Ysum = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    rp_sq += (M + S[ii] - C[ii]).squaredNorm();
    Y[ii] = rho * U[ii];
    Ysum += Y[ii];
  }
  finalize_from_iterates(false);
  sol.residuals.primal = exact_primal_residual();
  sol.residuals.dual = (Ysum - problem.omega).norm() / (1.0 + omega_norm);
  const double dobj = dual_objective_of(problem, Y);
  sol.residuals.gap =
      std::abs(sol.value - dobj) / (1.0 + std::abs(sol.value) + std::abs(dobj));
  return sol;
}

SolutionDerivativeSystem::SolutionDerivativeSystem(const SdpSolution& solution) {
  if (!solution.converged) {
    throw std::runtime_error("derivative system requires a converged solution");
  }
  if (!solution.all_active()) {
    throw std::runtime_error(
        "derivative system has near-zero dual atoms; fall back to finite-difference hessian");
  }
  p_ = solution.problem.block_size();
  std::vector<Matrix> Sbar(static_cast<std::size_t>(p_));
  for (int i = 0; i < p_; ++i) {
    Sbar[static_cast<std::size_t>(i)] = solution.m_bar - solution.problem.constraint(i);
  }
  lu_.compute(assemble_kkt(Sbar, solution.dual_factors));
  if (lu_.info() != Eigen::Success) {
    throw std::runtime_error(
        "derivative system is singular; fall back to finite-difference hessian");
  }
}

SolutionDerivativeSystem::Derivative SolutionDerivativeSystem::directional_derivative_full(
    const Matrix& direction) const {
  if (direction.rows() != p_ || direction.cols() != p_) {
    throw std::invalid_argument("directional_derivative: dimension mismatch");
  }
  const Matrix D = 0.5 * (direction + direction.transpose());
  const int m = p_ * (p_ + 1) / 2;
  Vector rhs = Vector::Zero(p_ * p_ + m);
  for (int b = 0; b < p_; ++b) {
    for (int a = 0; a <= b; ++a) rhs(p_ * p_ + idx_u(a, b)) = D(a, b);
  }
  const Vector delta = lu_.solve(rhs);
  if (!delta.allFinite()) {
    throw std::runtime_error("derivative system solve failed");
  }
  Derivative out;
  unpack_solution(delta, p_, out.y_dot, out.m_dot);
  return out;
}

Matrix SolutionDerivativeSystem::directional_derivative(const Matrix& direction) const {
  return directional_derivative_full(direction).m_dot;
}

}  // namespace oeibo::sdp
