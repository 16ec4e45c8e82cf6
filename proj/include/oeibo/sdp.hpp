// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <optional>
#include <vector>

#include "oeibo/gp.hpp"

namespace oeibo::sdp {

/// The structured program
///   sup <Omega, M>  s.t.  M - C_i <= 0 (PSD order),  i = 0..k
/// with C_0 = 0 and C_i carrying e_i/2 in the last row/column border and
/// -incumbent in the corner. Its value is the optimistic (worst-case over
/// all distributions matching the posterior's first two moments) expected
/// improvement of the batch.
struct SdpProblem {
  Matrix omega;
  double incumbent = 0.0;
  int k = 0;

  Matrix constraint(int i) const;
  int block_size() const { return k + 1; }
};

/// Builds the problem after verifying Omega is safely positive definite.
/// Throws DegeneratePosteriorError when the minimum eigenvalue falls below
/// 1e-9 * trace(Omega); callers should perturb duplicate batch points.
SdpProblem build_problem(const Matrix& omega, double incumbent);
SdpProblem build_problem(const gp::MomentMatrix& omega, double incumbent);

struct SdpResiduals {
  double primal = std::numeric_limits<double>::infinity();
  double dual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();

  double max_residual() const { return std::max(primal, std::max(dual, gap)); }
};

/// Converged primal/dual pair. Dual multipliers are rank one at optimality;
/// they are stored through their factors so that Y_i = y_i y_i^T.
struct SdpSolution {
  SdpProblem problem;
  Matrix m_bar;
  double value = 0.0;
  std::vector<Vector> dual_factors;  // k+1 vectors of length k+1
  std::vector<bool> active;          // atom i carries non-negligible weight
  /// Largest second eigenvalue of any raw dual multiplier relative to its
  /// norm; zero when the rank-one polish produced the factors directly.
  double dual_rank_defect = 0.0;
  SdpResiduals residuals;
  int iterations = 0;
  int polish_steps = 0;
  bool converged = false;
  bool polished = false;
  double rho = 1.0;

  Matrix dual_matrix(int i) const {
    return dual_factors[static_cast<std::size_t>(i)] *
           dual_factors[static_cast<std::size_t>(i)].transpose();
  }

  double dual_objective() const;
  bool all_active() const;
};

/// Solver iterates retained between related solves.
struct WarmStart {
  Matrix m;
  std::vector<Matrix> slacks;
  std::vector<Matrix> duals;
  double rho = 0.0;

  int block_size() const { return static_cast<int>(m.rows()); }
};

WarmStart warm_start_from(const SdpSolution& solution);

/// Extrapolates the previous solution along the solution derivative for the
/// cost perturbation `delta_omega`; falls back to the plain warm start when
/// the derivative system is unavailable or ill-conditioned.
WarmStart first_order_warm_start(const SdpSolution& prev, const Matrix& delta_omega);

struct SolverOptions {
  double tol = 1e-7;
  int max_iterations = 50000;
  double over_relaxation = 1.6;
  int check_interval = 25;
  bool polish = true;
  /// Atoms with ||y_i||^2 below this fraction of trace(Omega) are flagged
  /// inactive; rank-one polish is skipped when any atom is inactive.
  double inactive_atom_rel = 1e-10;
};

/// Operator-splitting solver specialized to this problem family: the single
/// matrix variable is updated in closed form and each of the k+1 conic
/// blocks is projected by symmetric eigendecomposition. Once iterates are
/// close, a Newton polish on the rank-one KKT system sharpens all three
/// certificates (feasibility, dual feasibility, duality gap) to near
/// machine precision.
///
/// A solver instance carries warm-start scratch; use one instance per
/// thread. Returned problems/solutions are immutable value types.
class SdpSolver {
 public:
  explicit SdpSolver(SolverOptions options = {}) : options_(options) {}

  SdpSolution solve(const SdpProblem& problem, const std::optional<WarmStart>& warm = std::nullopt,
                    std::optional<double> tol = std::nullopt);

  const SolverOptions& options() const { return options_; }

 private:
  SolverOptions options_;
};

/// Sparse linear system giving directional derivatives of the optimizer
/// M(Omega) (and of the dual factors) along cost perturbations. The matrix
/// couples the slack blocks S_i = M - C_i with the rank-one factors y_i and
/// has O(k^3) stored nonzeros; it is factored once per solution and reused
/// across directions.
///
/// Half-vectorization contract: vec_u stacks the upper triangle by columns,
/// entry (a, b) with a <= b at position b(b+1)/2 + a; the expansion back to
/// a full symmetric matrix writes each off-diagonal entry to both (a, b)
/// and (b, a), making the pair of operators an exact one-sided inverse.
class SolutionDerivativeSystem {
 public:
  /// Throws std::runtime_error when any dual atom is inactive or the
  /// factorization fails (callers fall back to finite differences).
  explicit SolutionDerivativeSystem(const SdpSolution& solution);

  struct Derivative {
    Matrix m_dot;
    std::vector<Vector> y_dot;
  };

  /// Directional derivative of the optimizer along a symmetric direction.
  Matrix directional_derivative(const Matrix& direction) const;
  Derivative directional_derivative_full(const Matrix& direction) const;

  int block_size() const { return p_; }

 private:
  int p_ = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace oeibo::sdp
