// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oeibo/sdp.hpp"

namespace oeibo::oei {

using DerivativeSystem = sdp::SolutionDerivativeSystem;

/// Acquisition value (always <= 0), exact gradient over vec(X), optional
/// Hessian, and the SDP solution kept for warm starting.
struct AcquisitionEval {
  double value = 0.0;
  Vector gradient;
  std::optional<Matrix> hessian;
  /// Relative asymmetry of the assembled Hessian before symmetrization.
  double hessian_asymmetry = 0.0;
  bool hessian_by_finite_differences = false;
  sdp::SdpSolution solution;
  /// Batch actually evaluated; differs from the input when near-duplicate
  /// rows had to be perturbed.
  Matrix batch;
  bool perturbed = false;
};

struct EvaluatorOptions {
  double sdp_tol = 1e-7;
  sdp::SolverOptions solver;
  /// Domain diameter in input units; scales the duplicate-row thresholds.
  double domain_diameter = 1.0;
  double duplicate_distance_rel = 1e-6;
  double duplicate_jitter_rel = 1e-5;
  bool warm_start = true;
};

/// Evaluates the acquisition for a fixed model. Carries warm-start state;
/// use one evaluator per thread.
class OeiEvaluator {
 public:
  explicit OeiEvaluator(gp::GpModel model, EvaluatorOptions options = {});

  AcquisitionEval evaluate(const Matrix& X, bool want_gradient, bool want_hessian);

  /// Value (and gradient) under hyperparameter marginalization: moment
  /// matrices from each kernel sample are averaged and a single program is
  /// solved on the average.
  AcquisitionEval evaluate_marginalized(const Matrix& X, const std::vector<gp::Kernel>& samples,
                                        bool want_gradient);

  void reset_warm_start() { warm_.reset(); }

  const gp::GpModel& model() const { return model_; }
  gp::GpModel& model() { return model_; }
  const EvaluatorOptions& options() const { return options_; }
  int perturbation_count() const { return perturbation_count_; }

 private:
  AcquisitionEval evaluate_omega(const Matrix& X, const gp::MomentMatrix& omega,
                                 const std::vector<Matrix>* jacobian, bool want_hessian);

  gp::GpModel model_;
  EvaluatorOptions options_;
  sdp::SdpSolver solver_;
  std::optional<sdp::WarmStart> warm_;
  int perturbation_count_ = 0;
};

/// Directional derivative of the optimizer along `direction`; prefer a
/// DerivativeSystem instance when many directions share one solution.
Matrix solution_derivative(const sdp::SdpSolution& solution, const Matrix& direction);

/// The minimizing distribution behind a solved program: discrete with at
/// most k+1 outcomes, reconstructed from the dual factors y_i = (z_i; w_i)
/// as atoms z_i / w_i with weights w_i^2.
struct WorstCaseDistribution {
  Matrix atoms;    // one row per atom, k columns
  Vector weights;  // nonnegative, sum to 1
  bool complete = true;
};

WorstCaseDistribution worst_case_distribution(const sdp::SdpSolution& solution);

/// Perturbs near-duplicate batch rows in place (uniform noise seeded from
/// the batch contents, so repeated calls stay deterministic). Returns true
/// when anything moved.
bool perturb_duplicate_rows(Matrix& X, double diameter, double distance_rel, double jitter_rel);

}  // namespace oeibo::oei
