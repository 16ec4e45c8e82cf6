// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "oeibo/common.hpp"

namespace oeibo::opt {

/// Axis-aligned box constraint set.
struct BoxDomain {
  Vector lower;
  Vector upper;

  Index dimension() const { return lower.size(); }

  Vector project(const Vector& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  double diameter() const { return (upper - lower).norm(); }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0 || !((lower.array() < upper.array()).all())) {
      throw std::invalid_argument("box domain requires lower < upper elementwise");
    }
  }
};

enum class Mode { QuasiNewton, NewtonWithHessian };

struct MultistartConfig {
  int restarts = 20;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  Mode mode = Mode::QuasiNewton;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Objective with gradient and optional Hessian. Implementations may carry
/// mutable state (e.g. warm-started solvers); minimize() constructs one
/// instance per restart so instances are never shared across workers.
class BoxObjective {
 public:
  virtual ~BoxObjective() = default;

  virtual double value_and_gradient(const Vector& x, Vector& grad) = 0;

  /// Value-only evaluation for line searches; defaults to the full call.
  virtual double value(const Vector& x) {
    Vector g;
    return value_and_gradient(x, g);
  }

  virtual bool has_hessian() const { return false; }
  virtual void hessian(const Vector& /*x*/, Matrix& /*H*/) {
    throw std::logic_error("objective provides no hessian");
  }
};

using ObjectiveFactory = std::function<std::unique_ptr<BoxObjective>()>;

/// Wraps plain callables as an ObjectiveFactory.
ObjectiveFactory make_objective(std::function<double(const Vector&, Vector&)> value_and_gradient);
ObjectiveFactory make_objective(std::function<double(const Vector&, Vector&)> value_and_gradient,
                                std::function<void(const Vector&, Matrix&)> hessian);

struct RestartDiagnostics {
  int index = 0;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string error;
  std::vector<double> trace;  // accepted objective values, non-increasing
};

struct MinimizeResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int best_restart = -1;
  bool converged = false;
  int iterations = 0;
  std::vector<RestartDiagnostics> restarts;
};

/// Uniform deterministic starting points, one per row.
Matrix random_starts(const BoxDomain& domain, int count, std::uint64_t seed);

/// Multistart box-constrained local minimization. Starting points are drawn
/// by random_starts(domain, config.restarts, config.seed); the best restart
/// wins with ties broken toward the lower restart index.
MinimizeResult minimize(const ObjectiveFactory& factory, const BoxDomain& domain,
                        const MultistartConfig& config);

/// Same, but from caller-supplied starting points (one per row).
MinimizeResult minimize(const ObjectiveFactory& factory, const BoxDomain& domain,
                        const MultistartConfig& config, const Matrix& starts);

}  // namespace oeibo::opt
