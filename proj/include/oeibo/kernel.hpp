// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oeibo/common.hpp"

namespace oeibo::gp {

enum class KernelFamily { SquaredExponential, Matern32 };

/// Stationary isotropic covariance function kappa(x, x') with output scale
/// `variance` and a single `lengthscale` shared across input dimensions.
struct Kernel {
  KernelFamily family = KernelFamily::SquaredExponential;
  double variance = 1.0;
  double lengthscale = 1.0;

  Kernel() = default;
  Kernel(KernelFamily f, double var, double ls) : family(f), variance(var), lengthscale(ls) {
    if (!(variance > 0.0) || !(lengthscale > 0.0)) {
      throw std::invalid_argument("kernel variance and lengthscale must be positive");
    }
  }
};

/// Kernel value together with derivatives with respect to the first argument.
/// `grad` is filled for order >= 1 and `hess` for order == 2.
struct KernelEval {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

/// Evaluates kappa(x, x2) and, when requested, d kappa / dx and
/// d^2 kappa / dx dx^T. Derivatives with respect to the second argument
/// follow from stationarity: d/dx2 kappa = -grad, and the (x, x2) mixed
/// block is -hess.
///
/// Throws NotDifferentiableError when order == 2 is requested for Matern32
/// at coincident points, where that kernel is only C^1.
KernelEval kernel_eval(const Kernel& kernel, const Vector& x, const Vector& x2, int order = 0);

/// Derivative of kappa at distance r with respect to log(lengthscale); used
/// by the marginal-likelihood gradient.
double kernel_dlog_lengthscale(const Kernel& kernel, double r);

}  // namespace oeibo::gp
