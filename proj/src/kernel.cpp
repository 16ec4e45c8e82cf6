// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/kernel.hpp"

#include <cmath>

namespace oeibo::gp {

KernelEval kernel_eval(const Kernel& kernel, const Vector& x, const Vector& x2, int order) {
  if (x.size() != x2.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
  if (order < 0 || order > 2) throw std::invalid_argument("kernel_eval: order must be 0, 1 or 2");

  const Index n = x.size();
  const Vector d = x - x2;
  const double r2 = d.squaredNorm();
  const double s2 = kernel.variance;
  const double ell = kernel.lengthscale;

  KernelEval out;
  switch (kernel.family) {
    case KernelFamily::SquaredExponential: {
      const double e = std::exp(-0.5 * r2 / (ell * ell));
      out.value = s2 * e;
      if (order >= 1) out.grad = (-s2 * e / (ell * ell)) * d;
      if (order == 2) {
        out.hess = (s2 * e / (ell * ell)) * (d * d.transpose() / (ell * ell) - Matrix::Identity(n, n));
      }
      break;
    }
    case KernelFamily::Matern32: {
      const double a = std::sqrt(3.0) / ell;
      const double r = std::sqrt(r2);
      const double e = std::exp(-a * r);
      out.value = s2 * (1.0 + a * r) * e;
      if (order >= 1) out.grad = (-s2 * a * a * e) * d;
      if (order == 2) {
        if (r == 0.0) {
          throw NotDifferentiableError("kernel not twice differentiable here (Matern32 at coincident points)");
        }
        out.hess = (-s2 * a * a * e) * (Matrix::Identity(n, n) - (a / r) * (d * d.transpose()));
      }
      break;
    }
  }
  return out;
}

double kernel_dlog_lengthscale(const Kernel& kernel, double r) {
  const double s2 = kernel.variance;
  const double ell = kernel.lengthscale;
  switch (kernel.family) {
    case KernelFamily::SquaredExponential: {
      const double e = std::exp(-0.5 * r * r / (ell * ell));
      return s2 * e * (r * r) / (ell * ell);
    }
    case KernelFamily::Matern32: {
      const double a = std::sqrt(3.0) / ell;
      return s2 * a * a * r * r * std::exp(-a * r);
    }
  }
  return 0.0;
}

}  // namespace oeibo::gp
