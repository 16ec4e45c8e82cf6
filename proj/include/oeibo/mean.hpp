// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oeibo/common.hpp"

namespace oeibo::gp {

enum class MeanFamily { Zero, Quadratic };

/// Prior mean function. Zero returns 0 everywhere; Quadratic is
/// m(x) = (c . x)^2 with `coefficients` = c.
struct MeanFunction {
  MeanFamily family = MeanFamily::Zero;
  Vector coefficients;

  static MeanFunction zero() { return MeanFunction{}; }

  static MeanFunction quadratic(Vector c) {
    MeanFunction m;
    m.family = MeanFamily::Quadratic;
    m.coefficients = std::move(c);
    return m;
  }

  double value(const Vector& x) const {
    if (family == MeanFamily::Zero) return 0.0;
    const double t = coefficients.dot(x);
    return t * t;
  }

  Vector gradient(const Vector& x) const {
    if (family == MeanFamily::Zero) return Vector::Zero(x.size());
    return 2.0 * coefficients.dot(x) * coefficients;
  }
};

}  // namespace oeibo::gp
