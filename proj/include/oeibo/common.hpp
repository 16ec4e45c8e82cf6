// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace oeibo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

/// Raised when a kernel matrix cannot be factorized even after jitter escalation.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a posterior covariance is too close to singular for the SDP
/// machinery; callers should perturb duplicate batch points and retry.
class DegeneratePosteriorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a requested derivative does not exist (e.g. second kernel
/// derivatives at coincident points for kernels that are only C^1 there).
class NotDifferentiableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 step; used to derive independent substream seeds.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream. Uniform and normal variates are generated
/// from raw engine output so that sequences are identical across platforms
/// (std::*_distribution is implementation-defined).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // Box-Muller; u1 bounded away from 0.
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Standard normal density.
inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// Standard normal cumulative distribution.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oeibo
