// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "oeibo/bo.hpp"

namespace oeibo::validation {

struct SuiteResult {
  std::string suite;
  int checks = 0;
  int failures = 0;
  std::vector<std::string> failure_reports;  // JSON, one per failing instance

  bool pass() const { return failures == 0 && checks > 0; }
};

/// Random (mu, Sigma, incumbent) instance with a well-conditioned moment
/// matrix; the shared generator behind the randomized suites.
struct MomentInstance {
  Vector mu;
  Matrix sigma;
  double incumbent = 0.0;

  Matrix omega() const;
  std::string to_json(const std::string& note) const;
};

MomentInstance random_moment_instance(int k, RandomStream& rng);

/// Random 1-d batch with a minimum pairwise separation (keeps derivative
/// checks away from the duplicate-row perturbation path).
Matrix separated_batch_1d(RandomStream& rng, int k, double lo, double hi, double min_dist);

/// KKT certificates on random problems: convergence at tol, feasibility,
/// duality gap, negative-definite upper-left block, rank-one duals,
/// nonpositive value, and the single-point lower bound.
SuiteResult duality_suite(int problems, std::uint64_t seed, double tol = 1e-7);

/// Acquisition gradient versus central finite differences on random small
/// batches over a 1-d squared-exponential model, plus Hessian spot checks.
SuiteResult gradient_suite(int gradient_batches, int hessian_batches, std::uint64_t seed,
                           double gradient_rel_tol = 1e-4, double hessian_rel_tol = 1e-3);

/// Lower-bound sandwich: acquisition value <= Monte-Carlo expected
/// improvement + 3 standard errors on random triples.
SuiteResult sandwich_suite(int triples, int mc_samples, std::uint64_t seed);

/// Worst-case distribution reconstruction: weights, first and second
/// moments, and expectation match.
SuiteResult distribution_suite(int problems, std::uint64_t seed);

}  // namespace oeibo::validation
