// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/validation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <json.hpp>

#include <cmath>

namespace oeibo::validation {

namespace {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void record_failure(SuiteResult& result, const std::string& report) {
  ++result.failures;
  if (result.failure_reports.size() < 16) result.failure_reports.push_back(report);
}

/// Random 1-d squared-exponential model for derivative checks.
gp::GpModel random_se_model(RandomStream& rng, int points = 6) {
  gp::GpModel model;
  model.kernel = gp::Kernel(gp::KernelFamily::SquaredExponential, rng.uniform(0.5, 2.0),
                            rng.uniform(0.25, 0.8));
  model.mean = gp::MeanFunction::zero();
  model.noise = 1e-6;
  Matrix X(points, 1);
  Vector y(points);
  for (int i = 0; i < points; ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    y(i) = rng.normal();
  }
  model.data.set(X, y);
  return model;
}

}  // namespace

Matrix separated_batch_1d(RandomStream& rng, int k, double lo, double hi, double min_dist) {
  Matrix X(k, 1);
  for (int attempts = 0; attempts < 1000; ++attempts) {
    for (int i = 0; i < k; ++i) X(i, 0) = rng.uniform(lo, hi);
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      for (int j = i + 1; j < k; ++j) {
        if (std::abs(X(i, 0) - X(j, 0)) < min_dist) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return X;
  }
  return X;
}

Matrix MomentInstance::omega() const {
  const Index k = mu.size();
  Matrix om(k + 1, k + 1);
  om.topLeftCorner(k, k) = sigma + mu * mu.transpose();
  om.topRightCorner(k, 1) = mu;
  om.bottomLeftCorner(1, k) = mu.transpose();
  om(k, k) = 1.0;
  return om;
}

std::string MomentInstance::to_json(const std::string& note) const {
  json j;
  j["mu"] = vector_to_json(mu);
  j["sigma"] = matrix_to_json(sigma);
  j["incumbent"] = incumbent;
  j["note"] = note;
  return j.dump();
}

MomentInstance random_moment_instance(int k, RandomStream& rng) {
  MomentInstance inst;
  inst.incumbent = rng.uniform(-1.0, 1.0);
  inst.mu.resize(k);
  for (int i = 0; i < k; ++i) inst.mu(i) = inst.incumbent + rng.uniform(-2.0, 2.0);

  Matrix G(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) G(i, j) = rng.normal();
  }
  const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
  Vector eigs(k);
  for (int i = 0; i < k; ++i) eigs(i) = rng.uniform(0.3, 3.0);
  inst.sigma = Q * eigs.asDiagonal() * Q.transpose();
  inst.sigma = 0.5 * (inst.sigma + inst.sigma.transpose()).eval();
  return inst;
}

SuiteResult duality_suite(int problems, std::uint64_t seed, double tol) {
  SuiteResult result;
  result.suite = "duality";
  RandomStream rng(split_seed(seed, 0xd0a1));
  const int sizes[] = {2, 3, 5, 10};

  for (int p = 0; p < problems; ++p) {
    const int k = sizes[p % 4];
    const MomentInstance inst = random_moment_instance(k, rng);
    ++result.checks;
    sdp::SdpSolver solver;
    sdp::SdpSolution sol;
    try {
      sol = solver.solve(sdp::build_problem(inst.omega(), inst.incumbent), std::nullopt, tol);
    } catch (const std::exception& e) {
      record_failure(result, inst.to_json(std::string("solve threw: ") + e.what()));
      continue;
    }

    std::string why;
    if (!sol.converged) why = "not converged";
    if (why.empty() && sol.residuals.max_residual() > tol) why = "residuals above tol";
    if (why.empty()) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sol.m_bar.topLeftCorner(k, k),
                                               Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().maxCoeff() < 0.0)) why = "upper-left block not negative definite";
    }
    if (why.empty() && sol.dual_rank_defect > 1e-6) why = "dual multipliers not rank one";
    if (why.empty() && !(sol.value <= 2.0 * tol * (1.0 + std::abs(sol.value)))) {
      why = "positive value";
    }
    if (why.empty()) {
      double pointwise = 0.0;
      for (int i = 0; i < k; ++i) {
        pointwise += bo::oei_k1_closed_form(inst.mu(i), inst.sigma(i, i), inst.incumbent);
      }
      if (!(sol.value >= pointwise - 1e-6 * (1.0 + std::abs(pointwise)))) {
        why = "value below the sum of single-point bounds";
      }
    }
    if (!why.empty()) record_failure(result, inst.to_json(why));
  }
  return result;
}

SuiteResult gradient_suite(int gradient_batches, int hessian_batches, std::uint64_t seed,
                           double gradient_rel_tol, double hessian_rel_tol) {
  SuiteResult result;
  result.suite = "gradients";
  RandomStream rng(split_seed(seed, 0x6772));

  oei::EvaluatorOptions opts;
  opts.sdp_tol = 1e-9;
  opts.domain_diameter = 2.0;

  for (int b = 0; b < gradient_batches; ++b) {
    const gp::GpModel model = random_se_model(rng);
    const int k = (b % 2 == 0) ? 2 : 3;
    const Matrix X = separated_batch_1d(rng, k, -1.0, 1.0, 0.05);
    ++result.checks;
    try {
      oei::OeiEvaluator evaluator(model, opts);
      const Vector grad = evaluator.evaluate(X, true, false).gradient;

      Vector fd(k);
      for (int i = 0; i < k; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(X(i, 0)));
        Matrix Xp = X, Xm = X;
        Xp(i, 0) += h;
        Xm(i, 0) -= h;
        oei::OeiEvaluator side(model, opts);
        const double fp = side.evaluate(Xp, false, false).value;
        const double fm = side.evaluate(Xm, false, false).value;
        fd(i) = (fp - fm) / (2.0 * h);
      }
      const double rel = (grad - fd).norm() / std::max(fd.norm(), 1e-6);
      if (!(rel <= gradient_rel_tol)) {
        record_failure(result, "{\"check\":\"gradient\",\"batch\":" + std::to_string(b) +
                                   ",\"rel_error\":" + std::to_string(rel) + "}");
      }
    } catch (const std::exception& e) {
      record_failure(result, std::string("{\"check\":\"gradient\",\"error\":\"") + e.what() + "\"}");
    }
  }

  for (int b = 0; b < hessian_batches; ++b) {
    const gp::GpModel model = random_se_model(rng);
    const Matrix X = separated_batch_1d(rng, 2, -1.0, 1.0, 0.05);
    ++result.checks;
    try {
      oei::OeiEvaluator evaluator(model, opts);
      const auto ev = evaluator.evaluate(X, true, true);
      const Matrix& H = *ev.hessian;

      Matrix Hfd(2, 2);
      for (int i = 0; i < 2; ++i) {
        const double h = 1e-4 * (1.0 + std::abs(X(i, 0)));
        Matrix Xp = X, Xm = X;
        Xp(i, 0) += h;
        Xm(i, 0) -= h;
        oei::OeiEvaluator side(model, opts);
        const Vector gp_ = side.evaluate(Xp, true, false).gradient;
        const Vector gm = side.evaluate(Xm, true, false).gradient;
        Hfd.col(i) = (gp_ - gm) / (2.0 * h);
      }
      Hfd = 0.5 * (Hfd + Hfd.transpose()).eval();
      const double rel = (H - Hfd).norm() / std::max(Hfd.norm(), 1e-6);
      if (!(rel <= hessian_rel_tol)) {
        record_failure(result, "{\"check\":\"hessian\",\"batch\":" + std::to_string(b) +
                                   ",\"rel_error\":" + std::to_string(rel) + "}");
      }
    } catch (const std::exception& e) {
      record_failure(result, std::string("{\"check\":\"hessian\",\"error\":\"") + e.what() + "\"}");
    }
  }
  return result;
}

SuiteResult sandwich_suite(int triples, int mc_samples, std::uint64_t seed) {
  SuiteResult result;
  result.suite = "sandwich";
  RandomStream rng(split_seed(seed, 0x5a5d));
  const int sizes[] = {1, 2, 3, 5};

  for (int t = 0; t < triples; ++t) {
    const int k = sizes[t % 4];
    const MomentInstance inst = random_moment_instance(k, rng);
    ++result.checks;
    try {
      sdp::SdpSolver solver;
      const sdp::SdpSolution sol =
          solver.solve(sdp::build_problem(inst.omega(), inst.incumbent));
      const auto [mc, se] = bo::mc_expected_improvement(inst.mu, inst.sigma, inst.incumbent,
                                                        mc_samples, split_seed(seed, 7000 + t));
      if (!(sol.value <= mc + 3.0 * se)) {
        record_failure(result, inst.to_json("lower bound violated: value=" +
                                            std::to_string(sol.value) + " mc=" + std::to_string(mc) +
                                            " se=" + std::to_string(se)));
      }
    } catch (const std::exception& e) {
      record_failure(result, inst.to_json(std::string("threw: ") + e.what()));
    }
  }
  return result;
}

SuiteResult distribution_suite(int problems, std::uint64_t seed) {
  SuiteResult result;
  result.suite = "distribution";
  RandomStream rng(split_seed(seed, 0xd157));
  const int sizes[] = {1, 2, 3, 5};

  for (int p = 0; p < problems; ++p) {
    const int k = sizes[p % 4];
    const MomentInstance inst = random_moment_instance(k, rng);
    ++result.checks;
    try {
      sdp::SdpSolver solver;
      const Matrix omega = inst.omega();
      const sdp::SdpSolution sol = solver.solve(sdp::build_problem(omega, inst.incumbent));
      const oei::WorstCaseDistribution dist = oei::worst_case_distribution(sol);

      std::string why;
      const double scale = omega.norm();
      if (!dist.complete) why = "incomplete distribution";
      if (why.empty() && std::abs(dist.weights.sum() - 1.0) > 1e-6) why = "weights do not sum to 1";
      if (why.empty() && dist.weights.minCoeff() < -1e-12) why = "negative weight";
      if (why.empty()) {
        Vector mean = Vector::Zero(k);
        Matrix second = Matrix::Zero(k, k);
        double expected_g = 0.0;
        for (Index a = 0; a < dist.weights.size(); ++a) {
          const Vector atom = dist.atoms.row(a).transpose();
          mean += dist.weights(a) * atom;
          second += dist.weights(a) * atom * atom.transpose();
          expected_g += dist.weights(a) *
                        (std::min(atom.minCoeff(), inst.incumbent) - inst.incumbent);
        }
        if ((mean - inst.mu).norm() > 1e-5 * scale) why = "mean reconstruction failed";
        if (why.empty() &&
            (second - omega.topLeftCorner(k, k)).norm() > 1e-5 * scale) {
          why = "second-moment reconstruction failed";
        }
        if (why.empty() && std::abs(expected_g - sol.value) > 1e-5 * (1.0 + std::abs(sol.value))) {
          why = "expectation does not match the program value";
        }
      }
      if (!why.empty()) record_failure(result, inst.to_json(why));
    } catch (const std::exception& e) {
      record_failure(result, inst.to_json(std::string("threw: ") + e.what()));
    }
  }
  return result;
}

}  // namespace oeibo::validation
