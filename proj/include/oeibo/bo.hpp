// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <utility>

#include "oeibo/oei.hpp"
#include "oeibo/optimize.hpp"

namespace oeibo::bo {

enum class Acquisition { OEI, Random, ConstantLiarEI, BatchLCB };

Acquisition acquisition_from_string(const std::string& name);
std::string to_string(Acquisition a);

struct BoConfig {
  int batch_size = 5;
  int iterations = 10;
  int initial_points = 10;
  Acquisition acquisition = Acquisition::OEI;
  gp::KernelFamily kernel = gp::KernelFamily::Matern32;
  std::uint64_t seed = 0;
  double noise = 1e-6;
  int acq_restarts = 20;
  int acq_max_iterations = 100;
  int fit_restarts = 20;
  double sdp_tol = 1e-7;
  int threads = 1;
  // Normalization is fixed on: inputs are rescaled to [-0.5, 0.5]^n and the
  // observed values to unit variance before every model fit.
};

struct BenchmarkFunction {
  std::string name;
  int dimension = 0;
  opt::BoxDomain domain;
  std::function<double(const Vector&)> evaluator;
  std::optional<double> known_minimum;
};

struct IterationRow {
  int iteration = 0;
  int evaluations = 0;
  double incumbent = 0.0;  // original units
  std::optional<double> regret;
  double wall_time_s = 0.0;
  long solver_iterations = 0;
  double normalized_variance = 1.0;  // variance of the internal values
};

struct ExperimentRecord {
  std::vector<IterationRow> rows;
  BoConfig config;
  std::string objective_name;
  bool completed = true;
  std::string error;
  gp::Dataset data;  // evaluated points in original units
};

/// One full optimization run: initial uniform design, then per iteration
/// fit hyperparameters on the normalized dataset, minimize the configured
/// acquisition over the batch, and evaluate the objective at the batch.
ExperimentRecord run(const BenchmarkFunction& objective, const BoConfig& config);

/// Unbiased Monte-Carlo estimate of E[min(y_1..y_k, incumbent)] - incumbent
/// under N(mu, sigma), with antithetic pairs. Returns (estimate, stderr).
std::pair<double, double> mc_expected_improvement(const Vector& mu, const Matrix& sigma,
                                                  double incumbent, int samples,
                                                  std::uint64_t seed);

/// Closed-form single-point expected improvement in the same orientation as
/// the batch acquisition (values are <= 0; lower is better).
double one_point_ei(double mu, double var, double incumbent);

/// Closed form of the batch acquisition at k = 1:
/// ((mu - incumbent) - sqrt((mu - incumbent)^2 + var)) / 2.
double oei_k1_closed_form(double mu, double var, double incumbent);

/// Greedy constant-liar batch: each point maximizes single-point expected
/// improvement against a model augmented with the lie value (the mean of
/// the observed values) at previously chosen points.
Matrix constant_liar_batch(const gp::GpModel& model, const opt::BoxDomain& domain, int k,
                           int restarts, std::uint64_t seed, int threads = 1);

/// Greedy batch lower-confidence-bound: sequential argmin of
/// mu(x) - sqrt(beta) * sd(x), updating only the posterior covariance
/// (hallucinated observations at the posterior mean) between picks.
Matrix batch_lcb(const gp::GpModel& model, const opt::BoxDomain& domain, int k,
                 const std::function<double(int)>& beta_schedule, int restarts,
                 std::uint64_t seed, int threads = 1);

/// Default confidence schedule beta_t = 2 log(d t^2 pi^2 / (6 delta)).
double blcb_beta(int dimension, int iteration, double delta = 0.1);

/// Standard benchmark objectives: cosine-mixture, six-hump-camel,
/// hartmann6, eggholder, gp-draw.
BenchmarkFunction benchmark(const std::string& name);

/// A deterministic draw from the 1-d demo process (squared-exponential
/// kernel, variance 10, lengthscale 0.1, mean (5x)^2) realized on a dense
/// grid over [-1, 1] and interpolated by GP regression.
BenchmarkFunction gp_draw_benchmark(std::uint64_t seed);

/// The same generative process conditioned on `observations` uniform draws;
/// used by demos and line-scan validation.
gp::GpModel demo_gp_model(std::uint64_t seed, int observations = 10);

/// Scores candidate batches under a fixed model posterior by Monte-Carlo
/// expected improvement (common random numbers across batches).
/// Returns (scores, standard errors).
std::pair<Vector, Vector> score_batches(const gp::GpModel& model, const std::vector<Matrix>& batches,
                                        int samples, std::uint64_t seed);

}  // namespace oeibo::bo
