// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/bo.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <chrono>
#include <cmath>

namespace oeibo::bo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double population_variance(const Vector& y) {
  if (y.size() == 0) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().mean();
}

Matrix cholesky_with_jitter(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Matrix jittered = sigma;
  jittered.diagonal().array() += 1e-10 * std::max(1.0, sigma.trace());
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError("mc_expected_improvement: covariance factorization failed");
  }
  return llt.matrixL();
}

/// Acquisition objective over vec(X) for the batch program; owns a
/// warm-started evaluator so minimize() can run restarts concurrently.
class OeiObjective final : public opt::BoxObjective {
 public:
  OeiObjective(gp::GpModel model, int k, int n, oei::EvaluatorOptions options,
               std::atomic<long>* iteration_counter)
      : evaluator_(std::move(model), options), k_(k), n_(n), counter_(iteration_counter) {}

  double value(const Vector& x) override {
    const auto ev = evaluator_.evaluate(unvec(x), false, false);
    count(ev);
    return ev.value;
  }

  double value_and_gradient(const Vector& x, Vector& grad) override {
    const auto ev = evaluator_.evaluate(unvec(x), true, false);
    count(ev);
    grad = ev.gradient;
    return ev.value;
  }

  bool has_hessian() const override { return true; }

  void hessian(const Vector& x, Matrix& H) override {
    const auto ev = evaluator_.evaluate(unvec(x), true, true);
    count(ev);
    H = *ev.hessian;
  }

 private:
  Matrix unvec(const Vector& x) const {
    return Eigen::Map<const Matrix>(x.data(), k_, n_);
  }

  void count(const oei::AcquisitionEval& ev) {
    if (counter_ != nullptr) counter_->fetch_add(ev.solution.iterations);
  }

  oei::OeiEvaluator evaluator_;
  int k_;
  int n_;
  std::atomic<long>* counter_;
};

/// Single-point acquisition helpers shared by the greedy baselines.
struct SinglePointPosterior {
  double mu = 0.0;
  double var = 0.0;
  Vector dmu;
  Vector dvar;
};

SinglePointPosterior single_point(const gp::GpModel& model, const Vector& x, bool with_gradient) {
  SinglePointPosterior out;
  Matrix X(1, x.size());
  X.row(0) = x.transpose();
  const gp::PosteriorMoments post = gp::posterior(model, X);
  out.mu = post.mean(0);
  out.var = post.covariance(0, 0) + post.jitter;
  if (with_gradient) {
    const gp::PosteriorJacobian jac = gp::posterior_jacobian(model, X);
    out.dmu.resize(x.size());
    out.dvar.resize(x.size());
    for (Index c = 0; c < x.size(); ++c) {
      out.dmu(c) = jac.dmean[static_cast<std::size_t>(c)](0);
      out.dvar(c) = jac.dcovariance[static_cast<std::size_t>(c)](0, 0);
    }
  }
  return out;
}

opt::BoxDomain batch_box(const opt::BoxDomain& domain, int k) {
  opt::BoxDomain box;
  const Index n = domain.dimension();
  box.lower.resize(k * n);
  box.upper.resize(k * n);
  for (Index c = 0; c < n; ++c) {
    box.lower.segment(static_cast<Index>(c) * k, k).setConstant(domain.lower(c));
    box.upper.segment(static_cast<Index>(c) * k, k).setConstant(domain.upper(c));
  }
  return box;
}

}  // namespace

Acquisition acquisition_from_string(const std::string& name) {
  if (name == "oei") return Acquisition::OEI;
  if (name == "random") return Acquisition::Random;
  if (name == "cl-ei" || name == "constant-liar") return Acquisition::ConstantLiarEI;
  if (name == "blcb") return Acquisition::BatchLCB;
  throw std::invalid_argument("unknown acquisition: " + name);
}

std::string to_string(Acquisition a) {
  switch (a) {
    case Acquisition::OEI: return "oei";
    case Acquisition::Random: return "random";
    case Acquisition::ConstantLiarEI: return "cl-ei";
    case Acquisition::BatchLCB: return "blcb";
  }
  return "?";
}

double one_point_ei(double mu, double var, double incumbent) {
  if (!(var > 0.0)) throw std::invalid_argument("one_point_ei: var must be positive");
  const double sd = std::sqrt(var);
  if (sd < 1e-12) return std::min(mu - incumbent, 0.0);
  const double z = (incumbent - mu) / sd;
  return -((incumbent - mu) * norm_cdf(z) + sd * norm_pdf(z));
}

double oei_k1_closed_form(double mu, double var, double incumbent) {
  if (!(var > 0.0)) throw std::invalid_argument("oei_k1_closed_form: var must be positive");
  const double d = mu - incumbent;
  return 0.5 * (d - std::sqrt(d * d + var));
}

std::pair<double, double> mc_expected_improvement(const Vector& mu, const Matrix& sigma,
                                                  double incumbent, int samples,
                                                  std::uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("mc_expected_improvement: samples must be >= 1000");
  const Index k = mu.size();
  const Matrix L = cholesky_with_jitter(sigma);

  RandomStream rng(seed);
  const long pairs = (samples + 1) / 2;
  double mean = 0.0;
  double m2 = 0.0;
  Vector z(k), y(k);
  for (long s = 0; s < pairs; ++s) {
    for (Index i = 0; i < k; ++i) z(i) = rng.normal();
    const Vector shift = L * z;
    double value = 0.0;
    for (int sign = 0; sign < 2; ++sign) {
      y = sign == 0 ? (mu + shift).eval() : (mu - shift).eval();
      value += 0.5 * (std::min(y.minCoeff(), incumbent) - incumbent);
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (value - mean);
  }
  const double variance = pairs > 1 ? m2 / static_cast<double>(pairs - 1) : 0.0;
  return {mean, std::sqrt(variance / static_cast<double>(pairs))};
}

Matrix constant_liar_batch(const gp::GpModel& model, const opt::BoxDomain& domain, int k,
                           int restarts, std::uint64_t seed, int threads) {
  if (k < 1) throw std::invalid_argument("constant_liar_batch: k must be >= 1");
  const double lie = model.data.values().mean();

  gp::GpModel work = model;
  Matrix batch(k, domain.dimension());
  for (int j = 0; j < k; ++j) {
    const gp::GpModel& snapshot = work;
    const double incumbent = snapshot.data.incumbent();
    const auto objective = [&snapshot, incumbent](const Vector& x, Vector& grad) {
      const SinglePointPosterior sp = single_point(snapshot, x, true);
      const double sd = std::sqrt(sp.var);
      const double z = (incumbent - sp.mu) / sd;
      grad = norm_cdf(z) * sp.dmu - norm_pdf(z) * (sp.dvar / (2.0 * sd));
      return one_point_ei(sp.mu, sp.var, incumbent);
    };
    opt::MultistartConfig cfg;
    cfg.restarts = restarts;
    cfg.seed = split_seed(seed, static_cast<std::uint64_t>(j));
    cfg.mode = opt::Mode::QuasiNewton;
    cfg.threads = threads;
    const opt::MinimizeResult res = opt::minimize(opt::make_objective(objective), domain, cfg);
    batch.row(j) = res.x.transpose();
    work.data.append(res.x, lie);
  }
  return batch;
}

double blcb_beta(int dimension, int iteration, double delta) {
  const double t = std::max(1, iteration);
  return 2.0 * std::log(dimension * t * t * M_PI * M_PI / (6.0 * delta));
}

Matrix batch_lcb(const gp::GpModel& model, const opt::BoxDomain& domain, int k,
                 const std::function<double(int)>& beta_schedule, int restarts,
                 std::uint64_t seed, int threads) {
  if (k < 1) throw std::invalid_argument("batch_lcb: k must be >= 1");
  gp::GpModel work = model;
  Matrix batch(k, domain.dimension());
  for (int j = 0; j < k; ++j) {
    const double beta = std::max(0.0, beta_schedule(j));
    const double root_beta = std::sqrt(beta);
    const gp::GpModel& snapshot = work;
    const auto objective = [&snapshot, root_beta](const Vector& x, Vector& grad) {
      const SinglePointPosterior sp = single_point(snapshot, x, true);
      const double sd = std::sqrt(sp.var);
      grad = sp.dmu - root_beta * (sp.dvar / (2.0 * sd));
      return sp.mu - root_beta * sd;
    };
    opt::MultistartConfig cfg;
    cfg.restarts = restarts;
    cfg.seed = split_seed(seed, static_cast<std::uint64_t>(j));
    cfg.mode = opt::Mode::QuasiNewton;
    cfg.threads = threads;
    const opt::MinimizeResult res = opt::minimize(opt::make_objective(objective), domain, cfg);
    batch.row(j) = res.x.transpose();
    // Hallucinated observation at the posterior mean: shrinks the
    // covariance without moving the mean.
    const SinglePointPosterior sp = single_point(work, res.x, false);
    work.data.append(res.x, sp.mu);
  }
  return batch;
}

ExperimentRecord run(const BenchmarkFunction& objective, const BoConfig& config) {
  if (config.batch_size < 1 || config.iterations < 1 || config.initial_points < 1) {
    throw std::invalid_argument("run: batch_size, iterations and initial_points must be >= 1");
  }
  objective.domain.validate();
  const int n = objective.dimension;
  const int k = config.batch_size;

  ExperimentRecord record;
  record.config = config;
  record.objective_name = objective.name;

  // Internal coordinates: the objective domain is affinely rescaled to
  // [-0.5, 0.5]^n; observed values are kept in original units and rescaled
  // to unit variance before each fit.
  const Vector span = objective.domain.upper - objective.domain.lower;
  const auto to_original = [&](const Vector& xi) -> Vector {
    return objective.domain.lower + (xi.array() + 0.5).matrix().cwiseProduct(span);
  };
  opt::BoxDomain internal_box;
  internal_box.lower = Vector::Constant(n, -0.5);
  internal_box.upper = Vector::Constant(n, 0.5);

  Matrix X_internal(config.initial_points, n);
  Vector y(config.initial_points);
  RandomStream design_rng(split_seed(config.seed, 0x1d));
  try {
    for (int i = 0; i < config.initial_points; ++i) {
      for (int c = 0; c < n; ++c) X_internal(i, c) = design_rng.uniform(-0.5, 0.5);
      y(i) = objective.evaluator(to_original(X_internal.row(i).transpose()));
      if (!std::isfinite(y(i))) throw std::runtime_error("objective returned a non-finite value");
    }
  } catch (const std::exception& e) {
    record.completed = false;
    record.error = e.what();
    return record;
  }

  for (int t = 1; t <= config.iterations; ++t) {
    const auto t0 = Clock::now();
    std::atomic<long> solver_iterations{0};

    IterationRow row;
    row.iteration = t;
    try {
      // (a) value normalization (variance one) on the internal dataset.
      double sd_y = std::sqrt(population_variance(y));
      if (!(sd_y > 1e-12)) sd_y = 1.0;
      const Vector y_internal = y / sd_y;
      row.normalized_variance = population_variance(y_internal);
      gp::Dataset data_internal(X_internal, y_internal);

      // (b) hyperparameter fit by marginal-likelihood maximization.
      gp::FitOptions fit;
      fit.restarts = config.fit_restarts;
      fit.seed = split_seed(config.seed, 0x100 + static_cast<std::uint64_t>(t));
      const gp::Kernel kernel =
          gp::fit_kernel(data_internal, config.kernel, gp::MeanFunction::zero(), config.noise, fit);
      gp::GpModel model{data_internal, kernel, gp::MeanFunction::zero(), config.noise};

      // (c) batch selection.
      const std::uint64_t acq_seed = split_seed(config.seed, 0x200 + static_cast<std::uint64_t>(t));
      Matrix batch(k, n);
      switch (config.acquisition) {
        case Acquisition::Random: {
          RandomStream rng(acq_seed);
          for (int j = 0; j < k; ++j) {
            for (int c = 0; c < n; ++c) batch(j, c) = rng.uniform(-0.5, 0.5);
          }
          break;
        }
        case Acquisition::OEI: {
          oei::EvaluatorOptions eopts;
          eopts.sdp_tol = config.sdp_tol;
          eopts.domain_diameter = internal_box.diameter();
          const gp::GpModel model_copy = model;
          const opt::ObjectiveFactory factory = [model_copy, k, n, eopts, &solver_iterations]() {
            return std::make_unique<OeiObjective>(model_copy, k, n, eopts, &solver_iterations);
          };
          opt::MultistartConfig cfg;
          cfg.restarts = config.acq_restarts;
          cfg.max_iterations = config.acq_max_iterations;
          cfg.mode = opt::Mode::NewtonWithHessian;
          cfg.seed = acq_seed;
          cfg.threads = config.threads;
          const opt::MinimizeResult res = opt::minimize(factory, batch_box(internal_box, k), cfg);
          batch = Eigen::Map<const Matrix>(res.x.data(), k, n);
          break;
        }
        case Acquisition::ConstantLiarEI:
          batch = constant_liar_batch(model, internal_box, k, config.acq_restarts, acq_seed,
                                      config.threads);
          break;
        case Acquisition::BatchLCB: {
          const double beta = blcb_beta(n, t);
          batch = batch_lcb(
              model, internal_box, k, [beta](int) { return beta; }, config.acq_restarts, acq_seed,
              config.threads);
          break;
        }
      }

      // (d) evaluate the objective at the batch, in original units.
      for (int j = 0; j < k; ++j) {
        const double value = objective.evaluator(to_original(batch.row(j).transpose()));
        if (!std::isfinite(value)) throw std::runtime_error("objective returned a non-finite value");
        X_internal.conservativeResize(X_internal.rows() + 1, n);
        X_internal.row(X_internal.rows() - 1) = batch.row(j);
        y.conservativeResize(y.size() + 1);
        y(y.size() - 1) = value;
      }
    } catch (const std::exception& e) {
      record.completed = false;
      record.error = e.what();
      break;
    }

    row.evaluations = static_cast<int>(y.size());
    row.incumbent = y.minCoeff();
    if (objective.known_minimum.has_value()) {
      row.regret = row.incumbent - *objective.known_minimum;
    }
    row.wall_time_s = seconds_since(t0);
    row.solver_iterations = solver_iterations.load();
    record.rows.push_back(row);
  }

  Matrix X_original(X_internal.rows(), n);
  for (Index i = 0; i < X_internal.rows(); ++i) {
    X_original.row(i) = to_original(X_internal.row(i).transpose()).transpose();
  }
  record.data.set(X_original, y);
  return record;
}

BenchmarkFunction benchmark(const std::string& name) {
  BenchmarkFunction f;
  f.name = name;
  if (name == "six-hump-camel") {
    f.dimension = 2;
    f.domain.lower = Vector(2);
    f.domain.upper = Vector(2);
    f.domain.lower << -2.0, -1.0;
    f.domain.upper << 2.0, 1.0;
    f.evaluator = [](const Vector& v) {
      const double x = v(0), y = v(1);
      return (4.0 - 2.1 * x * x + x * x * x * x / 3.0) * x * x + x * y +
             (-4.0 + 4.0 * y * y) * y * y;
    };
    f.known_minimum = -1.031628453489877;
  } else if (name == "cosine-mixture") {
    // Standard two-dimensional cosine-mixture test function; global minimum
    // -0.2 at the origin.
    f.dimension = 2;
    f.domain.lower = Vector::Constant(2, -1.0);
    f.domain.upper = Vector::Constant(2, 1.0);
    f.evaluator = [](const Vector& v) {
      double quad = 0.0, cosines = 0.0;
      for (Index i = 0; i < v.size(); ++i) {
        quad += v(i) * v(i);
        cosines += std::cos(5.0 * M_PI * v(i));
      }
      return quad - 0.1 * cosines;
    };
    f.known_minimum = -0.2;
  } else if (name == "hartmann6") {
    f.dimension = 6;
    f.domain.lower = Vector::Constant(6, 0.0);
    f.domain.upper = Vector::Constant(6, 1.0);
    f.evaluator = [](const Vector& v) {
      static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
      static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
      static const double P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
      double sum = 0.0;
      for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < 6; ++j) {
          const double d = v(j) - P[i][j];
          inner += A[i][j] * d * d;
        }
        sum += alpha[i] * std::exp(-inner);
      }
      return -sum;
    };
    f.known_minimum = -3.32236801141551;
  } else if (name == "eggholder") {
    f.dimension = 2;
    f.domain.lower = Vector::Constant(2, -512.0);
    f.domain.upper = Vector::Constant(2, 512.0);
    f.evaluator = [](const Vector& v) {
      const double x = v(0), y = v(1);
      return -(y + 47.0) * std::sin(std::sqrt(std::abs(x / 2.0 + y + 47.0))) -
             x * std::sin(std::sqrt(std::abs(x - (y + 47.0))));
    };
    f.known_minimum = -959.6406627208506;
  } else if (name == "gp-draw") {
    return gp_draw_benchmark(0);
  } else {
    throw std::invalid_argument("unknown benchmark: " + name);
  }
  return f;
}

gp::GpModel demo_gp_model(std::uint64_t seed, int observations) {
  gp::GpModel model;
  model.kernel = gp::Kernel(gp::KernelFamily::SquaredExponential, 10.0, 0.1);
  model.mean = gp::MeanFunction::quadratic(Vector::Constant(1, 5.0));
  model.noise = 1e-6;

  if (observations <= 0) {
    model.data = gp::Dataset(Matrix(0, 1), Vector(0));
    return model;
  }

  RandomStream rng(split_seed(seed, 0xd6aa));
  Matrix X(observations, 1);
  for (int i = 0; i < observations; ++i) X(i, 0) = rng.uniform(-1.0, 1.0);

  Matrix K(observations, observations);
  Vector m(observations);
  for (int i = 0; i < observations; ++i) {
    m(i) = model.mean.value(X.row(i).transpose());
    for (int j = 0; j < observations; ++j) {
      K(i, j) = gp::kernel_eval(model.kernel, X.row(i), X.row(j)).value;
    }
  }
  K.diagonal().array() += model.noise + 1e-10 * model.kernel.variance;
  const Matrix L = Eigen::LLT<Matrix>(K).matrixL();
  Vector z(observations);
  for (int i = 0; i < observations; ++i) z(i) = rng.normal();
  model.data.set(X, m + L * z);
  return model;
}

BenchmarkFunction gp_draw_benchmark(std::uint64_t seed) {
  const int grid_size = 512;
  auto model = std::make_shared<gp::GpModel>(demo_gp_model(seed, 0));

  Matrix grid(grid_size, 1);
  for (int i = 0; i < grid_size; ++i) {
    grid(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / (grid_size - 1);
  }
  Matrix K(grid_size, grid_size);
  Vector m(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    m(i) = model->mean.value(grid.row(i).transpose());
    for (int j = 0; j < grid_size; ++j) {
      K(i, j) = gp::kernel_eval(model->kernel, grid.row(i), grid.row(j)).value;
    }
  }
  Matrix Kj = K;
  Kj.diagonal().array() += 1e-8 * model->kernel.variance;
  const Matrix L = Eigen::LLT<Matrix>(Kj).matrixL();
  RandomStream rng(split_seed(seed, 0x64726177));
  Vector z(grid_size);
  for (int i = 0; i < grid_size; ++i) z(i) = rng.normal();
  const Vector sample = m + L * z;

  // Conditioning on the grid realization turns the draw into an ordinary
  // deterministic objective.
  Matrix Kn = K;
  Kn.diagonal().array() += model->noise + 1e-8 * model->kernel.variance;
  const Eigen::LLT<Matrix> llt(Kn);
  auto alpha = std::make_shared<Vector>(llt.solve(sample - m));
  auto grid_copy = std::make_shared<Matrix>(grid);

  BenchmarkFunction f;
  f.name = "gp-draw";
  f.dimension = 1;
  f.domain.lower = Vector::Constant(1, -1.0);
  f.domain.upper = Vector::Constant(1, 1.0);
  f.evaluator = [model, alpha, grid_copy](const Vector& x) {
    double acc = model->mean.value(x);
    for (Index i = 0; i < grid_copy->rows(); ++i) {
      acc += gp::kernel_eval(model->kernel, x, grid_copy->row(i)).value * (*alpha)(i);
    }
    return acc;
  };

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8001; ++i) {
    Vector x = Vector::Constant(1, -1.0 + 2.0 * static_cast<double>(i) / 8000.0);
    best = std::min(best, f.evaluator(x));
  }
  f.known_minimum = best;  // numeric estimate on a dense scan
  return f;
}

std::pair<Vector, Vector> score_batches(const gp::GpModel& model, const std::vector<Matrix>& batches,
                                        int samples, std::uint64_t seed) {
  Vector scores(static_cast<Index>(batches.size()));
  Vector errors(static_cast<Index>(batches.size()));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const gp::PosteriorMoments post = gp::posterior(model, batches[b]);
    const auto [estimate, stderr_] = mc_expected_improvement(
        post.mean, post.effective_covariance(), model.data.incumbent(), samples, seed);
    scores(static_cast<Index>(b)) = estimate;
    errors(static_cast<Index>(b)) = stderr_;
  }
  return {scores, errors};
}

}  // namespace oeibo::bo
