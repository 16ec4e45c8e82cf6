// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/optimize.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <deque>

#include "oeibo/parallel.hpp"

namespace oeibo::opt {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;
constexpr int kLbfgsMemory = 10;

class CallableObjective final : public BoxObjective {
 public:
  CallableObjective(std::function<double(const Vector&, Vector&)> vg,
                    std::function<void(const Vector&, Matrix&)> h)
      : vg_(std::move(vg)), h_(std::move(h)) {}

  double value_and_gradient(const Vector& x, Vector& grad) override { return vg_(x, grad); }
  bool has_hessian() const override { return static_cast<bool>(h_); }
  void hessian(const Vector& x, Matrix& H) override {
    if (!h_) throw std::logic_error("objective provides no hessian");
    h_(x, H);
  }

 private:
  std::function<double(const Vector&, Vector&)> vg_;
  std::function<void(const Vector&, Matrix&)> h_;
};

struct LbfgsMemory {
  std::deque<Vector> s, y;
  std::deque<double> rho;

  void push(const Vector& si, const Vector& yi) {
    const double sy = si.dot(yi);
    if (sy <= 1e-12 * si.norm() * yi.norm()) return;
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    if (static_cast<int>(s.size()) > kLbfgsMemory) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  Vector direction(const Vector& g) const {
    Vector q = -g;
    if (s.empty()) return q;
    const int m = static_cast<int>(s.size());
    std::vector<double> a(m);
    for (int i = m - 1; i >= 0; --i) {
      a[i] = rho[i] * s[i].dot(q);
      q -= a[i] * y[i];
    }
    const double gamma = s.back().dot(y.back()) / y.back().squaredNorm();
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double b = rho[i] * y[i].dot(q);
      q += (a[i] - b) * s[i];
    }
    return q;
  }
};

/// Newton direction with diagonal modification until positive definite.
Vector modified_newton_direction(Matrix H, const Vector& g) {
  double tau = 0.0;
  const double scale = std::max(1e-12, H.cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 60; ++attempt) {
    Matrix Hm = H;
    Hm.diagonal().array() += tau;
    Eigen::LLT<Matrix> llt(Hm);
    if (llt.info() == Eigen::Success) {
      Vector d = llt.solve(-g);
      if (d.allFinite()) return d;
    }
    tau = (tau == 0.0) ? 1e-6 * scale : tau * 10.0;
  }
  return -g;
}

RestartDiagnostics run_restart(BoxObjective& obj, const BoxDomain& box,
                               const MultistartConfig& cfg, const Vector& start, int index,
                               Vector& minimizer) {
  RestartDiagnostics diag;
  diag.index = index;

  Vector x = box.project(start);
  Vector g(x.size());
  double f = obj.value_and_gradient(x, g);
  diag.trace.push_back(f);

  LbfgsMemory mem;
  Matrix H;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Vector pg = x - box.project(x - g);
    if (pg.norm() <= cfg.gradient_tolerance) {
      diag.converged = true;
      break;
    }
    diag.iterations = it + 1;

    Vector d;
    if (cfg.mode == Mode::NewtonWithHessian && obj.has_hessian()) {
      obj.hessian(x, H);
      d = modified_newton_direction(H, g);
    } else {
      d = mem.direction(g);
    }
    if (!(g.dot(d) < 0.0)) {
      mem.clear();
      d = -g;
    }

    // Armijo backtracking along the projection arc.
    Vector xn;
    double fn = f;
    bool accepted = false;
    const auto backtrack = [&](const Vector& dir) {
      double step = 1.0;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        xn = box.project(x + step * dir);
        if ((xn - x).norm() == 0.0) return;
        fn = obj.value(xn);
        if (std::isfinite(fn) && fn <= f + kArmijo * g.dot(xn - x)) {
          accepted = true;
          return;
        }
        step *= 0.5;
      }
    };
    backtrack(d);
    if (!accepted) {
      mem.clear();
      backtrack(-g);
    }
    if (!accepted) break;  // stalled; report with converged = false

    Vector gn(x.size());
    const double fn2 = obj.value_and_gradient(xn, gn);
    mem.push(xn - x, gn - g);
    x = xn;
    f = std::min(fn, fn2);
    g = gn;
    diag.trace.push_back(f);
  }

  diag.value = f;
  minimizer = x;
  return diag;
}

}  // namespace

ObjectiveFactory make_objective(std::function<double(const Vector&, Vector&)> value_and_gradient) {
  return [value_and_gradient]() {
    return std::make_unique<CallableObjective>(value_and_gradient, nullptr);
  };
}

ObjectiveFactory make_objective(std::function<double(const Vector&, Vector&)> value_and_gradient,
                                std::function<void(const Vector&, Matrix&)> hessian) {
  return [value_and_gradient, hessian]() {
    return std::make_unique<CallableObjective>(value_and_gradient, hessian);
  };
}

Matrix random_starts(const BoxDomain& domain, int count, std::uint64_t seed) {
  domain.validate();
  if (count < 1) throw std::invalid_argument("random_starts: count must be >= 1");
  RandomStream rng(seed);
  Matrix starts(count, domain.dimension());
  for (int i = 0; i < count; ++i) {
    for (Index j = 0; j < domain.dimension(); ++j) {
      starts(i, j) = rng.uniform(domain.lower(j), domain.upper(j));
    }
  }
  return starts;
}

MinimizeResult minimize(const ObjectiveFactory& factory, const BoxDomain& domain,
                        const MultistartConfig& config) {
  if (config.restarts < 1) throw std::invalid_argument("minimize: restarts must be >= 1");
  return minimize(factory, domain, config, random_starts(domain, config.restarts, config.seed));
}

MinimizeResult minimize(const ObjectiveFactory& factory, const BoxDomain& domain,
                        const MultistartConfig& config, const Matrix& starts) {
  domain.validate();
  if (starts.rows() < 1 || starts.cols() != domain.dimension()) {
    throw std::invalid_argument("minimize: bad starting points");
  }

  const int count = static_cast<int>(starts.rows());
  std::vector<RestartDiagnostics> diags(count);
  std::vector<Vector> minimizers(count);

  parallel_for_index(count, config.threads, [&](int i) {
    try {
      auto obj = factory();
      Vector x0 = starts.row(i).transpose();
      diags[i] = run_restart(*obj, domain, config, x0, i, minimizers[i]);
    } catch (const std::exception& e) {
      diags[i].index = i;
      diags[i].failed = true;
      diags[i].error = e.what();
      diags[i].value = std::numeric_limits<double>::infinity();
    }
  });

  MinimizeResult out;
  out.restarts = diags;
  int best = -1;
  for (int i = 0; i < count; ++i) {
    if (diags[i].failed) continue;
    if (best < 0 || diags[i].value < out.value) {
      best = i;
      out.value = diags[i].value;
    }
  }
  if (best < 0) throw std::runtime_error("minimize: all restarts failed");
  out.best_restart = best;
  out.converged = diags[best].converged;
  out.iterations = diags[best].iterations;
  out.x = minimizers[best];
  return out;
}

}  // namespace oeibo::opt
