// This file is part of oeibo, a batch Bayesian optimization toolkit.
// SPDX-License-Identifier: Apache-2.0

#include "oeibo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "oeibo/bo.hpp"
#include "oeibo/parallel.hpp"
#include "oeibo/validation.hpp"

namespace oeibo::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

/// Shortest round-trip decimal form; keeps emitted files byte-stable.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// ---------------------------------------------------------------------------
// Minimal CSV reading (numeric files emitted by this tool).

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CSV: " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (first) {
      table.header = fields;
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw std::invalid_argument("malformed CSV row in " + path.string());
      }
      table.rows.push_back(fields);
    }
  }
  if (table.header.empty()) throw std::invalid_argument("empty CSV: " + path.string());
  return table;
}

double parse_field(const std::string& s, const fs::path& path) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed numeric field '" + s + "' in " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Minimal static SVG plotting.

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void set_range(double xmin, double xmax, double ymin, double ymax) {
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double ypad = 0.05 * (ymax - ymin);
    xmin_ = xmin;
    xmax_ = xmax;
    ymin_ = ymin - ypad;
    ymax_ = ymax + ypad;
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, const std::string& id) {
    body_ << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      body_ << fmt(sx(xs[i])) << "," << fmt(sy(ys[i])) << " ";
    }
    body_ << "\"/>\n";
  }

  void scatter(const std::vector<double>& xs, const std::vector<double>& ys,
               const std::string& color, const std::string& id) {
    body_ << "<g id=\"" << id << "\" fill=\"" << color << "\" fill-opacity=\"0.5\">\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      body_ << "<circle cx=\"" << fmt(sx(xs[i])) << "\" cy=\"" << fmt(sy(ys[i]))
            << "\" r=\"2\"/>\n";
    }
    body_ << "</g>\n";
  }

  void band(const std::vector<double>& xs, const std::vector<double>& lo,
            const std::vector<double>& hi, const std::string& color, const std::string& id) {
    body_ << "<polygon id=\"" << id << "\" fill=\"" << color
          << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      body_ << fmt(sx(xs[i])) << "," << fmt(sy(hi[i])) << " ";
    }
    for (std::size_t i = xs.size(); i-- > 0;) {
      body_ << fmt(sx(xs[i])) << "," << fmt(sy(lo[i])) << " ";
    }
    body_ << "\"/>\n";
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">"
        << title_ << "</text>\n";
    // axes
    out << "<line x1=\"" << kMl << "\" y1=\"" << kH - kMb << "\" x2=\"" << kW - kMr << "\" y2=\""
        << kH - kMb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMl << "\" y1=\"" << kMt << "\" x2=\"" << kMl << "\" y2=\""
        << kH - kMb << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
      const double fx = xmin_ + (xmax_ - xmin_) * t / 5.0;
      const double fy = ymin_ + (ymax_ - ymin_) * t / 5.0;
      out << "<line x1=\"" << fmt(sx(fx)) << "\" y1=\"" << kH - kMb << "\" x2=\"" << fmt(sx(fx))
          << "\" y2=\"" << kH - kMb + 4 << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << kH - kMb + 16
          << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt_label(fx) << "</text>\n";
      out << "<line x1=\"" << kMl - 4 << "\" y1=\"" << fmt(sy(fy)) << "\" x2=\"" << kMl
          << "\" y2=\"" << fmt(sy(fy)) << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << kMl - 6 << "\" y=\"" << fmt(sy(fy) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\">" << fmt_label(fy) << "</text>\n";
    }
    out << "<text x=\"" << (kMl + kW - kMr) / 2 << "\" y=\"" << kH - 8
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xlabel_ << "</text>\n";
    out << "<text x=\"14\" y=\"" << (kMt + kH - kMb) / 2
        << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 14 "
        << (kMt + kH - kMb) / 2 << ")\">" << ylabel_ << "</text>\n";
    out << body_.str();
    out << "</svg>\n";
  }

 private:
  static constexpr double kW = 640, kH = 420, kMl = 64, kMr = 16, kMt = 26, kMb = 44;

  static std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
  }

  static std::string fmt_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
  }

  double sx(double x) const { return kMl + (x - xmin_) / (xmax_ - xmin_) * (kW - kMl - kMr); }
  double sy(double y) const {
    return kH - kMb - (y - ymin_) / (ymax_ - ymin_) * (kH - kMt - kMb);
  }

  std::string title_, xlabel_, ylabel_;
  double xmin_ = 0.0, xmax_ = 1.0, ymin_ = 0.0, ymax_ = 1.0;
  std::ostringstream body_;
};

// ---------------------------------------------------------------------------
// run subcommand

struct RunSettings {
  std::string config_path;
  std::string function = "six-hump-camel";
  std::string acquisition = "oei";
  std::string kernel = "matern32";
  int batch_size = 5;
  int iterations = 10;
  int runs = 1;
  int initial_points = 10;
  int acq_restarts = 20;
  int fit_restarts = 20;
  int acq_max_iterations = 100;
  std::uint64_t seed = 0;
  double noise = 1e-6;
  double sdp_tol = 1e-7;
  std::string out_dir = ".";
  bool measure_time = false;
};

gp::KernelFamily kernel_from_string(const std::string& name) {
  if (name == "matern32") return gp::KernelFamily::Matern32;
  if (name == "se" || name == "squared-exponential") return gp::KernelFamily::SquaredExponential;
  throw std::invalid_argument("unknown kernel: " + name);
}

void apply_config_file(RunSettings& s, const std::map<std::string, bool>& flag_given) {
  std::ifstream in(s.config_path);
  if (!in) throw std::invalid_argument("cannot open config file: " + s.config_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid config JSON: ") + e.what());
  }
  const auto set_if = [&](const char* key, auto& field) {
    if (j.contains(key) && !flag_given.at(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  set_if("function", s.function);
  set_if("acquisition", s.acquisition);
  set_if("kernel", s.kernel);
  set_if("batch_size", s.batch_size);
  set_if("iterations", s.iterations);
  set_if("runs", s.runs);
  set_if("initial_points", s.initial_points);
  set_if("acq_restarts", s.acq_restarts);
  set_if("fit_restarts", s.fit_restarts);
  set_if("acq_max_iterations", s.acq_max_iterations);
  set_if("seed", s.seed);
  set_if("noise", s.noise);
  set_if("sdp_tol", s.sdp_tol);
  set_if("out_dir", s.out_dir);
  set_if("measure_time", s.measure_time);
}

int cmd_run(const RunSettings& s) {
  if (s.runs < 1) throw std::invalid_argument("runs must be >= 1");
  const bo::BenchmarkFunction objective = bo::benchmark(s.function);

  bo::BoConfig base;
  base.batch_size = s.batch_size;
  base.iterations = s.iterations;
  base.initial_points = s.initial_points;
  base.acquisition = bo::acquisition_from_string(s.acquisition);
  base.kernel = kernel_from_string(s.kernel);
  base.noise = s.noise;
  base.acq_restarts = s.acq_restarts;
  base.fit_restarts = s.fit_restarts;
  base.acq_max_iterations = s.acq_max_iterations;
  base.sdp_tol = s.sdp_tol;
  base.threads = 1;  // runs are parallelized below

  fs::create_directories(s.out_dir);

  std::vector<bo::ExperimentRecord> records(static_cast<std::size_t>(s.runs));
  parallel_for_index(s.runs, 0, [&](int r) {
    bo::BoConfig cfg = base;
    cfg.seed = split_seed(s.seed, static_cast<std::uint64_t>(r));
    records[static_cast<std::size_t>(r)] = bo::run(objective, cfg);
  });

  // runs.csv — the canonical data file. Timing is reported as zero unless
  // --measure-time is given, so that identical flags give identical bytes.
  const fs::path csv_path = fs::path(s.out_dir) / "runs.csv";
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    out << "run_id,iteration,evaluations,incumbent,regret,wall_time_s,solver_iters\n";
    for (int r = 0; r < s.runs; ++r) {
      for (const bo::IterationRow& row : records[static_cast<std::size_t>(r)].rows) {
        out << r << ',' << row.iteration << ',' << row.evaluations << ','
            << format_double(row.incumbent) << ',';
        if (row.regret.has_value()) out << format_double(*row.regret);
        out << ',' << (s.measure_time ? format_double(row.wall_time_s) : std::string("0")) << ','
            << row.solver_iterations << '\n';
      }
    }
  }

  // summary.json — per-iteration quartiles across runs.
  json summary;
  summary["function"] = s.function;
  summary["acquisition"] = s.acquisition;
  summary["kernel"] = s.kernel;
  summary["batch_size"] = s.batch_size;
  summary["iterations"] = s.iterations;
  summary["runs"] = s.runs;
  summary["seed"] = s.seed;
  summary["initial_points"] = s.initial_points;
  json per_iteration = json::array();
  for (int t = 1; t <= s.iterations; ++t) {
    std::vector<double> regrets, incumbents;
    int evaluations = 0;
    for (const auto& rec : records) {
      for (const auto& row : rec.rows) {
        if (row.iteration != t) continue;
        evaluations = row.evaluations;
        incumbents.push_back(row.incumbent);
        if (row.regret.has_value()) regrets.push_back(*row.regret);
      }
    }
    if (incumbents.empty()) continue;
    json item;
    item["iteration"] = t;
    item["evaluations"] = evaluations;
    item["incumbent_median"] = quantile(incumbents, 0.5);
    if (!regrets.empty()) {
      item["regret_median"] = quantile(regrets, 0.5);
      item["regret_q25"] = quantile(regrets, 0.25);
      item["regret_q75"] = quantile(regrets, 0.75);
    }
    per_iteration.push_back(item);
  }
  summary["per_iteration"] = per_iteration;
  bool all_completed = true;
  for (const auto& rec : records) all_completed = all_completed && rec.completed;
  summary["completed"] = all_completed;

  std::ofstream(fs::path(s.out_dir) / "summary.json") << summary.dump(2) << "\n";

  if (!all_completed) {
    for (const auto& rec : records) {
      if (!rec.completed) std::cerr << "run failed: " << rec.error << "\n";
    }
    return 1;  // partial CSV retained above
  }
  std::cout << "wrote " << csv_path.string() << " (" << s.runs << " runs x " << s.iterations
            << " iterations)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate subcommand

int cmd_validate(const std::string& suite, std::uint64_t seed, const std::string& out_dir) {
  validation::SuiteResult result;
  if (suite == "duality") {
    result = validation::duality_suite(200, seed);
  } else if (suite == "gradients") {
    result = validation::gradient_suite(50, 10, seed);
  } else if (suite == "sandwich") {
    result = validation::sandwich_suite(500, 200000, seed);
  } else if (suite == "distribution") {
    result = validation::distribution_suite(100, seed);
  } else {
    throw std::invalid_argument("unknown suite: " + suite);
  }

  std::cout << result.suite << ": checks=" << result.checks << " failures=" << result.failures
            << (result.pass() ? " PASS" : " FAIL") << "\n";
  if (!result.pass()) {
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / ("failures_" + suite + ".json");
    json j = json::array();
    for (const std::string& report : result.failure_reports) j.push_back(json::parse(report));
    std::ofstream(path) << j.dump(2) << "\n";
    std::cerr << "failing instances written to " << path.string() << " for replay\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench-timing subcommand

int cmd_bench_timing(const std::string& batch_sizes_csv, int repeats, std::uint64_t seed,
                     const std::string& out_dir) {
  std::vector<int> sizes;
  {
    std::stringstream ss(batch_sizes_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) sizes.push_back(std::stoi(tok));
    }
  }
  if (sizes.empty() || repeats < 1) throw std::invalid_argument("bad bench-timing arguments");

  // Representative model: eggholder observations on the rescaled domain,
  // values normalized to unit variance, fitted Matern 3/2 kernel.
  const bo::BenchmarkFunction egg = bo::benchmark("eggholder");
  RandomStream rng(split_seed(seed, 0xbe));
  const int points = 30;
  Matrix X(points, 2);
  Vector y(points);
  for (int i = 0; i < points; ++i) {
    for (int c = 0; c < 2; ++c) X(i, c) = rng.uniform(-0.5, 0.5);
    Vector orig(2);
    for (int c = 0; c < 2; ++c) {
      orig(c) = egg.domain.lower(c) + (X(i, c) + 0.5) * (egg.domain.upper(c) - egg.domain.lower(c));
    }
    y(i) = egg.evaluator(orig);
  }
  const double sd = std::sqrt((y.array() - y.mean()).square().mean());
  y /= sd;
  gp::GpModel model;
  model.data.set(X, y);
  model.mean = gp::MeanFunction::zero();
  model.noise = 1e-6;
  gp::FitOptions fit;
  fit.restarts = 10;
  fit.seed = split_seed(seed, 0xf1);
  model.kernel = gp::fit_kernel(model.data, gp::KernelFamily::Matern32, model.mean, model.noise, fit);

  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "timing.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "batch_size,mean_value_grad_seconds,mean_hessian_seconds,warm_vs_cold_iteration_ratio\n";

  oei::EvaluatorOptions opts;
  opts.domain_diameter = std::sqrt(2.0);
  for (const int k : sizes) {
    double t_vg = 0.0, t_h = 0.0, ratio = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      Matrix batch(k, 2);
      for (int i = 0; i < k; ++i) {
        for (int c = 0; c < 2; ++c) batch(i, c) = rng.uniform(-0.5, 0.5);
      }
      oei::OeiEvaluator evaluator(model, opts);

      auto t0 = Clock::now();
      const auto ev = evaluator.evaluate(batch, true, false);
      t_vg += std::chrono::duration<double>(Clock::now() - t0).count();
      if (!ev.solution.converged) {
        std::cerr << "solver did not converge at batch size " << k << "\n";
        return 1;
      }
      const int iters_cold = ev.solution.iterations;

      // Hessian timing with the solver already at the solution.
      t0 = Clock::now();
      const auto evh = evaluator.evaluate(batch, true, true);
      t_h += std::chrono::duration<double>(Clock::now() - t0).count();
      if (!evh.solution.converged) {
        std::cerr << "solver did not converge at batch size " << k << "\n";
        return 1;
      }

      // Warm versus cold on a nearby batch.
      Matrix nearby = batch;
      for (int i = 0; i < k; ++i) {
        for (int c = 0; c < 2; ++c) nearby(i, c) += 1e-3 * rng.uniform(-1.0, 1.0);
      }
      const auto warm = evaluator.evaluate(nearby, false, false);
      oei::OeiEvaluator cold_eval(model, opts);
      const auto cold = cold_eval.evaluate(nearby, false, false);
      if (!warm.solution.converged || !cold.solution.converged) {
        std::cerr << "solver did not converge at batch size " << k << "\n";
        return 1;
      }
      ratio += static_cast<double>(warm.solution.iterations) /
               std::max(1, cold.solution.iterations);
      (void)iters_cold;
    }
    out << k << ',' << format_double(t_vg / repeats) << ',' << format_double(t_h / repeats) << ','
        << format_double(ratio / repeats) << '\n';
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// linescan subcommand (data generator behind `plot --kind linescan`)

int cmd_linescan(std::uint64_t seed, int points, double spacing, int samples,
                 const std::string& out_dir) {
  if (points < 2) throw std::invalid_argument("linescan: points must be >= 2");
  const gp::GpModel model = bo::demo_gp_model(seed);

  RandomStream rng(split_seed(seed, 0x115c));
  const Matrix X0 = validation::separated_batch_1d(rng, 5, -0.8, 0.8, 0.05);
  Matrix direction(5, 1);
  for (int i = 0; i < 5; ++i) direction(i, 0) = rng.uniform(-1.0, 1.0);
  direction /= direction.norm();

  oei::EvaluatorOptions opts;
  opts.domain_diameter = 2.0;
  oei::OeiEvaluator evaluator(model, opts);

  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / "linescan.csv";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,oei,mc,mc_stderr\n";
  for (int i = 0; i < points; ++i) {
    const double t = spacing * i;
    const Matrix X = X0 + t * direction;
    const auto ev = evaluator.evaluate(X, false, false);
    const gp::PosteriorMoments post = gp::posterior(model, X);
    const auto [mc, se] = bo::mc_expected_improvement(
        post.mean, post.effective_covariance(), model.data.incumbent(), samples,
        split_seed(seed, 0x3000 + static_cast<std::uint64_t>(i)));
    out << format_double(t) << ',' << format_double(ev.value) << ',' << format_double(mc) << ','
        << format_double(se) << '\n';
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// plot subcommand

int cmd_plot(const std::string& input_dir, const std::string& kind, std::string out_file) {
  const fs::path dir(input_dir);
  if (kind == "regret") {
    const CsvTable table = read_csv(dir / "runs.csv");
    const int c_run = table.column("run_id");
    const int c_iter = table.column("iteration");
    const int c_regret = table.column("regret");
    if (c_run < 0 || c_iter < 0 || c_regret < 0) {
      throw std::invalid_argument("runs.csv lacks required columns");
    }
    std::vector<double> xs, ys;
    std::map<int, std::vector<double>> by_iteration;
    for (const auto& row : table.rows) {
      if (row[static_cast<std::size_t>(c_regret)].empty()) continue;
      const double it = parse_field(row[static_cast<std::size_t>(c_iter)], dir / "runs.csv");
      const double rg = parse_field(row[static_cast<std::size_t>(c_regret)], dir / "runs.csv");
      xs.push_back(it);
      ys.push_back(rg);
      by_iteration[static_cast<int>(it)].push_back(rg);
    }
    if (xs.empty()) throw std::invalid_argument("runs.csv has no regret data");
    SvgPlot plot("simple regret per iteration", "iteration", "regret");
    plot.set_range(*std::min_element(xs.begin(), xs.end()), *std::max_element(xs.begin(), xs.end()),
                   *std::min_element(ys.begin(), ys.end()), *std::max_element(ys.begin(), ys.end()));
    plot.scatter(xs, ys, "#888888", "runs");
    std::vector<double> mx, my;
    for (const auto& [it, values] : by_iteration) {
      mx.push_back(it);
      my.push_back(quantile(values, 0.5));
    }
    plot.polyline(mx, my, "#d62728", "median");
    if (out_file.empty()) out_file = (dir / "regret.svg").string();
    plot.write(out_file);
  } else if (kind == "linescan") {
    const CsvTable table = read_csv(dir / "linescan.csv");
    const int c_t = table.column("t");
    const int c_oei = table.column("oei");
    const int c_mc = table.column("mc");
    const int c_se = table.column("mc_stderr");
    if (c_t < 0 || c_oei < 0 || c_mc < 0 || c_se < 0) {
      throw std::invalid_argument("linescan.csv lacks required columns");
    }
    std::vector<double> ts, oei_values, mc_values, lo, hi;
    for (const auto& row : table.rows) {
      const double t = parse_field(row[static_cast<std::size_t>(c_t)], dir / "linescan.csv");
      const double o = parse_field(row[static_cast<std::size_t>(c_oei)], dir / "linescan.csv");
      const double m = parse_field(row[static_cast<std::size_t>(c_mc)], dir / "linescan.csv");
      const double s = parse_field(row[static_cast<std::size_t>(c_se)], dir / "linescan.csv");
      ts.push_back(t);
      oei_values.push_back(o);
      mc_values.push_back(m);
      lo.push_back(m - 3.0 * s);
      hi.push_back(m + 3.0 * s);
    }
    if (ts.empty()) throw std::invalid_argument("linescan.csv is empty");
    const double ymin = std::min(*std::min_element(oei_values.begin(), oei_values.end()),
                                 *std::min_element(lo.begin(), lo.end()));
    const double ymax = std::max(*std::max_element(oei_values.begin(), oei_values.end()),
                                 *std::max_element(hi.begin(), hi.end()));
    SvgPlot plot("acquisition along a line scan", "t", "expected improvement");
    plot.set_range(ts.front(), ts.back(), ymin, ymax);
    plot.band(ts, lo, hi, "#1f77b4", "mc-band");
    plot.polyline(ts, mc_values, "#1f77b4", "mc");
    plot.polyline(ts, oei_values, "#d62728", "oei");
    if (out_file.empty()) out_file = (dir / "linescan.svg").string();
    plot.write(out_file);
  } else if (kind == "timing") {
    const CsvTable table = read_csv(dir / "timing.csv");
    const int c_k = table.column("batch_size");
    const int c_vg = table.column("mean_value_grad_seconds");
    const int c_h = table.column("mean_hessian_seconds");
    if (c_k < 0 || c_vg < 0 || c_h < 0) {
      throw std::invalid_argument("timing.csv lacks required columns");
    }
    std::vector<double> ks, vg, h;
    for (const auto& row : table.rows) {
      ks.push_back(parse_field(row[static_cast<std::size_t>(c_k)], dir / "timing.csv"));
      vg.push_back(parse_field(row[static_cast<std::size_t>(c_vg)], dir / "timing.csv"));
      h.push_back(parse_field(row[static_cast<std::size_t>(c_h)], dir / "timing.csv"));
    }
    if (ks.empty()) throw std::invalid_argument("timing.csv is empty");
    SvgPlot plot("acquisition timing", "batch size", "seconds");
    const double ymax = std::max(*std::max_element(vg.begin(), vg.end()),
                                 *std::max_element(h.begin(), h.end()));
    plot.set_range(ks.front(), ks.back(), 0.0, ymax);
    plot.polyline(ks, vg, "#d62728", "value-grad");
    plot.polyline(ks, h, "#1f77b4", "hessian");
    if (out_file.empty()) out_file = (dir / "timing.svg").string();
    plot.write(out_file);
  } else {
    throw std::invalid_argument("unknown plot kind: " + kind);
  }
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"batch Bayesian optimization with an SDP-evaluated acquisition"};
  app.require_subcommand(1);

  // --- run ---
  RunSettings rs;
  CLI::App* run_cmd = app.add_subcommand("run", "run optimization experiments");
  std::map<std::string, CLI::Option*> run_opts;
  run_opts["function"] = run_cmd->add_option("--function", rs.function, "objective name");
  run_opts["acquisition"] =
      run_cmd->add_option("--acquisition", rs.acquisition, "oei|random|cl-ei|blcb");
  run_opts["kernel"] = run_cmd->add_option("--kernel", rs.kernel, "matern32|se");
  run_opts["batch_size"] = run_cmd->add_option("--batch-size", rs.batch_size, "points per batch");
  run_opts["iterations"] = run_cmd->add_option("--iterations", rs.iterations, "iteration count");
  run_opts["runs"] = run_cmd->add_option("--runs", rs.runs, "independent seeded runs");
  run_opts["initial_points"] =
      run_cmd->add_option("--initial-points", rs.initial_points, "initial design size");
  run_opts["acq_restarts"] =
      run_cmd->add_option("--acq-restarts", rs.acq_restarts, "acquisition multistart count");
  run_opts["fit_restarts"] =
      run_cmd->add_option("--fit-restarts", rs.fit_restarts, "hyperparameter fit restarts");
  run_opts["acq_max_iterations"] = run_cmd->add_option("--acq-max-iterations",
                                                       rs.acq_max_iterations, "per-restart cap");
  run_opts["seed"] = run_cmd->add_option("--seed", rs.seed, "base seed");
  run_opts["noise"] = run_cmd->add_option("--noise", rs.noise, "likelihood variance");
  run_opts["sdp_tol"] = run_cmd->add_option("--sdp-tol", rs.sdp_tol, "solver tolerance");
  run_opts["out_dir"] = run_cmd->add_option("--out-dir", rs.out_dir, "output directory");
  run_opts["measure_time"] = run_cmd->add_flag("--measure-time", rs.measure_time,
                                               "record wall time (breaks byte reproducibility)");
  run_cmd->add_option("--config", rs.config_path, "JSON config; flags override file values");

  // --- validate ---
  std::string suite;
  std::uint64_t validate_seed = 0;
  std::string validate_out = ".";
  CLI::App* validate_cmd = app.add_subcommand("validate", "run a property suite");
  validate_cmd->add_option("--suite", suite, "sandwich|gradients|duality|distribution")
      ->required();
  validate_cmd->add_option("--seed", validate_seed, "seed");
  validate_cmd->add_option("--out-dir", validate_out, "directory for failure reports");

  // --- bench-timing ---
  std::string batch_sizes = "2,3,6,10,20,40";
  int repeats = 3;
  std::uint64_t bench_seed = 0;
  std::string bench_out = ".";
  CLI::App* bench_cmd = app.add_subcommand("bench-timing", "time the acquisition across batch sizes");
  bench_cmd->add_option("--batch-sizes", batch_sizes, "comma-separated batch sizes");
  bench_cmd->add_option("--repeats", repeats, "repeats per size");
  bench_cmd->add_option("--seed", bench_seed, "seed");
  bench_cmd->add_option("--out-dir", bench_out, "output directory");

  // --- linescan ---
  std::uint64_t scan_seed = 0;
  int scan_points = 101;
  double scan_spacing = 1e-3;
  int scan_samples = 200000;
  std::string scan_out = ".";
  CLI::App* scan_cmd = app.add_subcommand("linescan", "acquisition and Monte-Carlo values along a line");
  scan_cmd->add_option("--seed", scan_seed, "seed");
  scan_cmd->add_option("--points", scan_points, "samples along the line");
  scan_cmd->add_option("--spacing", scan_spacing, "parameter spacing");
  scan_cmd->add_option("--samples", scan_samples, "Monte-Carlo samples per point");
  scan_cmd->add_option("--out-dir", scan_out, "output directory");

  // --- plot ---
  std::string plot_input, plot_kind, plot_out;
  CLI::App* plot_cmd = app.add_subcommand("plot", "render SVG plots from emitted CSV files");
  plot_cmd->add_option("--input", plot_input, "directory with CSV inputs")->required();
  plot_cmd->add_option("--kind", plot_kind, "regret|linescan|timing")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path");

  std::vector<const char*> argv;
  argv.push_back("oeibo");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      if (!rs.config_path.empty()) {
        std::map<std::string, bool> given;
        for (const auto& [key, opt] : run_opts) given[key] = opt->count() > 0;
        apply_config_file(rs, given);
      }
      return cmd_run(rs);
    }
    if (validate_cmd->parsed()) return cmd_validate(suite, validate_seed, validate_out);
    if (bench_cmd->parsed()) return cmd_bench_timing(batch_sizes, repeats, bench_seed, bench_out);
    if (scan_cmd->parsed()) {
      return cmd_linescan(scan_seed, scan_points, scan_spacing, scan_samples, scan_out);
    }
    if (plot_cmd->parsed()) return cmd_plot(plot_input, plot_kind, plot_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace oeibo::cli
