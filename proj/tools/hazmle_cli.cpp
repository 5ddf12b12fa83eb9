// Command-line front end: fitting, certificate checking, sampling, envelope
// quantile simulation, confidence intervals, and experiment runs.
//
// Exit codes: 0 on success/pass, 2 when a characterization or experiment
// property fails, 1 on operational errors (bad input, I/O, non-convergence
// of auxiliary computations).

#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hazmle/asymptotics.hpp"
#include "hazmle/characterization.hpp"
#include "hazmle/envelope.hpp"
#include "hazmle/experiments.hpp"
#include "hazmle/hazard.hpp"
#include "hazmle/hs_distribution.hpp"
#include "hazmle/lifetime_sample.hpp"
#include "hazmle/solver.hpp"
#include "hazmle/util.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kPropertyFailed = 2;
constexpr int kOperationalError = 1;

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file '" + path + "'");
  return os;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open input file '" + path + "'");
  return is;
}

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> levels;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string tok = csv.substr(pos, comma - pos);
    auto trimmed = hazmle::trim(tok);
    if (!trimmed.empty()) levels.push_back(hazmle::require_double(trimmed));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (levels.empty()) throw std::runtime_error("no quantile levels given");
  return levels;
}

int run_fit(const std::string& input, const std::string& output, double tol,
            int refine) {
  hazmle::LifetimeSample sample = hazmle::load_lifetime_file(input);
  hazmle::SolverConfig cfg;
  cfg.dd_tol = tol;
  cfg.eq_tol = tol;
  cfg.candidate_refinement = refine;
  try {
    hazmle::FitResult res = hazmle::fit(sample, cfg);
    hazmle::save_hazard(res.hazard, output);
    std::cout << "criterion " << hazmle::format_double(res.criterion) << "\n";
    std::cout << "iterations " << res.iterations << "\n";
    std::cout << "max_violation " << hazmle::format_double(res.max_violation)
              << "\n";
    std::cout << "check_passed " << (res.report.passed ? "true" : "false")
              << "\n";
    return res.report.passed ? kPass : kPropertyFailed;
  } catch (const hazmle::FitFailure& f) {
    hazmle::save_hazard(f.best().hazard, output);
    std::cerr << "fit did not reach tolerances: " << f.what() << "\n";
    return kPropertyFailed;
  }
}

int run_check(const std::string& input, const std::string& estimate,
              double tol) {
  hazmle::LifetimeSample sample = hazmle::load_lifetime_file(input);
  hazmle::PiecewiseLinearHazard hz = hazmle::load_hazard(estimate);
  hazmle::CharacterizationReport rep = hazmle::check(hz, sample, tol);
  hazmle::write_report(rep, std::cout);
  return rep.passed ? kPass : kPropertyFailed;
}

int run_sample(const std::string& dist, double A, double b,
               const std::string& hazard_file, long long n,
               std::uint64_t seed, const std::string& output) {
  if (n < 1) throw std::runtime_error("sample size must be positive");
  std::vector<double> values;
  std::ostringstream header;
  if (!hazard_file.empty()) {
    hazmle::PiecewiseLinearHazard hz = hazmle::load_hazard(hazard_file);
    values = hazmle::sample_from_hazard(hz, static_cast<std::size_t>(n), seed)
                 .values();
    header << "# sampled from hazard file " << hazard_file;
  } else if (dist == "hs") {
    hazmle::HsDistribution hs(A, b);
    values = hs.sample(static_cast<std::size_t>(n), seed).values();
    header << "# sampled from hs distribution A=" << hazmle::format_double(A)
           << " b=" << hazmle::format_double(b);
  } else {
    throw std::runtime_error("unknown distribution '" + dist +
                             "' (only 'hs' is available)");
  }
  std::ofstream os = open_output(output);
  os << header.str() << " n=" << n << " seed=" << seed << "\n";
  for (double v : values) os << hazmle::format_double(v) << "\n";
  return kPass;
}

int run_envelope(double half_width, double step, int reps,
                 const std::string& levels_csv, std::uint64_t seed,
                 const std::string& output) {
  hazmle::EnvelopeConfig cfg;
  cfg.half_width = half_width;
  cfg.step = step;
  cfg.replications = reps;
  cfg.levels = parse_levels(levels_csv);
  cfg.seed = seed;
  hazmle::QuantileTable tab = hazmle::quantile_table(cfg);
  std::ofstream os = open_output(output);
  hazmle::write_quantile_table(os, tab);
  return kPass;
}

int run_ci(const std::string& input, double x0, double alpha,
           const std::string& quantiles, double window) {
  hazmle::LifetimeSample sample = hazmle::load_lifetime_file(input);
  std::ifstream qin = open_input(quantiles);
  hazmle::QuantileTable table = hazmle::read_quantile_table(qin);
  hazmle::FitResult res = hazmle::fit(sample);
  const hazmle::PiecewiseLinearHazard& h = res.hazard;
  if (!(x0 > 0) || x0 >= sample.max_value()) {
    throw std::runtime_error(
        "x0 must lie strictly between 0 and the largest observation");
  }
  double w = window;
  if (!(w > 0)) {
    w = hazmle::default_curvature_window(
        static_cast<long long>(sample.size()));
  }
  double cap = 0.9 * std::min(x0, h.domain_end() - x0);
  w = std::min(w, cap);
  double curv = hazmle::curvature_estimate(h, x0, w);
  if (!(curv > 0)) {
    throw std::runtime_error(
        "estimated curvature is not positive; the pointwise limit law does "
        "not apply at this point");
  }
  hazmle::LocalParams p;
  p.x0 = x0;
  p.h = h.eval(x0);
  p.hp = h.right_derivative(x0);
  p.hpp = curv;
  p.S = std::exp(-h.cumhaz(x0));
  hazmle::ConfidenceIntervals ci = hazmle::confidence_interval(
      p.h, p.hp, p, static_cast<long long>(sample.size()), table, alpha);
  ci.window = w;
  hazmle::write_confidence_intervals(std::cout, ci);
  return kPass;
}

int run_experiment_cmd(const std::string& spec_path,
                       const std::string& output) {
  std::ifstream is = open_input(spec_path);
  hazmle::ExperimentSpec spec = hazmle::parse_experiment_spec(is);
  if (!spec.truth_is_hs) {
    spec.truth_hazard = hazmle::load_hazard(spec.hazard_path);
  }
  spec.validate();
  hazmle::ExperimentSummary sum = hazmle::run_experiment(spec);
  std::string out_path = output.empty() ? spec.output : output;
  if (out_path.empty()) {
    throw std::runtime_error("no output path given (flag or spec file)");
  }
  std::ofstream os = open_output(out_path);
  hazmle::write_summary(os, spec, sum);
  std::cout << "experiment " << sum.kind << " "
            << (sum.passed ? "passed" : "failed");
  if (!sum.note.empty()) std::cout << " (" << sum.note << ")";
  std::cout << "\n";
  return sum.passed ? kPass : kPropertyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convex hazard maximum likelihood estimation toolkit"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand(
      "fit", "fit the convex-hazard MLE to a lifetime data file");
  std::string fit_input, fit_output;
  double fit_tol = 1e-8;
  int fit_refine = 1;
  fit_cmd->add_option("--input", fit_input, "lifetime data file")->required();
  fit_cmd->add_option("--output", fit_output, "fitted hazard file")
      ->required();
  fit_cmd->add_option("--tol", fit_tol, "solver stopping tolerance");
  fit_cmd->add_option("--refine", fit_refine,
                      "dyadic midpoint levels in the candidate scan");

  // check
  auto* check_cmd = app.add_subcommand(
      "check", "verify the optimality certificate of a fitted hazard");
  std::string check_input, check_estimate;
  double check_tol = 1e-6;
  check_cmd->add_option("--input", check_input, "lifetime data file")
      ->required();
  check_cmd->add_option("--estimate", check_estimate, "fitted hazard file")
      ->required();
  check_cmd->add_option("--tol", check_tol, "certificate tolerance");

  // sample
  auto* sample_cmd = app.add_subcommand(
      "sample", "draw lifetimes from a distribution or hazard");
  std::string sample_dist, sample_hazard, sample_output;
  double sample_A = 1.0, sample_b = 0.0;
  long long sample_n = 0;
  std::uint64_t sample_seed = 1;
  sample_cmd->add_option("--dist", sample_dist, "distribution name (hs)");
  sample_cmd->add_option("--A", sample_A, "hs scale parameter");
  sample_cmd->add_option("--b", sample_b, "hs shape parameter");
  sample_cmd->add_option("--hazard", sample_hazard,
                         "serialized hazard to sample from");
  sample_cmd->add_option("--n", sample_n, "number of draws")->required();
  sample_cmd->add_option("--seed", sample_seed, "random seed");
  sample_cmd->add_option("--output", sample_output, "output data file")
      ->required();

  // envelope
  auto* env_cmd = app.add_subcommand(
      "envelope", "simulate envelope quantiles of the limit process");
  double env_c = 6.0, env_step = 0.01;
  int env_reps = 1000;
  std::string env_levels = "0.025,0.05,0.5,0.95,0.975";
  std::uint64_t env_seed = 1;
  std::string env_output;
  env_cmd->add_option("--half-width", env_c, "window half-width");
  env_cmd->add_option("--step", env_step, "grid step");
  env_cmd->add_option("--reps", env_reps, "Monte Carlo replications");
  env_cmd->add_option("--levels", env_levels,
                      "comma-separated quantile levels");
  env_cmd->add_option("--seed", env_seed, "random seed");
  env_cmd->add_option("--output", env_output, "quantile table file")
      ->required();

  // ci
  auto* ci_cmd = app.add_subcommand(
      "ci", "confidence intervals at a point from a fitted sample");
  std::string ci_input, ci_quantiles;
  double ci_x0 = 0, ci_alpha = 0.05, ci_window = -1;
  ci_cmd->add_option("--input", ci_input, "lifetime data file")->required();
  ci_cmd->add_option("--x0", ci_x0, "evaluation point")->required();
  ci_cmd->add_option("--alpha", ci_alpha, "miscoverage level");
  ci_cmd->add_option("--quantiles", ci_quantiles, "envelope quantile table")
      ->required();
  ci_cmd->add_option("--window", ci_window, "curvature estimation window");

  // experiment
  auto* exp_cmd = app.add_subcommand(
      "experiment", "run a simulation experiment from a spec file");
  std::string exp_spec, exp_output;
  exp_cmd->add_option("--spec", exp_spec, "experiment spec file")->required();
  exp_cmd->add_option("--output", exp_output, "summary output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) {
      return run_fit(fit_input, fit_output, fit_tol, fit_refine);
    }
    if (check_cmd->parsed()) {
      return run_check(check_input, check_estimate, check_tol);
    }
    if (sample_cmd->parsed()) {
      if (sample_hazard.empty() && sample_dist.empty()) {
        throw std::runtime_error("either --dist or --hazard is required");
      }
      if (!sample_hazard.empty() && !sample_dist.empty()) {
        throw std::runtime_error("--dist and --hazard are exclusive");
      }
      return run_sample(sample_dist, sample_A, sample_b, sample_hazard,
                        sample_n, sample_seed, sample_output);
    }
    if (env_cmd->parsed()) {
      return run_envelope(env_c, env_step, env_reps, env_levels, env_seed,
                          env_output);
    }
    if (ci_cmd->parsed()) {
      return run_ci(ci_input, ci_x0, ci_alpha, ci_quantiles, ci_window);
    }
    if (exp_cmd->parsed()) {
      return run_experiment_cmd(exp_spec, exp_output);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  }
  return kOperationalError;
}
