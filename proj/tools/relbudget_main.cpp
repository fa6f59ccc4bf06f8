// Command-line frontend: closed-form reward statistics, optimal-budget
// solving, online-RL trajectory simulation, Monte-Carlo validation and the
// trace-analysis pipeline. JSON for scalar reports, CSV for sequences.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "relbudget/dynamics.hpp"
#include "relbudget/errors.hpp"
#include "relbudget/oracle.hpp"
#include "relbudget/regimes.hpp"
#include "relbudget/reward.hpp"
#include "relbudget/traces.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct XiGridSpec {
  double lo = 0.1;
  double hi = 4.0;
  int points = 40;
};

XiGridSpec parse_xi_grid(const std::string& text) {
  XiGridSpec spec;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  if (!(in >> spec.lo >> sep1 >> spec.hi >> sep2 >> spec.points) || sep1 != ':' || sep2 != ':' ||
      !in.eof()) {
    throw std::domain_error("--xi-grid expects lo:hi:n, got '" + text + "'");
  }
  if (!(spec.lo > 0.0) || spec.hi < spec.lo || spec.points < 1 || spec.points > 1000000) {
    throw std::domain_error("--xi-grid needs 0 < lo <= hi and 1 <= n <= 1e6");
  }
  if (spec.points == 1 && spec.hi != spec.lo) {
    throw std::domain_error("--xi-grid with n=1 needs lo == hi");
  }
  return spec;
}

std::vector<double> make_grid(const XiGridSpec& spec) {
  std::vector<double> grid(static_cast<std::size_t>(spec.points));
  if (spec.points == 1) {
    grid[0] = spec.lo;
    return grid;
  }
  for (int i = 0; i < spec.points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        spec.lo + (spec.hi - spec.lo) * static_cast<double>(i) / (spec.points - 1);
  }
  return grid;
}

ordered_json comparison_entry(double analytic, const relbudget::oracle::McEstimate& estimate) {
  const double z = estimate.std_error > 0.0
                       ? std::fabs(estimate.value - analytic) / estimate.std_error
                       : (estimate.value == analytic ? 0.0
                                                     : std::numeric_limits<double>::infinity());
  return ordered_json{{"analytic", analytic},
                      {"estimate", estimate.value},
                      {"std_error", estimate.std_error},
                      {"z_score", z},
                      {"pass_3se", z <= 3.0}};
}

int run_stats(double k, double xi, double eps, double budget) {
  using namespace relbudget;
  const Budget h(budget);
  const RewardStats stats = sigma_rl(k, xi, h);
  ordered_json out{{"c_rl", c_rl(k, xi)},
                   {"sigma_rl", stats.std},
                   {"psi", psi(k, xi, eps)},
                   {"anti_concentration", anti_concentration(k, xi, eps)},
                   {"c_sft", c_sft(k, xi)},
                   {"sigma_sft", sigma_sft(k, xi, h)},
                   {"expected_return_J", expected_return(k, xi, h)},
                   {"regime", to_string(classify(xi))}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int run_optimal_xi(double k, double tol) {
  const auto result = relbudget::optimal_xi(k, tol);
  ordered_json out{{"xi_star", result.xi_star},
                   {"sigma_at_star", result.sigma_at_star},
                   {"iterations_used", result.iterations_used}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int run_simulate(const relbudget::SimConfig& config, const std::string& out_path) {
  const auto trajectory = relbudget::simulate(config);
  if (out_path.empty()) {
    relbudget::write_csv(trajectory, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::ios_base::failure("cannot open " + out_path + " for writing");
    relbudget::write_csv(trajectory, out);
  }
  if (trajectory.terminated_early) {
    std::cerr << "note: " << trajectory.termination_reason << '\n';
  }
  return kExitOk;
}

int run_oracle(double k, double p, double budget, std::uint64_t samples, const std::string& dist,
               double eps, std::uint64_t seed) {
  using namespace relbudget;
  const GammaModel model(k, p);
  const Budget h(budget);
  const double xi = RelativeBudget::of(model, h).value;

  ordered_json out;
  out["rng"] = ordered_json{{"algorithm", std::string(oracle::kRngAlgorithm)},
                            {"seed", seed},
                            {"stream", 0}};
  out["model"] = ordered_json{{"k", k}, {"p", p}, {"budget", budget}, {"xi", xi}, {"dist", dist}};

  if (dist == "gamma") {
    const RewardStats closed = sigma_rl(k, xi, h);
    const auto mc = oracle::mc_reward_stats(model, h, RewardConvention::Continuous,
                                            {seed, 0}, samples);
    const auto anti =
        oracle::mc_anti_concentration(model, h, eps, {seed, 1}, samples);
    out["mean"] = comparison_entry(closed.mean, mc.mean);
    out["variance"] = comparison_entry(closed.variance, mc.variance);
    out["anti_concentration"] = comparison_entry(anti_concentration(k, xi, eps), anti);
  } else {  // negbin: discrete draws against the gamma closed forms
    const double k_int = std::round(k);
    if (std::fabs(k - k_int) > 0.0 || k_int < 1.0) {
      throw std::domain_error("--dist negbin requires integer --k >= 1");
    }
    if (!(p < 1.0)) throw std::domain_error("--dist negbin requires --p in (0, 1)");
    const auto draws =
        oracle::sample_negbin(static_cast<std::uint64_t>(k_int), p, {seed, 0}, samples);

    double mean = 0.0, m2 = 0.0;
    std::size_t hits = 0;
    const RewardStats closed = sigma_rl(k, xi, h);
    const double threshold = closed.mean + closed.std * std::sqrt(eps);
    std::vector<double> reals(draws.size());
    std::size_t i = 0;
    for (const auto draw : draws) {
      const double t = static_cast<double>(draw);
      reals[i++] = t;
      const double reward = std::max(0.0, budget - t);
      const double delta = reward - mean;
      mean += delta / static_cast<double>(i);
      m2 += delta * (reward - mean);
      if (reward >= threshold) ++hits;
    }
    const double n = static_cast<double>(samples);
    const double var = m2 / (n - 1.0);
    double m4 = 0.0;
    for (const auto draw : draws) {
      const double reward = std::max(0.0, budget - static_cast<double>(draw));
      const double d = (reward - mean) * (reward - mean);
      m4 += d * d;
    }
    const double var_se = std::sqrt(std::max(0.0, m4 / n - (m2 / n) * (m2 / n)) / n);
    out["mean"] = comparison_entry(
        closed.mean, {mean, std::sqrt(var / n), samples});
    out["variance"] = comparison_entry(closed.variance, {var, var_se, samples});
    const double p_hat = static_cast<double>(hits) / n;
    out["anti_concentration"] = comparison_entry(
        anti_concentration(k, xi, eps), {p_hat, std::sqrt(p_hat * (1.0 - p_hat) / n), samples});
    out["ks_distance"] =
        oracle::ks_distance(reals, [&model](double t) { return oracle::gamma_cdf(model, t); });
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int run_analyze(const std::string& input, const std::string& grid_text, double eps,
                std::size_t min_correct, const std::string& out_path) {
  using namespace relbudget;
  const auto dataset = traces::load_traces(input);
  traces::SweepConfig config;
  config.xi_grid = make_grid(parse_xi_grid(grid_text));
  config.eps = eps;
  config.min_correct = min_correct;
  const auto result = traces::sweep_budget(dataset, config);
  if (out_path.empty()) {
    traces::write_csv(result, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::ios_base::failure("cannot open " + out_path + " for writing");
    traces::write_csv(result, out);
  }
  return kExitOk;
}

int run_gen(double k, double p, int problems, int traces_per_problem, std::uint64_t seed,
            std::optional<double> truncate, const std::string& out_path) {
  using namespace relbudget;
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot open " << out_path << " for writing\n";
    return kExitUsage;
  }
  const auto dataset =
      traces::generate_synthetic(GammaModel(k, p), problems, traces_per_problem, truncate,
                                 {seed, 0});
  traces::write_records(dataset, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative-budget statistics for RL with verifiable rewards"};
  app.require_subcommand(1);

  // stats
  double stats_k = 0.0, stats_xi = 0.0, stats_eps = 0.5, stats_budget = 1.0;
  auto* stats = app.add_subcommand("stats", "Closed-form reward statistics at (K, xi)");
  stats->add_option("--k", stats_k, "Gamma shape K")->required()->check(CLI::PositiveNumber);
  stats->add_option("--xi", stats_xi, "Relative budget xi")
      ->required()
      ->check(CLI::PositiveNumber);
  stats->add_option("--eps", stats_eps, "Anti-concentration epsilon")->check(CLI::NonNegativeNumber);
  stats->add_option("--budget", stats_budget, "Token budget H")->check(CLI::PositiveNumber);

  // optimal-xi
  double opt_k = 0.0, opt_tol = 1e-6;
  auto* optimal = app.add_subcommand("optimal-xi", "Budget maximizing the reward std");
  optimal->add_option("--k", opt_k, "Gamma shape K")->required()->check(CLI::PositiveNumber);
  optimal->add_option("--tol", opt_tol, "Search tolerance")->check(CLI::PositiveNumber);

  // simulate
  relbudget::SimConfig sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Idealized online-RL trajectory");
  simulate->add_option("--k", sim.shape, "Gamma shape K")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--xi0", sim.xi0, "Initial relative budget")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--budget", sim.budget, "Token budget H")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--iters", sim.iterations, "Iteration count m")
      ->required()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--delta", sim.delta, "Confidence delta");
  simulate->add_option("--log-reward-class", sim.log_reward_class, "log |R|")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--const-c", sim.universal_c, "Universal constant C")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_out, "Output CSV path (default: stdout)");

  // oracle
  double orc_k = 0.0, orc_p = 0.0, orc_budget = 0.0, orc_eps = 0.5;
  std::uint64_t orc_samples = 0, orc_seed = 0;
  std::string orc_dist = "gamma";
  auto* orac = app.add_subcommand("oracle", "Monte-Carlo check of the closed forms");
  orac->add_option("--k", orc_k, "Shape K")->required()->check(CLI::PositiveNumber);
  orac->add_option("--p", orc_p, "Rate / per-step success probability")
      ->required()
      ->check(CLI::PositiveNumber);
  orac->add_option("--budget", orc_budget, "Token budget H")
      ->required()
      ->check(CLI::PositiveNumber);
  orac->add_option("--samples", orc_samples, "Sample count (>= 1000)")
      ->required()
      ->check(CLI::Range(std::uint64_t{1000}, std::numeric_limits<std::uint64_t>::max()));
  orac->add_option("--dist", orc_dist, "Sampling distribution")
      ->check(CLI::IsMember({"gamma", "negbin"}));
  orac->add_option("--eps", orc_eps, "Anti-concentration epsilon")->check(CLI::NonNegativeNumber);
  orac->add_option("--seed", orc_seed, "RNG seed")->required();

  // analyze
  std::string an_input, an_grid = "0.1:4.0:40", an_out;
  double an_eps = 0.5;
  std::size_t an_min_correct = 5;
  auto* analyze = app.add_subcommand("analyze", "Budget sweep over a trace dataset");
  analyze->add_option("--input", an_input, "Line-delimited trace records")->required();
  analyze->add_option("--xi-grid", an_grid, "Grid as lo:hi:n");
  analyze->add_option("--eps", an_eps, "Anti-concentration epsilon")
      ->check(CLI::NonNegativeNumber);
  analyze->add_option("--min-correct", an_min_correct, "Minimum correct traces per problem");
  analyze->add_option("--out", an_out, "Output CSV path (default: stdout)");

  // gen
  double gen_k = 0.0, gen_p = 0.0;
  int gen_problems = 0, gen_traces = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  double gen_truncate = 0.0;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace dataset");
  gen->add_option("--k", gen_k, "Shape K")->required()->check(CLI::PositiveNumber);
  gen->add_option("--p", gen_p, "Rate p")->required()->check(CLI::PositiveNumber);
  gen->add_option("--problems", gen_problems, "Problem count")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--traces", gen_traces, "Traces per problem")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  auto* truncate_opt =
      gen->add_option("--truncate", gen_truncate, "Censoring budget H")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output dataset path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(stats)) {
      return run_stats(stats_k, stats_xi, stats_eps, stats_budget);
    }
    if (app.got_subcommand(optimal)) {
      return run_optimal_xi(opt_k, opt_tol);
    }
    if (app.got_subcommand(simulate)) {
      return run_simulate(sim, sim_out);
    }
    if (app.got_subcommand(orac)) {
      return run_oracle(orc_k, orc_p, orc_budget, orc_samples, orc_dist, orc_eps, orc_seed);
    }
    if (app.got_subcommand(analyze)) {
      return run_analyze(an_input, an_grid, an_eps, an_min_correct, an_out);
    }
    if (app.got_subcommand(gen)) {
      return run_gen(gen_k, gen_p, gen_problems, gen_traces, gen_seed,
                     truncate_opt->count() > 0 ? std::optional<double>(gen_truncate)
                                               : std::nullopt,
                     gen_out);
    }
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const relbudget::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitData;
  } catch (const relbudget::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
