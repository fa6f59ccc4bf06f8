#include "relbudget/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "relbudget/errors.hpp"
#include "relbudget/reward.hpp"
#include "relbudget/specfun.hpp"

namespace relbudget {

namespace {

constexpr double kConvergedFraction = 1.0 - 1e-12;  // J at or above this times H ends the run
constexpr double kBisectionRelTol = 1e-12;

void validate(const SimConfig& config) {
  if (!(config.shape > 0.0)) throw std::domain_error("SimConfig: K must be positive");
  if (!(config.xi0 > 0.0)) throw std::domain_error("SimConfig: xi0 must be positive");
  if (!(config.budget > 0.0)) throw std::domain_error("SimConfig: budget must be positive");
  if (config.iterations < 0) throw std::domain_error("SimConfig: iterations must be >= 0");
  if (!(config.delta > 0.0) || config.delta > 1.0) {
    throw std::domain_error("SimConfig: delta must be in (0, 1]");
  }
  if (config.log_reward_class < 0.0) {
    throw std::domain_error("SimConfig: log reward-class size must be >= 0");
  }
  if (!(config.universal_c > 0.0)) throw std::domain_error("SimConfig: C must be positive");
}

// Fill sigma, kappa, c0 and n for a state whose (iteration, xi, J) are set.
void annotate(const SimConfig& config, OnlineState& state) {
  state.reward_std =
      sigma_rl(config.shape, state.xi, Budget(config.budget)).std;
  const auto kappa = trust_region_kappa(state.expected_return, state.reward_std, config.budget);
  state.kappa = kappa.value_or(0.0);
  state.c0 = anti_concentration_online(config.shape, state.xi, state.expected_return,
                                       state.reward_std, config.budget);
  state.rollouts_required = required_rollouts(config, state);
}

// Invert J(xi) = J_target by bisection; J is strictly increasing in xi.
double invert_expected_return(double k, double budget, double xi_lower, double j_target) {
  const Budget h(budget);
  double lo = xi_lower;
  double hi = 4.0 * xi_lower;
  int doublings = 0;
  while (expected_return(k, hi, h) <= j_target) {
    hi *= 2.0;
    if (++doublings > 200) {
      throw numeric_error("dynamics: bisection bracket not found (J target " +
                          detail::num(j_target) + ")");
    }
  }
  while ((hi - lo) > kBisectionRelTol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (expected_return(k, mid, h) < j_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::optional<double> trust_region_kappa(double expected_return, double reward_std,
                                         double budget) {
  if (!(expected_return > 0.0)) {
    throw std::domain_error("trust_region_kappa: expected return must be positive");
  }
  if (reward_std < 0.0) throw std::domain_error("trust_region_kappa: std must be >= 0");
  if (expected_return >= budget || reward_std == 0.0) {
    return std::nullopt;  // converged: no admissible trust region left
  }
  const double ratio = std::min(reward_std / expected_return,
                                (budget - expected_return) / (2.0 * reward_std));
  return ratio * ratio;
}

double anti_concentration_online(double k, double xi, double expected_return, double reward_std,
                                 double budget) {
  if (!(expected_return > 0.0)) {
    throw std::domain_error("anti_concentration_online: expected return must be positive");
  }
  const double slack = budget - expected_return - reward_std * reward_std / expected_return;
  const double argument = std::max(0.0, xi * k / budget * slack);
  return specfun::reg_lower_gamma(k, argument);
}

double required_rollouts(const SimConfig& config, const OnlineState& state) {
  double log_term = config.log_reward_class - std::log(config.delta);
  if (config.include_iterations_in_log && config.iterations > 0) {
    log_term += std::log(static_cast<double>(config.iterations));
  }
  const double denominator = std::sqrt(state.kappa) * state.c0 * state.reward_std;
  if (denominator <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * config.universal_c * config.budget * log_term / denominator;
}

std::optional<OnlineState> step(const SimConfig& config, const OnlineState& state) {
  const auto kappa = trust_region_kappa(state.expected_return, state.reward_std, config.budget);
  if (!kappa) return std::nullopt;

  // Guaranteed improvement floor: half the trust-region gain.
  const double j_next =
      state.expected_return + 0.5 * std::sqrt(*kappa) * state.reward_std;
  if (j_next >= kConvergedFraction * config.budget) return std::nullopt;

  OnlineState next;
  next.iteration = state.iteration + 1;
  next.expected_return = j_next;
  next.xi = invert_expected_return(config.shape, config.budget, state.xi, j_next);
  annotate(config, next);
  return next;
}

Trajectory simulate(const SimConfig& config) {
  validate(config);

  Trajectory trajectory;
  trajectory.config = config;
  trajectory.states.reserve(static_cast<std::size_t>(config.iterations) + 1);

  OnlineState initial;
  initial.iteration = 0;
  initial.xi = config.xi0;
  initial.expected_return = expected_return(config.shape, config.xi0, Budget(config.budget));
  annotate(config, initial);
  trajectory.states.push_back(initial);

  for (int i = 0; i < config.iterations; ++i) {
    auto next = step(config, trajectory.states.back());
    if (!next) {
      trajectory.terminated_early = true;
      trajectory.termination_reason =
          "expected return reached the budget at iteration " + std::to_string(i);
      break;
    }
    trajectory.states.push_back(*next);
  }
  return trajectory;
}

void write_csv(const Trajectory& trajectory, std::ostream& out) {
  out << "i,xi,J,sigma,kappa,c0,n_required\n";
  char buffer[256];
  for (const auto& s : trajectory.states) {
    std::snprintf(buffer, sizeof(buffer), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", s.iteration,
                  s.xi, s.expected_return, s.reward_std, s.kappa, s.c0, s.rollouts_required);
    out << buffer;
  }
}

}  // namespace relbudget
