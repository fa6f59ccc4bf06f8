#pragma once

// Idealized online-RL iteration: each step applies the guaranteed improvement
// floor J' = J + sqrt(kappa) sigma / 2 under the gamma model, recovers the new
// relative budget by inverting the expected-return map, and records the trust
// region, anti-concentration and rollout requirement along the trajectory.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace relbudget {

struct SimConfig {
  double shape = 1.0;              // K
  double xi0 = 1.0;                // initial relative budget
  double budget = 100.0;           // H
  int iterations = 0;              // m
  double delta = 0.05;             // confidence
  double log_reward_class = 1.0;   // log |R|
  double universal_c = 1.0;        // constant C of the one-step bound
  bool include_iterations_in_log = true;  // union bound over m iterations
};

struct OnlineState {
  int iteration = 0;
  double xi = 0.0;
  double expected_return = 0.0;   // J
  double reward_std = 0.0;        // sigma
  double kappa = 0.0;             // trust-region radius
  double c0 = 0.0;                // anti-concentration
  double rollouts_required = 0.0; // n_i (+inf if the denominator vanishes)
};

struct Trajectory {
  SimConfig config;
  std::vector<OnlineState> states;  // length iterations + 1 unless terminated early
  bool terminated_early = false;
  std::string termination_reason;
};

/// kappa = (min{sigma/J, (H - J)/(2 sigma)})^2. Returns nullopt when the
/// state is degenerate (J >= H or sigma == 0): the simulation has converged.
std::optional<double> trust_region_kappa(double expected_return, double reward_std,
                                         double budget);

/// c0 = g(K, max(0, (xi K / H)(H - J - sigma^2/J))).
double anti_concentration_online(double k, double xi, double expected_return, double reward_std,
                                 double budget);

/// n = 2 C H log(m |R| / delta) / (sqrt(kappa) c0 sigma); the m factor drops
/// out when the config says so. +inf when the denominator vanishes.
double required_rollouts(const SimConfig& config, const OnlineState& state);

/// One improvement step. nullopt means clean termination (J reached H within
/// 1e-12 relative); a bisection bracket failure throws numeric_error.
std::optional<OnlineState> step(const SimConfig& config, const OnlineState& state);

/// Full trajectory from xi0: `iterations` steps plus the initial state.
Trajectory simulate(const SimConfig& config);

/// CSV with header i,xi,J,sigma,kappa,c0,n_required; 12 significant digits.
void write_csv(const Trajectory& trajectory, std::ostream& out);

}  // namespace relbudget
