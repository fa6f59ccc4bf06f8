#pragma once

// Optimal relative-budget solver, regime classification and regime-dependent
// sample-complexity estimates under the gamma model.

namespace relbudget {

enum class RegimeLabel { Deficient, Balanced, Ample };

const char* to_string(RegimeLabel label);

/// Regime cut points on xi. The defaults put the empirical phase transition
/// (around xi ~ 1) inside the balanced band with headroom.
struct RegimeThresholds {
  double xi_lo = 0.8;
  double xi_hi = 2.0;
};

struct OptimalBudget {
  double xi_star = 0.0;       // maximizer of the reward std over xi
  double sigma_at_star = 0.0; // std at the maximizer, in units of H
  int iterations_used = 0;    // golden-section iterations
};

/// Maximize xi -> sigma_rl(K, xi)/H by coarse grid scan on [0.05, 20] followed
/// by golden-section refinement. Unimodality is verified per call via the
/// three-point bracket pattern; a violation throws numeric_error.
OptimalBudget optimal_xi(double k, double tol = 1e-6);

RegimeLabel classify(double xi, const RegimeThresholds& thresholds = {});

/// Order-of-magnitude rollout requirement with unit constants and no log
/// factors. `asymptotic` is always set: the underlying bounds hide constants.
struct SampleComplexity {
  RegimeLabel regime = RegimeLabel::Balanced;
  double rollouts = 0.0;  // +inf when the success tail underflows
  bool asymptotic = true;
};

SampleComplexity regime_sample_complexity(double k, double xi, double kappa,
                                          const RegimeThresholds& thresholds = {});

}  // namespace relbudget
