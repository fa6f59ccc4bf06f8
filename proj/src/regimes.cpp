#include "relbudget/regimes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "relbudget/errors.hpp"
#include "relbudget/reward.hpp"
#include "relbudget/specfun.hpp"

namespace relbudget {

namespace {

constexpr double kScanLo = 0.05;
constexpr double kScanHi = 20.0;
constexpr int kScanPoints = 256;

// Reward std in units of H at relative budget xi.
double sigma_over_h(double k, double xi) { return c_rl(k, xi) / (k * xi); }

}  // namespace

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Deficient: return "deficient";
    case RegimeLabel::Balanced: return "balanced";
    case RegimeLabel::Ample: return "ample";
  }
  return "unknown";
}

OptimalBudget optimal_xi(double k, double tol) {
  if (!(k > 0.0)) throw std::domain_error("optimal_xi: K must be positive");
  if (!(tol > 0.0)) throw std::domain_error("optimal_xi: tol must be positive");

  // Coarse log-spaced scan to bracket the maximizer.
  std::vector<double> grid(kScanPoints);
  const double log_lo = std::log(kScanLo);
  const double log_step = (std::log(kScanHi) - log_lo) / (kScanPoints - 1);
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i < kScanPoints; ++i) {
    grid[i] = std::exp(log_lo + log_step * i);
    const double v = sigma_over_h(k, grid[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == kScanPoints - 1) {
    throw numeric_error("optimal_xi: maximizer at scan boundary, bracket not found (K=" +
                        detail::num(k) + ")");
  }
  double a = grid[best - 1];
  double b = grid[best + 1];
  if (!(best_val >= sigma_over_h(k, a) && best_val >= sigma_over_h(k, b))) {
    throw numeric_error("optimal_xi: three-point bracket pattern violated (K=" +
                        detail::num(k) + ")");
  }

  // Golden-section on the bracket.
  constexpr double inv_phi = 0.61803398874989484820;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = sigma_over_h(k, c);
  double fd = sigma_over_h(k, d);
  int iterations = 0;
  while (b - a > tol) {
    ++iterations;
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = sigma_over_h(k, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = sigma_over_h(k, d);
    }
  }

  OptimalBudget result;
  result.xi_star = 0.5 * (a + b);
  result.sigma_at_star = sigma_over_h(k, result.xi_star);
  result.iterations_used = iterations;
  return result;
}

RegimeLabel classify(double xi, const RegimeThresholds& thresholds) {
  if (!(xi > 0.0)) throw std::domain_error("classify: xi must be positive");
  if (!(thresholds.xi_lo > 0.0) || !(thresholds.xi_lo < thresholds.xi_hi)) {
    throw std::domain_error("classify: need 0 < xi_lo < xi_hi");
  }
  if (xi < thresholds.xi_lo) return RegimeLabel::Deficient;
  if (xi <= thresholds.xi_hi) return RegimeLabel::Balanced;
  return RegimeLabel::Ample;
}

SampleComplexity regime_sample_complexity(double k, double xi, double kappa,
                                          const RegimeThresholds& thresholds) {
  if (!(k > 0.0)) throw std::domain_error("regime_sample_complexity: K must be positive");
  if (!(kappa > 0.0)) throw std::domain_error("regime_sample_complexity: kappa must be positive");

  SampleComplexity result;
  result.regime = classify(xi, thresholds);
  result.asymptotic = true;
  const double inv_sqrt_kappa = 1.0 / std::sqrt(kappa);
  switch (result.regime) {
    case RegimeLabel::Deficient: {
      // Left-tail mass f(xi) = g(K, K xi) under the gamma instantiation.
      const double tail = specfun::reg_lower_gamma(k, k * xi);
      if (tail < 1e-300) {
        result.rollouts = std::numeric_limits<double>::infinity();
      } else {
        result.rollouts = inv_sqrt_kappa * std::pow(tail, -1.5);
      }
      break;
    }
    case RegimeLabel::Balanced:
      result.rollouts = inv_sqrt_kappa;
      break;
    case RegimeLabel::Ample:
      result.rollouts = xi * inv_sqrt_kappa;
      break;
  }
  return result;
}

}  // namespace relbudget
