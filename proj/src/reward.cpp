#include "relbudget/reward.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "relbudget/errors.hpp"
#include "relbudget/specfun.hpp"

namespace relbudget {

namespace {

using specfun::reg_lower_gamma;

constexpr double kDegenerateSuccessProb = 1e-300;

// Float noise below this magnitude in a radicand is clamped to zero; a larger
// negative value means a formula bug and aborts.
constexpr double kRadicandNoise = 1e-9;

double checked_sqrt(double radicand, const char* who) {
  if (radicand < -kRadicandNoise) {
    throw numeric_error(std::string(who) + ": radicand " + detail::num(radicand) +
                        " below -1e-9; special-function inconsistency");
  }
  return std::sqrt(radicand < 0.0 ? 0.0 : radicand);
}

void require_positive(double v, const char* name, const char* who) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(who) + ": " + name + " must be positive and finite, got " +
                            detail::num(v));
  }
}

void require_non_negative(double v, const char* name, const char* who) {
  if (v < 0.0 || !std::isfinite(v)) {
    throw std::domain_error(std::string(who) + ": " + name + " must be >= 0 and finite, got " +
                            detail::num(v));
  }
}

}  // namespace

GammaModel::GammaModel(double k, double p) : shape(k), rate(p) {
  require_positive(k, "shape K", "GammaModel");
  require_positive(p, "rate p", "GammaModel");
}

Budget::Budget(double h) : tokens(h) { require_positive(h, "budget H", "Budget"); }

RelativeBudget::RelativeBudget(double xi) : value(xi) {
  require_positive(xi, "relative budget xi", "RelativeBudget");
}

RelativeBudget RelativeBudget::of(const GammaModel& model, Budget budget) {
  return RelativeBudget(budget.tokens / model.mean());
}

TruncatedMoments truncated_gamma_moments(const GammaModel& model, Budget budget) {
  const double k = model.shape;
  const double p = model.rate;
  const double z = p * budget.tokens;

  TruncatedMoments tm;
  tm.success_prob = reg_lower_gamma(k, z);
  if (tm.success_prob < kDegenerateSuccessProb) {
    tm.degenerate = true;
    tm.mean_given_success = std::numeric_limits<double>::quiet_NaN();
    tm.var_given_success = std::numeric_limits<double>::quiet_NaN();
    return tm;
  }
  const double g1 = reg_lower_gamma(k + 1.0, z) / tm.success_prob;
  const double g2 = reg_lower_gamma(k + 2.0, z) / tm.success_prob;
  tm.mean_given_success = (k / p) * g1;
  const double second_moment = k * (k + 1.0) / (p * p) * g2;
  const double radicand = second_moment - tm.mean_given_success * tm.mean_given_success;
  // The conditional variance is nonnegative analytically; clamp noise.
  tm.var_given_success = radicand < 0.0 ? 0.0 : radicand;
  return tm;
}

RewardStats bilevel_reward_stats(const TruncatedMoments& tm, Budget budget) {
  RewardStats stats;
  stats.convention = RewardConvention::BiLevel;
  if (tm.degenerate) {
    return stats;  // zero-reward: success is numerically impossible
  }
  const double q = tm.success_prob;
  const double shifted = budget.tokens + 1.0 - tm.mean_given_success;
  stats.mean = q * shifted;
  stats.variance = q * tm.var_given_success + q * (1.0 - q) * shifted * shifted;
  stats.std = checked_sqrt(stats.variance, "bilevel_reward_stats");
  return stats;
}

double continuous_reward_mean(const GammaModel& model, Budget budget) {
  const double z = model.rate * budget.tokens;
  return budget.tokens * reg_lower_gamma(model.shape, z) -
         model.mean() * reg_lower_gamma(model.shape + 1.0, z);
}

double c_rl(double k, double xi) {
  require_positive(k, "K", "c_rl");
  require_positive(xi, "xi", "c_rl");
  const double z = k * xi;
  const double g0 = reg_lower_gamma(k, z);
  const double g1 = reg_lower_gamma(k + 1.0, z);
  const double g2 = reg_lower_gamma(k + 2.0, z);
  const double first_moment = z * g0 - k * g1;  // p * E[max(0, H - T)]
  const double radicand =
      z * z * g0 - 2.0 * k * k * xi * g1 + k * (k + 1.0) * g2 - first_moment * first_moment;
  return checked_sqrt(radicand, "c_rl");
}

RewardStats sigma_rl(const GammaModel& model, Budget budget) {
  return sigma_rl(model.shape, RelativeBudget::of(model, budget).value, budget);
}

RewardStats sigma_rl(double k, double xi, Budget budget) {
  RewardStats stats;
  stats.convention = RewardConvention::Continuous;
  stats.std = c_rl(k, xi) * budget.tokens / (k * xi);
  stats.variance = stats.std * stats.std;
  stats.mean = expected_return(k, xi, budget);
  return stats;
}

double psi(double k, double xi, double eps) {
  require_positive(k, "K", "psi");
  require_positive(xi, "xi", "psi");
  require_non_negative(eps, "eps", "psi");
  const double z = k * xi;
  return 1.0 - reg_lower_gamma(k, z) + reg_lower_gamma(k + 1.0, z) / xi -
         c_rl(k, xi) / z * std::sqrt(eps);
}

double anti_concentration(double k, double xi, double eps) {
  double clipped = psi(k, xi, eps);
  if (clipped < 0.0) clipped = 0.0;
  if (clipped > 1.0) clipped = 1.0;
  return reg_lower_gamma(k, k * xi * clipped);
}

double c_sft(double k, double xi) {
  require_positive(k, "K", "c_sft");
  require_positive(xi, "xi", "c_sft");
  const double z = k * xi;
  const double g0 = reg_lower_gamma(k, z);
  if (g0 < kDegenerateSuccessProb) {
    throw numeric_error("c_sft: no successful trace mass at K=" + detail::num(k) +
                        ", xi=" + detail::num(xi));
  }
  const double r1 = reg_lower_gamma(k + 1.0, z) / g0;
  const double r2 = reg_lower_gamma(k + 2.0, z) / g0;
  const double radicand = (k + 1.0) * r2 - k * r1 * r1;
  return checked_sqrt(radicand, "c_sft");
}

double sigma_sft(double k, double xi, Budget budget) {
  return c_sft(k, xi) * budget.tokens / (std::sqrt(k) * xi);
}

double expected_return(double k, double xi, Budget budget) {
  require_positive(k, "K", "expected_return");
  require_positive(xi, "xi", "expected_return");
  const double z = k * xi;
  return budget.tokens * (reg_lower_gamma(k, z) - reg_lower_gamma(k + 1.0, z) / xi);
}

}  // namespace relbudget
