#pragma once

// Closed-form statistics of the shaped reward when the time-to-solution of a
// task follows Gamma(K, p): truncated moments, reward mean/variance under the
// two reward conventions, the C_RL / C_SFT coefficients, the anti-concentration
// coefficient and the expected return J as a function of the relative budget.

namespace relbudget {

/// Time-to-solution difficulty model: T ~ Gamma(shape K, rate p).
/// K counts required insights, p is the per-token success intensity.
struct GammaModel {
  double shape;  // K > 0
  double rate;   // p > 0, units 1/token

  GammaModel(double k, double p);

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

/// Token budget H > 0.
struct Budget {
  double tokens;
  explicit Budget(double h);
};

/// Relative budget xi = p*H/K = H / E[T].
struct RelativeBudget {
  double value;
  explicit RelativeBudget(double xi);
  static RelativeBudget of(const GammaModel& model, Budget budget);
};

/// Which reward the statistics describe: the continuous proxy max(0, H - T)
/// or the bi-level H - T + 1 on success / 0 on failure.
enum class RewardConvention { Continuous, BiLevel };

struct RewardStats {
  double mean = 0.0;
  double variance = 0.0;
  double std = 0.0;
  RewardConvention convention = RewardConvention::Continuous;
};

/// Success probability and moments of T conditioned on T <= H.
/// When the success probability underflows (q < 1e-300) the conditional
/// moments are meaningless; `degenerate` is set and they stay NaN.
struct TruncatedMoments {
  double success_prob = 0.0;       // q = P[T <= H]
  double mean_given_success = 0.0; // mu-tilde
  double var_given_success = 0.0;  // v-tilde
  bool degenerate = false;
};

TruncatedMoments truncated_gamma_moments(const GammaModel& model, Budget budget);

/// Bi-level reward mean/variance from truncated moments:
/// mean = q (H + 1 - mu~), variance = q v~ + q (1 - q) (H + 1 - mu~)^2.
/// A degenerate input yields the zero-reward stats.
RewardStats bilevel_reward_stats(const TruncatedMoments& tm, Budget budget);

/// E[max(0, H - T)] = H g(K, pH) - (K/p) g(K+1, pH), with g the regularized
/// lower incomplete gamma.
double continuous_reward_mean(const GammaModel& model, Budget budget);

/// Dimensionless coefficient with reward std = C_RL(K, xi) * H / (K xi).
/// Tiny negative radicands (>= -1e-9) clamp to zero; anything worse throws.
double c_rl(double k, double xi);

/// Full continuous-convention stats at budget H: std = C_RL * H / (K xi).
RewardStats sigma_rl(double k, double xi, Budget budget);
RewardStats sigma_rl(const GammaModel& model, Budget budget);

/// psi(K, xi, eps) = 1 - g(K,Kxi) + g(K+1,Kxi)/xi - sqrt(eps) C_RL/(K xi),
/// returned unclipped.
double psi(double k, double xi, double eps);

/// Anti-concentration coefficient c = g(K, K xi clip(psi, 0, 1)):
/// probability that a rollout's reward exceeds mean + std sqrt(eps).
double anti_concentration(double k, double xi, double eps);

/// Ratio of the success-conditioned time std to the unconditional one,
/// C_SFT in [0, 1]. Throws numeric_error when no successful trace mass exists.
double c_sft(double k, double xi);

/// SFT heterogeneity scale sigma_SFT = C_SFT(K, xi) * H / (sqrt(K) xi).
double sigma_sft(double k, double xi, Budget budget);

/// Expected return J = H (g(K,Kxi) - g(K+1,Kxi)/xi); equals
/// continuous_reward_mean under p = K xi / H.
double expected_return(double k, double xi, Budget budget);

}  // namespace relbudget
