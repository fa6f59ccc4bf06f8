#pragma once

// Monte-Carlo ground truth: deterministic per-stream samplers for the gamma
// and negative-binomial time-to-solution models, empirical reward statistics
// with standard errors, and a Kolmogorov-Smirnov distance for the
// negbin -> gamma convergence check.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "relbudget/reward.hpp"

namespace relbudget::oracle {

/// (seed, stream) fully determines a sample sequence. Distinct streams under
/// the same seed are independent for all practical purposes.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Generator identity recorded in oracle output metadata; reproducibility is
/// guaranteed per (algorithm, seed, stream), not across algorithms.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-stream";

/// Stateful per-stream sampler. Not safe to share one instance across
/// threads; make one stream per thread instead.
class SampleStream {
 public:
  explicit SampleStream(const RngSpec& spec);

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal (Box-Muller, cached pair).
  double normal();

  /// Gamma(shape, rate) variate. Marsaglia-Tsang squeeze for shape >= 1,
  /// boost-to-shape+1 for shape < 1, inverse CDF for the exponential case.
  double gamma(double shape, double rate);

  /// Negative-binomial total trial count: sum of `successes` geometric(p)
  /// trial counts, support >= successes.
  std::uint64_t negative_binomial(std::uint64_t successes, double success_prob);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::vector<double> sample_gamma(const GammaModel& model, const RngSpec& rng, std::size_t n);
std::vector<std::uint64_t> sample_negbin(std::uint64_t k, double p, const RngSpec& rng,
                                         std::size_t n);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

struct McRewardStats {
  McEstimate mean;
  McEstimate variance;
};

/// Empirical reward mean/variance over n sampled time-to-solution values
/// under the given convention. The variance std_error uses the asymptotic
/// fourth-moment formula sqrt((m4 - m2^2)/n).
McRewardStats mc_reward_stats(const GammaModel& model, Budget budget, RewardConvention convention,
                              const RngSpec& rng, std::size_t n);

/// Fraction of rollouts with reward >= mean + std sqrt(eps), where mean/std
/// are the closed-form continuous-convention values, so the estimate isolates
/// the tail formula from moment noise. Binomial std_error.
McEstimate mc_anti_concentration(const GammaModel& model, Budget budget, double eps,
                                 const RngSpec& rng, std::size_t n);

/// Sup-norm distance between the empirical CDF of `samples` and an analytic
/// CDF. Throws on empty input; meaningful from ~100 samples up.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Gamma(shape, rate) CDF, for use as the reference in ks_distance.
double gamma_cdf(const GammaModel& model, double t);

}  // namespace relbudget::oracle
