#include "relbudget/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "relbudget/errors.hpp"
#include "relbudget/specfun.hpp"

namespace relbudget::oracle {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed the engine from (seed, stream) through splitmix64 so nearby streams
// start statistically far apart.
std::uint64_t stream_seed(const RngSpec& spec) {
  std::uint64_t state = spec.seed;
  std::uint64_t mixed = splitmix64(state);
  state ^= spec.stream * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL;
  mixed ^= splitmix64(state);
  return mixed;
}

}  // namespace

SampleStream::SampleStream(const RngSpec& spec) : engine_(stream_seed(spec)) {}

double SampleStream::uniform() {
  // 53-bit mantissa, offset by half an ulp so the result is strictly inside
  // (0, 1); log() of either tail stays finite.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double SampleStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double SampleStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::domain_error("SampleStream::gamma: shape and rate must be positive");
  }
  if (shape == 1.0) {
    return -std::log(uniform()) / rate;
  }
  if (shape < 1.0) {
    // Boost trick: draw at shape+1 and scale back by U^(1/shape).
    const double boosted = gamma(shape + 1.0, 1.0);
    return boosted * std::pow(uniform(), 1.0 / shape) / rate;
  }
  // Marsaglia-Tsang (2000) squeeze/accept-reject.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    const double v_cbrt = 1.0 + c * x;
    if (v_cbrt <= 0.0) continue;
    const double v = v_cbrt * v_cbrt * v_cbrt;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

std::uint64_t SampleStream::negative_binomial(std::uint64_t successes, double success_prob) {
  if (successes < 1) {
    throw std::domain_error("negative_binomial: need at least one success");
  }
  if (!(success_prob > 0.0) || !(success_prob < 1.0)) {
    throw std::domain_error("negative_binomial: success probability must be in (0, 1)");
  }
  const double log_fail = std::log1p(-success_prob);
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < successes; ++i) {
    // Geometric trial count via inversion: P[G > k] = (1-p)^k.
    total += static_cast<std::uint64_t>(std::floor(std::log(uniform()) / log_fail)) + 1;
  }
  return total;
}

std::vector<double> sample_gamma(const GammaModel& model, const RngSpec& rng, std::size_t n) {
  if (n < 1) throw std::domain_error("sample_gamma: need n >= 1");
  SampleStream stream(rng);
  std::vector<double> out(n);
  for (auto& v : out) v = stream.gamma(model.shape, model.rate);
  return out;
}

std::vector<std::uint64_t> sample_negbin(std::uint64_t k, double p, const RngSpec& rng,
                                         std::size_t n) {
  if (n < 1) throw std::domain_error("sample_negbin: need n >= 1");
  SampleStream stream(rng);
  std::vector<std::uint64_t> out(n);
  for (auto& v : out) v = stream.negative_binomial(k, p);
  return out;
}

McRewardStats mc_reward_stats(const GammaModel& model, Budget budget,
                              RewardConvention convention, const RngSpec& rng, std::size_t n) {
  if (n < 2) throw std::domain_error("mc_reward_stats: need n >= 2");
  SampleStream stream(rng);

  // One-pass central moments up to order four (for the variance std error).
  double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = stream.gamma(model.shape, model.rate);
    double reward;
    if (convention == RewardConvention::Continuous) {
      reward = std::max(0.0, budget.tokens - t);
    } else {
      reward = t <= budget.tokens ? budget.tokens - t + 1.0 : 0.0;
    }
    const double count = static_cast<double>(i + 1);
    const double delta = reward - mean;
    const double delta_n = delta / count;
    const double delta_n2 = delta_n * delta_n;
    const double term = delta * delta_n * (count - 1.0);
    mean += delta_n;
    m4 += term * delta_n2 * (count * count - 3.0 * count + 3.0) + 6.0 * delta_n2 * m2 -
          4.0 * delta_n * m3;
    m3 += term * delta_n * (count - 2.0) - 3.0 * delta_n * m2;
    m2 += term;
  }
  const double nd = static_cast<double>(n);
  const double sample_var = m2 / (nd - 1.0);
  const double central2 = m2 / nd;
  const double central4 = m4 / nd;

  McRewardStats result;
  result.mean = {mean, std::sqrt(sample_var / nd), n};
  const double var_of_var = std::max(0.0, central4 - central2 * central2) / nd;
  result.variance = {sample_var, std::sqrt(var_of_var), n};
  return result;
}

McEstimate mc_anti_concentration(const GammaModel& model, Budget budget, double eps,
                                 const RngSpec& rng, std::size_t n) {
  if (n < 1) throw std::domain_error("mc_anti_concentration: need n >= 1");
  if (eps < 0.0) throw std::domain_error("mc_anti_concentration: eps must be >= 0");

  const double xi = RelativeBudget::of(model, budget).value;
  const RewardStats closed = sigma_rl(model.shape, xi, budget);
  const double threshold = closed.mean + closed.std * std::sqrt(eps);

  SampleStream stream(rng);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = stream.gamma(model.shape, model.rate);
    const double reward = std::max(0.0, budget.tokens - t);
    if (reward >= threshold) ++hits;
  }
  const double nd = static_cast<double>(n);
  const double p_hat = static_cast<double>(hits) / nd;
  return {p_hat, std::sqrt(p_hat * (1.0 - p_hat) / nd), n};
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::domain_error("ks_distance: empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    sup = std::max({sup, std::fabs(f - below), std::fabs(f - above)});
  }
  return sup;
}

double gamma_cdf(const GammaModel& model, double t) {
  if (t <= 0.0) return 0.0;
  return specfun::reg_lower_gamma(model.shape, model.rate * t);
}

}  // namespace relbudget::oracle
