#include "relbudget/traces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "relbudget/errors.hpp"
#include "relbudget/specfun.hpp"

namespace relbudget::traces {

namespace {

// Trigamma via recurrence plus asymptotic expansion; only needed for the
// Newton derivative in the MLE fit.
double trigamma(double x) {
  double acc = 0.0;
  while (x < 8.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc + inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 +
                                                inv2 * (-1.0 / 30.0 +
                                                        inv2 * (1.0 / 42.0 +
                                                                inv2 * (-1.0 / 30.0))))));
}

std::optional<TraceRecord> parse_record(const std::string& line) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
  if (!parsed.is_object()) return std::nullopt;
  const auto id = parsed.find("problem_id");
  const auto tokens = parsed.find("tokens");
  const auto correct = parsed.find("correct");
  if (id == parsed.end() || !id->is_string()) return std::nullopt;
  if (tokens == parsed.end() || !tokens->is_number_integer()) return std::nullopt;
  if (correct == parsed.end() || !correct->is_boolean()) return std::nullopt;
  TraceRecord record{id->get<std::string>(), tokens->get<std::int64_t>(), correct->get<bool>()};
  if (record.tokens < 1) return std::nullopt;
  return record;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Moments sample_moments(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / (n - 1.0)};
}

}  // namespace

TraceDataset load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::ios_base::failure("load_traces: cannot open " + path.string());
  }
  TraceDataset dataset;
  std::string line;
  std::size_t content_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++content_lines;
    if (auto record = parse_record(line)) {
      dataset.records.push_back(std::move(*record));
    } else {
      ++dataset.skipped_lines;
    }
  }
  if (content_lines > 0 &&
      static_cast<double>(dataset.skipped_lines) > 0.1 * static_cast<double>(content_lines)) {
    throw data_error("load_traces: " + std::to_string(dataset.skipped_lines) + " of " +
                     std::to_string(content_lines) + " lines malformed (>10%)");
  }
  return dataset;
}

GammaFit fit_gamma(std::span<const double> samples, FitMethod method) {
  if (samples.size() < 2) throw data_error("fit_gamma: need at least 2 samples");
  for (double v : samples) {
    if (!(v > 0.0)) throw std::domain_error("fit_gamma: samples must be positive");
  }
  const auto [mean, var] = sample_moments(samples);
  if (!(var > 0.0)) throw data_error("fit_gamma: zero sample variance, fit is degenerate");

  GammaFit fit;
  fit.shape = mean * mean / var;
  fit.rate = mean / var;
  fit.method = FitMethod::MethodOfMoments;
  if (method == FitMethod::MethodOfMoments) return fit;

  // MLE: solve log(k) - digamma(k) = log(mean) - mean(log x).
  double mean_log = 0.0;
  for (double v : samples) mean_log += std::log(v);
  mean_log /= static_cast<double>(samples.size());
  const double target = std::log(mean) - mean_log;
  if (!(target > 0.0)) {
    fit.fell_back_to_moments = true;  // numerically constant samples
    return fit;
  }

  double k = (3.0 - target + std::sqrt((target - 3.0) * (target - 3.0) + 24.0 * target)) /
             (12.0 * target);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const double value = std::log(k) - specfun::digamma(k) - target;
    const double derivative = 1.0 / k - trigamma(k);
    const double next = k - value / derivative;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    const bool done = std::fabs(next - k) <= 1e-10 * k;
    k = next;
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    fit.fell_back_to_moments = true;
    return fit;
  }
  fit.shape = k;
  fit.rate = k / mean;
  fit.method = FitMethod::MaxLikelihood;
  return fit;
}

std::vector<ProblemStats> problem_stats(const TraceDataset& dataset, FitMethod method) {
  std::map<std::string, std::pair<std::size_t, std::vector<double>>> grouped;
  for (const auto& record : dataset.records) {
    auto& [count, correct_tokens] = grouped[record.problem_id];
    ++count;
    if (record.correct) correct_tokens.push_back(static_cast<double>(record.tokens));
  }

  std::vector<ProblemStats> stats;
  stats.reserve(grouped.size());
  for (const auto& [id, entry] : grouped) {
    const auto& [count, correct_tokens] = entry;
    ProblemStats ps;
    ps.problem_id = id;
    ps.n_traces = count;
    ps.n_correct = correct_tokens.size();
    if (ps.n_correct >= 2) {
      const auto [mean, var] = sample_moments(correct_tokens);
      ps.mean_tokens = mean;
      ps.var_tokens = var;
      if (var > 0.0) {
        ps.fit = fit_gamma(correct_tokens, method);
      }
    } else if (ps.n_correct == 1) {
      ps.mean_tokens = correct_tokens.front();
    }
    stats.push_back(std::move(ps));
  }
  return stats;
}

std::vector<double> default_xi_grid() {
  std::vector<double> grid(40);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = 0.1 + 3.9 * static_cast<double>(i) / 39.0;
  }
  return grid;
}

SweepResult sweep_budget(const TraceDataset& dataset, const SweepConfig& config) {
  const std::vector<double> grid = config.xi_grid.empty() ? default_xi_grid() : config.xi_grid;
  for (double xi : grid) {
    if (!(xi > 0.0)) throw std::domain_error("sweep_budget: grid xi must be positive");
  }
  if (config.eps < 0.0 || !std::isfinite(config.eps)) {
    throw std::domain_error("sweep_budget: eps must be >= 0 and finite");
  }

  // Group traces per problem, ordered by problem_id so aggregation is
  // deterministic regardless of input order.
  std::map<std::string, std::vector<const TraceRecord*>> grouped;
  for (const auto& record : dataset.records) {
    grouped[record.problem_id].push_back(&record);
  }

  SweepResult result;
  result.xi_grid = grid;
  result.eps = config.eps;
  result.normalized_variance.assign(grid.size(), 0.0);
  result.anti_concentration.assign(grid.size(), 0.0);

  std::vector<double> rewards;
  std::vector<double> variance_curve(grid.size());
  std::vector<double> anti_curve(grid.size());
  const double sqrt_eps = std::sqrt(config.eps);

  for (const auto& [id, records] : grouped) {
    std::vector<double> correct_tokens;
    for (const auto* r : records) {
      if (r->correct) correct_tokens.push_back(static_cast<double>(r->tokens));
    }
    if (correct_tokens.size() < config.min_correct || correct_tokens.empty()) continue;
    const double mu_hat =
        std::accumulate(correct_tokens.begin(), correct_tokens.end(), 0.0) /
        static_cast<double>(correct_tokens.size());

    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double h = grid[g] * mu_hat;
      rewards.clear();
      for (const auto* r : records) {
        const double t = static_cast<double>(r->tokens);
        rewards.push_back(r->correct && t <= h ? h - t + 1.0 : 0.0);
      }
      const double n = static_cast<double>(rewards.size());
      const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
      double ss = 0.0;
      for (double r : rewards) ss += (r - mean) * (r - mean);
      const double var = n > 1.0 ? ss / (n - 1.0) : 0.0;
      variance_curve[g] = var;

      if (var > 0.0) {
        const double threshold = mean + std::sqrt(var) * sqrt_eps;
        std::size_t hits = 0;
        for (double r : rewards) {
          if (r >= threshold) ++hits;
        }
        anti_curve[g] = static_cast<double>(hits) / n;
      } else {
        anti_curve[g] = 0.0;  // degenerate reward distribution carries no signal
      }
    }

    const double peak = *std::max_element(variance_curve.begin(), variance_curve.end());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      result.normalized_variance[g] += peak > 0.0 ? variance_curve[g] / peak : 0.0;
      result.anti_concentration[g] += anti_curve[g];
    }
    ++result.n_problems_used;
  }

  if (result.n_problems_used == 0) {
    throw data_error("sweep_budget: no problem has at least " +
                     std::to_string(config.min_correct) + " correct traces");
  }
  const double weight = 1.0 / static_cast<double>(result.n_problems_used);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.normalized_variance[g] *= weight;
    result.anti_concentration[g] *= weight;
  }
  // Problems peak at slightly different grid points, so the averaged curve
  // tops out below 1; rescale to restore max = 1.
  const double top =
      *std::max_element(result.normalized_variance.begin(), result.normalized_variance.end());
  if (top > 0.0) {
    for (auto& v : result.normalized_variance) v /= top;
  }
  return result;
}

TraceDataset generate_synthetic(const GammaModel& model, int n_problems, int traces_per_problem,
                                std::optional<double> truncation, const oracle::RngSpec& rng) {
  if (n_problems < 1 || traces_per_problem < 1) {
    throw std::domain_error("generate_synthetic: counts must be >= 1");
  }
  if (truncation && !(*truncation > 0.0)) {
    throw std::domain_error("generate_synthetic: truncation must be positive");
  }
  oracle::SampleStream stream(rng);
  TraceDataset dataset;
  dataset.records.reserve(static_cast<std::size_t>(n_problems) *
                          static_cast<std::size_t>(traces_per_problem));
  char id[32];
  for (int p = 0; p < n_problems; ++p) {
    std::snprintf(id, sizeof(id), "p%04d", p);
    for (int t = 0; t < traces_per_problem; ++t) {
      const double time = stream.gamma(model.shape, model.rate);
      TraceRecord record;
      record.problem_id = id;
      if (truncation && time > *truncation) {
        record.correct = false;  // censored at the budget
        record.tokens = std::max<std::int64_t>(1, std::llround(*truncation));
      } else {
        record.correct = true;
        record.tokens = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(time)));
      }
      dataset.records.push_back(std::move(record));
    }
  }
  return dataset;
}

void write_csv(const SweepResult& result, std::ostream& out) {
  out << "xi,normalized_variance,anti_concentration,n_problems\n";
  char buffer[160];
  for (std::size_t g = 0; g < result.xi_grid.size(); ++g) {
    std::snprintf(buffer, sizeof(buffer), "%.10g,%.10g,%.10g,%zu\n", result.xi_grid[g],
                  result.normalized_variance[g], result.anti_concentration[g],
                  result.n_problems_used);
    out << buffer;
  }
}

void write_records(const TraceDataset& dataset, std::ostream& out) {
  for (const auto& record : dataset.records) {
    nlohmann::json row;
    row["problem_id"] = record.problem_id;
    row["tokens"] = record.tokens;
    row["correct"] = record.correct;
    out << row.dump() << '\n';
  }
}

}  // namespace relbudget::traces
