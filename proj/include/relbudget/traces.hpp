#pragma once

// Empirical trace pipeline: ingest rollout token counts from line-delimited
// records, fit per-problem gamma difficulty models, sweep the budget to
// produce normalized-variance and anti-concentration curves, and generate
// synthetic datasets for desk-scale validation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "relbudget/oracle.hpp"
#include "relbudget/reward.hpp"

namespace relbudget::traces {

/// One rollout: token count to the first correct solution for correct traces,
/// total generated length otherwise.
struct TraceRecord {
  std::string problem_id;
  std::int64_t tokens = 0;  // >= 1
  bool correct = false;
};

struct TraceDataset {
  std::vector<TraceRecord> records;
  std::size_t skipped_lines = 0;  // malformed or invariant-violating lines
};

/// Parse a line-delimited dataset (one JSON record per line, UTF-8; unknown
/// fields ignored). Invalid lines are skipped and counted; more than 10%
/// skipped raises data_error, an unreadable path raises std::ios_base::failure.
TraceDataset load_traces(const std::filesystem::path& path);

enum class FitMethod { MethodOfMoments, MaxLikelihood };

struct GammaFit {
  double shape = 0.0;  // k-hat
  double rate = 0.0;   // p-hat
  FitMethod method = FitMethod::MethodOfMoments;
  bool fell_back_to_moments = false;  // MLE did not converge
};

/// Fit Gamma(k, p) to positive samples. MoM: k = mean^2/var, p = mean/var
/// (unbiased sample variance). MLE: Newton on log(k) - digamma(k) = s with
/// s = log(mean) - mean(log), falling back to MoM on non-convergence.
/// Requires >= 2 samples with positive variance; degenerate input throws
/// data_error.
GammaFit fit_gamma(std::span<const double> samples, FitMethod method);

/// Per-problem summary; the fit fields are populated only when the problem
/// has >= 2 correct traces with positive token variance.
struct ProblemStats {
  std::string problem_id;
  std::size_t n_traces = 0;
  std::size_t n_correct = 0;
  double mean_tokens = 0.0;  // mu-hat over correct traces (needs n_correct >= 2)
  double var_tokens = 0.0;
  std::optional<GammaFit> fit;
};

std::vector<ProblemStats> problem_stats(const TraceDataset& dataset, FitMethod method);

struct SweepConfig {
  std::vector<double> xi_grid;  // defaults to 0.1..4.0 in 40 steps when empty
  double eps = 0.5;
  std::size_t min_correct = 5;
};

std::vector<double> default_xi_grid();

struct SweepResult {
  std::vector<double> xi_grid;
  std::vector<double> normalized_variance;   // in [0,1], max 1 when any variance > 0
  std::vector<double> anti_concentration;    // in [0,1]
  double eps = 0.5;
  std::size_t n_problems_used = 0;
};

/// Budget sweep: per problem x with mu-hat estimated from
/// correct traces, set H = xi * mu-hat at each grid point, score every trace
/// with the bi-level reward (failures and over-budget correct traces score 0),
/// normalize each problem's variance curve by its own maximum, average across
/// problems with equal weight, and rescale the averaged curve so its maximum
/// is 1. Anti-concentration is the fraction of traces with
/// R >= mean + std sqrt(eps) using the empirical per-problem mean/std; a zero
/// empirical std maps to 0 (no signal).
SweepResult sweep_budget(const TraceDataset& dataset, const SweepConfig& config = {});

/// Gamma-model stand-in for rollout logs: every trace draws T from the model;
/// with a truncation budget, traces beyond it are censored at the budget and
/// marked incorrect.
TraceDataset generate_synthetic(const GammaModel& model, int n_problems, int traces_per_problem,
                                std::optional<double> truncation, const oracle::RngSpec& rng);

/// CSV with header xi,normalized_variance,anti_concentration,n_problems;
/// floats at 10 significant digits.
void write_csv(const SweepResult& result, std::ostream& out);

/// One JSON record per line, the same format load_traces reads.
void write_records(const TraceDataset& dataset, std::ostream& out);

}  // namespace relbudget::traces
