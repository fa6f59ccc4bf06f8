#include "relbudget/traces.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>

#include "relbudget/errors.hpp"
#include "relbudget/regimes.hpp"
#include "relbudget/specfun.hpp"

using namespace relbudget;
using traces::FitMethod;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_traces parses line-delimited records") {
  SUBCASE("empty file") {
    const auto path = write_temp("relbudget_empty.jsonl", "");
    const auto dataset = traces::load_traces(path);
    CHECK(dataset.records.empty());
    CHECK(dataset.skipped_lines == 0);
  }
  SUBCASE("single record") {
    const auto path = write_temp("relbudget_one.jsonl",
                                 R"({"problem_id":"a","tokens":120,"correct":true})"
                                 "\n");
    const auto dataset = traces::load_traces(path);
    REQUIRE(dataset.records.size() == 1);
    CHECK(dataset.records[0].problem_id == "a");
    CHECK(dataset.records[0].tokens == 120);
    CHECK(dataset.records[0].correct);
  }
  SUBCASE("zero tokens violates the invariant and is skipped") {
    const auto path = write_temp("relbudget_zero.jsonl",
                                 R"({"problem_id":"a","tokens":0,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":5,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":6,"correct":false})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":7,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":8,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":9,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":10,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":11,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":12,"correct":true})"
                                 "\n"
                                 R"({"problem_id":"a","tokens":13,"correct":true})"
                                 "\n");
    const auto dataset = traces::load_traces(path);
    CHECK(dataset.records.size() == 9);
    CHECK(dataset.skipped_lines == 1);
  }
  SUBCASE("unknown fields are ignored") {
    const auto path = write_temp(
        "relbudget_extra.jsonl",
        R"({"problem_id":"a","tokens":120,"correct":true,"model":"x","temp":0.7})"
        "\n");
    CHECK(traces::load_traces(path).records.size() == 1);
  }
  SUBCASE("too many malformed lines raise a data error") {
    const auto path = write_temp("relbudget_bad.jsonl",
                                 "not json\n"
                                 R"({"problem_id":"a","tokens":5,"correct":true})"
                                 "\n");
    CHECK_THROWS_AS(traces::load_traces(path), data_error);
  }
  SUBCASE("missing file raises an I/O error") {
    CHECK_THROWS_AS(traces::load_traces("/nonexistent/file.jsonl"), std::ios_base::failure);
  }
}

TEST_CASE("fit_gamma method of moments") {
  const std::vector<double> samples{100.0, 200.0, 300.0};  // mean 200, variance 10000
  const auto fit = traces::fit_gamma(samples, FitMethod::MethodOfMoments);
  CHECK(fit.shape == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fit.rate == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(fit.method == FitMethod::MethodOfMoments);
  CHECK(!fit.fell_back_to_moments);
}

TEST_CASE("fit_gamma rejects degenerate input") {
  CHECK_THROWS_AS(traces::fit_gamma(std::vector<double>{5.0}, FitMethod::MethodOfMoments),
                  data_error);
  CHECK_THROWS_AS(
      traces::fit_gamma(std::vector<double>{5.0, 5.0, 5.0}, FitMethod::MethodOfMoments),
      data_error);
  CHECK_THROWS_AS(
      traces::fit_gamma(std::vector<double>{1.0, -2.0}, FitMethod::MethodOfMoments),
      std::domain_error);
}

TEST_CASE("fit_gamma MLE recovers synthetic parameters") {
  const auto draws = oracle::sample_gamma(GammaModel(3.0, 0.01), {777, 0}, 100000);
  const auto fit = traces::fit_gamma(draws, FitMethod::MaxLikelihood);
  CHECK(fit.method == FitMethod::MaxLikelihood);
  CHECK(!fit.fell_back_to_moments);
  CHECK(std::fabs(fit.shape - 3.0) < 0.1);
  CHECK(std::fabs(fit.rate - 0.01) < 0.0005);
}

TEST_CASE("fit_gamma MoM is scale-equivariant") {
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> unit(1.0, 50.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> samples(20);
    for (auto& s : samples) s = unit(rng);
    const auto base = traces::fit_gamma(samples, FitMethod::MethodOfMoments);

    // Power-of-two scaling is exact in floating point.
    std::vector<double> doubled(samples);
    for (auto& s : doubled) s *= 4.0;
    const auto scaled = traces::fit_gamma(doubled, FitMethod::MethodOfMoments);
    CHECK(scaled.shape == base.shape);
    CHECK(scaled.rate == base.rate / 4.0);

    std::vector<double> odd(samples);
    for (auto& s : odd) s *= 3.7;
    const auto odd_fit = traces::fit_gamma(odd, FitMethod::MethodOfMoments);
    CHECK(odd_fit.shape == doctest::Approx(base.shape).epsilon(1e-12));
    CHECK(odd_fit.rate == doctest::Approx(base.rate / 3.7).epsilon(1e-12));
  }
}

TEST_CASE("problem_stats groups and fits per problem") {
  traces::TraceDataset dataset;
  dataset.records = {
      {"b", 100, true}, {"b", 200, true}, {"b", 300, true}, {"b", 50, false},
      {"a", 10, true},  {"a", 999, false},
  };
  const auto stats = traces::problem_stats(dataset, FitMethod::MethodOfMoments);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].problem_id == "a");  // sorted by id
  CHECK(stats[0].n_traces == 2);
  CHECK(stats[0].n_correct == 1);
  CHECK(!stats[0].fit.has_value());
  CHECK(stats[1].problem_id == "b");
  CHECK(stats[1].n_traces == 4);
  CHECK(stats[1].n_correct == 3);
  CHECK(stats[1].mean_tokens == doctest::Approx(200.0));
  REQUIRE(stats[1].fit.has_value());
  CHECK(stats[1].fit->shape == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("generate_synthetic") {
  SUBCASE("no truncation marks everything correct") {
    const auto dataset =
        traces::generate_synthetic(GammaModel(2.0, 0.01), 3, 50, std::nullopt, {1, 0});
    CHECK(dataset.records.size() == 150);
    for (const auto& r : dataset.records) {
      CHECK(r.correct);
      CHECK(r.tokens >= 1);
    }
  }
  SUBCASE("truncation at the mean censors with probability 1 - gamma(K, K)") {
    const GammaModel model(2.0, 0.01);
    const auto dataset =
        traces::generate_synthetic(model, 20, 500, model.mean(), {2, 0});
    std::size_t correct = 0;
    for (const auto& r : dataset.records) {
      if (r.correct) {
        ++correct;
      } else {
        CHECK(r.tokens == 200);  // censored at the budget
      }
    }
    const double n = static_cast<double>(dataset.records.size());
    const double q = specfun::reg_lower_gamma(2.0, 2.0);
    const double se = std::sqrt(q * (1.0 - q) / n);
    CHECK(std::fabs(static_cast<double>(correct) / n - q) <= 3.0 * se);
  }
  SUBCASE("deterministic under a fixed spec") {
    const auto a = traces::generate_synthetic(GammaModel(1.5, 0.02), 2, 20, 60.0, {3, 9});
    const auto b = traces::generate_synthetic(GammaModel(1.5, 0.02), 2, 20, 60.0, {3, 9});
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].problem_id == b.records[i].problem_id);
      CHECK(a.records[i].tokens == b.records[i].tokens);
      CHECK(a.records[i].correct == b.records[i].correct);
    }
  }
}

TEST_CASE("sweep_budget shapes and bounds") {
  const auto dataset =
      traces::generate_synthetic(GammaModel(2.0, 0.01), 10, 100, 500.0, {5, 0});
  const auto result = traces::sweep_budget(dataset, {});
  CHECK(result.xi_grid.size() == 40);
  CHECK(result.normalized_variance.size() == result.xi_grid.size());
  CHECK(result.anti_concentration.size() == result.xi_grid.size());
  CHECK(result.n_problems_used == 10);
  double top = 0.0;
  for (std::size_t g = 0; g < result.xi_grid.size(); ++g) {
    CHECK(result.normalized_variance[g] >= 0.0);
    CHECK(result.normalized_variance[g] <= 1.0 + 1e-12);
    CHECK(result.anti_concentration[g] >= 0.0);
    CHECK(result.anti_concentration[g] <= 1.0);
    top = std::max(top, result.normalized_variance[g]);
  }
  CHECK(top == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sweep_budget errors") {
  SUBCASE("nothing passes min_correct") {
    traces::TraceDataset dataset;
    for (int i = 0; i < 20; ++i) dataset.records.push_back({"a", 100 + i, false});
    CHECK_THROWS_AS(traces::sweep_budget(dataset, {}), data_error);
  }
  SUBCASE("min_correct above every problem") {
    const auto dataset =
        traces::generate_synthetic(GammaModel(2.0, 0.01), 3, 10, std::nullopt, {6, 0});
    traces::SweepConfig config;
    config.min_correct = 100;
    CHECK_THROWS_AS(traces::sweep_budget(dataset, config), data_error);
  }
}

TEST_CASE("sweep curves show the phase-transition shape") {
  const auto dataset =
      traces::generate_synthetic(GammaModel(2.0, 0.01), 20, 200, std::nullopt, {7, 0});
  const auto result = traces::sweep_budget(dataset, {});

  // Deficient side: both curves negligible at xi = 0.2 (grid index 1).
  CHECK(result.xi_grid[1] == doctest::Approx(0.2));
  CHECK(result.normalized_variance[1] < 0.05);
  CHECK(result.anti_concentration[1] < 0.1);

  // Ample side: the variance has saturated near its plateau and the
  // anti-concentration is stable (xi = 3 against xi = 4, grid indices 29/39).
  CHECK(result.normalized_variance[29] > 0.8);
  CHECK(std::fabs(result.anti_concentration[29] / result.anti_concentration[39] - 1.0) < 0.1);

  // The anti-concentration transition happens around xi ~ 1: below its
  // saturated level at 0.5, peaked slightly above it near 1.5.
  const double saturated = result.anti_concentration[39];
  CHECK(result.anti_concentration[4] < 0.7 * saturated);   // xi = 0.5
  CHECK(result.anti_concentration[14] > 0.9 * saturated);  // xi = 1.5
}

TEST_CASE("empirical bilevel variance matches the closed form on uncensored data") {
  const GammaModel model(2.0, 0.01);
  const auto dataset = traces::generate_synthetic(model, 1, 20000, std::nullopt, {8, 0});
  for (double xi : traces::default_xi_grid()) {
    const Budget h(xi * model.mean());
    double mean = 0.0;
    std::vector<double> rewards;
    rewards.reserve(dataset.records.size());
    for (const auto& r : dataset.records) {
      const double t = static_cast<double>(r.tokens);
      rewards.push_back(t <= h.tokens ? h.tokens - t + 1.0 : 0.0);
      mean += rewards.back();
    }
    mean /= static_cast<double>(rewards.size());
    double m2 = 0.0, m4 = 0.0;
    for (double r : rewards) {
      const double d = (r - mean) * (r - mean);
      m2 += d;
      m4 += d * d;
    }
    const double n = static_cast<double>(rewards.size());
    const double var = m2 / (n - 1.0);
    const double se = std::sqrt(std::max(0.0, m4 / n - (m2 / n) * (m2 / n)) / n);
    const auto closed = bilevel_reward_stats(truncated_gamma_moments(model, h), h);
    CHECK(std::fabs(var - closed.variance) <= 3.0 * se + 2.0);  // +2 covers token rounding
  }
}

TEST_CASE("sweep output is deterministic byte for byte") {
  const auto dataset =
      traces::generate_synthetic(GammaModel(1.5, 0.02), 5, 60, 120.0, {9, 0});
  std::ostringstream a, b;
  traces::write_csv(traces::sweep_budget(dataset, {}), a);
  traces::write_csv(traces::sweep_budget(dataset, {}), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("xi,normalized_variance,anti_concentration,n_problems\n", 0) == 0);
}

TEST_CASE("record writer and loader round-trip") {
  const auto dataset =
      traces::generate_synthetic(GammaModel(2.0, 0.05), 2, 5, std::nullopt, {10, 0});
  const auto path = std::filesystem::temp_directory_path() / "relbudget_roundtrip.jsonl";
  {
    std::ofstream out(path);
    traces::write_records(dataset, out);
  }
  const auto loaded = traces::load_traces(path);
  REQUIRE(loaded.records.size() == dataset.records.size());
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    CHECK(loaded.records[i].problem_id == dataset.records[i].problem_id);
    CHECK(loaded.records[i].tokens == dataset.records[i].tokens);
    CHECK(loaded.records[i].correct == dataset.records[i].correct);
  }
}
