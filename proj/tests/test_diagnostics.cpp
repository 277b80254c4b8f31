#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "active_eval/core.hpp"
#include "active_eval/diagnostics.hpp"
#include "oracle.hpp"

using namespace active_eval;

TEST_SUITE("diagnostics") {
  TEST_CASE("constant sequences resample to themselves") {
    const std::vector<double> L{1.5, 1.5, 1.5};
    for (double r : bootstrap_risks(L, 50, 3)) CHECK(r == 1.5);
    const auto report = confidence_interval(L, BootstrapConfig{});
    CHECK(report.mse_estimate == 0.0);
    CHECK(report.ci_low == 0.0);
    CHECK(report.ci_high == 0.0);
    CHECK(report.sigma_hat == 0.0);
    CHECK(report.replicate_mean == 1.5);
  }

  TEST_CASE("two-point resampling frequencies") {
    const std::vector<double> L{0.0, 2.0};
    const auto reps = bootstrap_risks(L, 100000, 12);
    std::map<double, std::size_t> counts;
    for (double r : reps) ++counts[r];
    REQUIRE(counts.size() == 3);
    CHECK(std::abs(counts[0.0] / 1e5 - 0.25) <= 0.02);
    CHECK(std::abs(counts[1.0] / 1e5 - 0.5) <= 0.02);
    CHECK(std::abs(counts[2.0] / 1e5 - 0.25) <= 0.02);
    // Closed form: variance of the mean of two draws from {0, 2} is 0.5.
    CHECK(mse_estimate(reps) == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("bootstrap is deterministic for a seed and stream") {
    const std::vector<double> L{0.3, 1.2, 0.8, 2.2};
    CHECK(bootstrap_risks(L, 100, 5) == bootstrap_risks(L, 100, 5));
    CHECK(bootstrap_risks(L, 100, 5, 1) != bootstrap_risks(L, 100, 5, 0));
    BootstrapConfig c;
    c.B = 100;
    c.outer_B = 20;
    c.seed = 9;
    const auto a = confidence_interval(L, c);
    const auto b = confidence_interval(L, c);
    CHECK(a.mse_estimate == b.mse_estimate);
    CHECK(a.sigma_hat == b.sigma_hat);
  }

  TEST_CASE("mse_estimate") {
    const std::vector<double> same{4, 4, 4};
    const std::vector<double> two{0, 2};
    CHECK(mse_estimate(same) == 0.0);
    CHECK(mse_estimate(two) == 2.0);
    CHECK_THROWS_AS(mse_estimate(std::vector<double>{1.0}), StateError);
    CHECK_THROWS_AS(bootstrap_risks(std::vector<double>{}, 10, 0), StateError);
  }

  TEST_CASE("mse_estimate is shift invariant and scales quadratically") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> r(200);
    for (auto& x : r) x = n(gen);
    const double base = mse_estimate(r);
    auto shifted = r, scaled = r;
    for (auto& x : shifted) x += 7.25;
    for (auto& x : scaled) x *= 3.0;
    CHECK(mse_estimate(shifted) == doctest::Approx(base).epsilon(1e-12));
    CHECK(mse_estimate(scaled) == doctest::Approx(9.0 * base).epsilon(1e-12));
  }

  TEST_CASE("replicate mean converges to the sample mean") {
    std::mt19937_64 gen(6);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> L(50);
    for (auto& x : L) x = e(gen);
    const double mu = oracle::mean(L);
    double sd = 0;
    for (double x : L) sd += (x - mu) * (x - mu);
    sd = std::sqrt(sd / (L.size() - 1));
    const std::size_t B = 4000;
    const auto reps = bootstrap_risks(L, B, 1);
    CHECK(std::abs(oracle::mean(reps) - mu) <= 3.0 / std::sqrt(double(B)) * sd);
  }

  TEST_CASE("two-point interval covers the closed form") {
    const std::vector<double> L{0.0, 2.0};
    std::size_t covered = 0;
    const std::size_t trials = 1000;
    for (std::size_t t = 0; t < trials; ++t) {
      BootstrapConfig c;
      c.seed = t;
      const auto r = confidence_interval(L, c);
      CHECK(r.ci_low <= r.mse_estimate);
      CHECK(r.mse_estimate <= r.ci_high);
      covered += r.ci_low <= 0.5 && 0.5 <= r.ci_high;
    }
    CHECK(static_cast<double>(covered) / trials >= 0.9);
  }

  TEST_CASE("shorter prefixes do not give tighter intervals") {
    std::mt19937_64 gen(10);
    std::gamma_distribution<double> g(2.0, 0.5);
    std::vector<double> full_sigma, half_sigma;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> L(200);
      for (auto& x : L) x = g(gen);
      BootstrapConfig c;
      c.B = 200;
      c.outer_B = 50;
      c.seed = static_cast<std::uint64_t>(t);
      full_sigma.push_back(confidence_interval(L, c).sigma_hat);
      const std::vector<double> half(L.begin(), L.begin() + 100);
      half_sigma.push_back(confidence_interval(half, c).sigma_hat);
    }
    CHECK(oracle::median(half_sigma) >= oracle::median(full_sigma));
  }

  TEST_CASE("config checks") {
    BootstrapConfig c;
    c.B = 1;
    CHECK_THROWS_AS(c.check(), ConfigError);
    c.B = 10;
    c.outer_B = 1;
    CHECK_THROWS_AS(c.check(), ConfigError);
    c.outer_B = 10;
    c.ci_multiplier = -1;
    CHECK_THROWS_AS(c.check(), ConfigError);
  }

  TEST_CASE("empirical_mse") {
    const std::vector<double> exact{2, 2, 2};
    const std::vector<double> pair{1, 3};
    const std::vector<double> one{5};
    CHECK(empirical_mse(exact, 2) == 0.0);
    CHECK(empirical_mse(pair, 2) == 1.0);
    CHECK(empirical_mse(one, 2) == 9.0);
    CHECK_THROWS_AS(empirical_mse(std::vector<double>{}, 2), StateError);
  }

  TEST_CASE("coverage_probability") {
    std::vector<BootstrapReport> open(4);
    for (auto& r : open) r.ci_high = INFINITY;
    const std::vector<double> truths{0.1, 1.0, 5.0, 100.0};
    CHECK(coverage_probability(open, truths) == 1.0);
    std::vector<BootstrapReport> closed(4);
    CHECK(coverage_probability(closed, truths) == 0.0);
    CHECK_THROWS_AS(coverage_probability(closed, std::vector<double>{1.0}), ShapeError);
  }

  TEST_CASE("coverage grows with the interval multiplier") {
    std::mt19937_64 gen(13);
    std::lognormal_distribution<double> ln(0.0, 1.0);
    std::vector<std::vector<double>> Ls(40, std::vector<double>(30));
    std::vector<double> truths;
    for (auto& L : Ls) {
      for (auto& x : L) x = ln(gen);
      truths.push_back(0.15);
    }
    double previous = 0.0;
    for (double mult : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      std::vector<BootstrapReport> reports;
      for (std::size_t i = 0; i < Ls.size(); ++i) {
        BootstrapConfig c;
        c.B = 100;
        c.outer_B = 20;
        c.ci_multiplier = mult;
        c.seed = i;
        reports.push_back(confidence_interval(Ls[i], c));
      }
      const double cov = coverage_probability(reports, truths);
      CHECK(cov >= previous);
      previous = cov;
    }
  }

  TEST_CASE("pearson_correlation") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> neg{-1, -2, -3};
    const std::vector<double> y{2, 1, 3};
    CHECK(pearson_correlation(x, x) == doctest::Approx(1.0));
    CHECK(pearson_correlation(x, neg) == doctest::Approx(-1.0));
    CHECK(pearson_correlation(x, y) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pearson_correlation(x, y) == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-15));
    const std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_AS(pearson_correlation(x, flat), DomainError);
    CHECK_THROWS_AS(pearson_correlation(x, std::vector<double>{1, 2}), ShapeError);
  }
}
