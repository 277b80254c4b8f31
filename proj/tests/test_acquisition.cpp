#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "active_eval/acquisition.hpp"
#include "active_eval/estimators.hpp"
#include "active_eval/rng.hpp"
#include "oracle.hpp"

using namespace active_eval;

namespace {

ScoreVector make_scores(std::vector<double> s) {
  ScoreVector v;
  v.indices = all_indices(s.size());
  v.scores = std::move(s);
  return v;
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("id" + std::to_string(i));
  return out;
}

double total(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0); }

}  // namespace

TEST_SUITE("acquisition") {
  TEST_CASE("expected-loss scores are the cross entropy") {
    const auto pi = validate_table({{0.5, 0.5}, {0.9, 0.1}, {1.0, 0.0}});
    const auto f = validate_table({{0.5, 0.5}, {0.6, 0.4}, {0.6, 0.4}});
    const auto s = expected_loss_scores(pi, f, LossSpec{}, all_indices(3));
    CHECK(s.scores[0] == doctest::Approx(std::log(2.0)));
    CHECK(s.scores[1] == doctest::Approx(oracle::cross_entropy({0.9, 0.1}, {0.6, 0.4})).epsilon(1e-14));
    CHECK(s.scores[1] == doctest::Approx(0.5514).epsilon(1e-4));
    CHECK(s.scores[2] == doctest::Approx(-std::log(0.6)).epsilon(1e-14));
    CHECK(s.scores[2] == doctest::Approx(0.5108).epsilon(1e-4));
  }

  TEST_CASE("expected-loss scores for other losses average over the surrogate") {
    const auto pi = validate_table({{0.3, 0.7}});
    const auto f = validate_table({{0.6, 0.4}});
    const auto zo = expected_loss_scores(pi, f, LossSpec{LossKind::zero_one}, all_indices(1));
    CHECK(zo.scores[0] == doctest::Approx(0.7));
  }

  TEST_CASE("expected-loss scores reject shape mismatch") {
    const auto a = validate_table({{0.5, 0.5}});
    const auto b = validate_table({{0.5, 0.5}, {0.5, 0.5}});
    CHECK_THROWS_AS(expected_loss_scores(a, b, LossSpec{}, all_indices(1)), ShapeError);
  }

  TEST_CASE("entropy scores") {
    const auto pi = validate_table({{0.25, 0.25, 0.25, 0.25}, {0.0, 1.0, 0.0, 0.0}});
    const auto s = entropy_scores(pi, all_indices(2));
    CHECK(s.scores[0] == doctest::Approx(std::log(4.0)));
    CHECK(s.scores[1] == doctest::Approx(0.0));
    const auto two = validate_table({{0.9, 0.1}});
    CHECK(entropy_scores(two, all_indices(1)).scores[0] ==
          doctest::Approx(oracle::entropy({0.9, 0.1})).epsilon(1e-14));
    CHECK(entropy_scores(two, all_indices(1)).scores[0] == doctest::Approx(0.3251).epsilon(1e-4));
  }

  TEST_CASE("nll scores need labels") {
    const auto pi = validate_table({{0.5, 0.5}, {0.8, 0.2}, {0.0, 1.0}});
    Pool labelled(ids(3), {std::size_t{1}, std::size_t{1}, std::size_t{1}});
    const auto s = nll_scores(pi, labelled, LossSpec{}, all_indices(3));
    CHECK(s.scores[0] == doctest::Approx(std::log(2.0)));
    CHECK(s.scores[1] == doctest::Approx(oracle::neg_log(0.2)).epsilon(1e-14));
    CHECK(s.scores[2] == 0.0);
    Pool partial(ids(3), {std::size_t{1}, std::nullopt, std::size_t{1}});
    CHECK_THROWS_AS(nll_scores(pi, partial, LossSpec{}, all_indices(3)), StateError);
  }

  TEST_CASE("build_proposal examples") {
    const auto q = build_proposal(make_scores({0, 1, 1, 2}), 0.1);
    CHECK(q.floor_value == doctest::Approx(0.025));
    const std::vector<double> expect{0.025, 0.24375, 0.24375, 0.4875};
    for (std::size_t i = 0; i < 4; ++i) CHECK(q.probs[i] == doctest::Approx(expect[i]).epsilon(1e-15));

    const auto sym = build_proposal(make_scores({5, 5}), 0.7);
    CHECK(sym.probs == std::vector<double>{0.5, 0.5});

    const auto zero = build_proposal(make_scores({0, 0, 0}), 0.1);
    for (double p : zero.probs) CHECK(p == doctest::Approx(1.0 / 3));
  }

  TEST_CASE("build_proposal matches the water-filling reference") {
    std::mt19937_64 gen(5);
    std::lognormal_distribution<double> ln(0.0, 2.5);
    std::uniform_real_distribution<double> a(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      std::vector<double> s(1 + t % 40);
      for (auto& x : s) x = ln(gen);
      const double alpha = a(gen);
      const auto q = build_proposal(make_scores(s), alpha);
      const auto ref = oracle::clipped_proposal(s, alpha);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(q.probs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("build_proposal with alpha 1 is uniform") {
    const auto q = build_proposal(make_scores({1, 100, 0.01, 3}), 1.0);
    for (double p : q.probs) CHECK(p == 0.25);
  }

  TEST_CASE("build_proposal with alpha 0 is proportional") {
    const auto q = build_proposal(make_scores({1, 3}), 0.0);
    CHECK(q.probs[0] == doctest::Approx(0.25));
    CHECK(q.probs[1] == doctest::Approx(0.75));
  }

  TEST_CASE("build_proposal rejects invalid scores") {
    CHECK_THROWS_AS(build_proposal(make_scores({1, -1}), 0.1), DomainError);
    CHECK_THROWS_AS(build_proposal(make_scores({1, std::nan("")}), 0.1), DomainError);
    CHECK_THROWS_AS(build_proposal(make_scores({1, INFINITY}), 0.1), DomainError);
    CHECK_THROWS_AS(build_proposal(make_scores({1, 2}), 1.5), DomainError);
  }

  TEST_CASE("proposal is invariant to score scale") {
    std::mt19937_64 gen(9);
    std::lognormal_distribution<double> ln(0.0, 1.5);
    std::uniform_real_distribution<double> u(1e-3, 1e3);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> s(10);
      for (auto& x : s) x = ln(gen);
      const auto base = build_proposal(make_scores(s), 0.1);
      // Powers of two scale exactly, so the proposal is bit-identical.
      for (double c : {0.125, 2.0, 1024.0}) {
        std::vector<double> scaled(s);
        for (auto& x : scaled) x *= c;
        CHECK(build_proposal(make_scores(scaled), 0.1).probs == base.probs);
      }
      const double c = u(gen);
      std::vector<double> scaled(s);
      for (auto& x : scaled) x *= c;
      const auto other = build_proposal(make_scores(scaled), 0.1);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(other.probs[i] == doctest::Approx(base.probs[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("sample_index") {
    ProposalDistribution one{{7}, {1.0}, 0.1};
    Rng rng(1);
    const auto [i, q] = sample_index(one, rng);
    CHECK(i == 7);
    CHECK(q == 1.0);

    ProposalDistribution half{{0, 1}, {0.5, 0.5}, 0.05};
    std::size_t zeros = 0;
    const std::size_t draws = 100000;
    for (std::size_t t = 0; t < draws; ++t) zeros += sample_index(half, rng).first == 0;
    CHECK(static_cast<double>(zeros) / draws == doctest::Approx(0.5).epsilon(0.02));

    Rng a(42), b(42);
    for (int t = 0; t < 100; ++t) CHECK(sample_index(half, a) == sample_index(half, b));
  }

  TEST_CASE("uniform acquisition over the whole pool") {
    const std::size_t N = 12;
    std::vector<std::vector<double>> rows(N, {0.3, 0.7});
    const auto table = validate_table(rows);
    std::vector<std::size_t> labels(N);
    for (std::size_t i = 0; i < N; ++i) labels[i] = i % 2;
    LabelOracle oracle(labels, 2);
    AcquisitionConfig config{N, 0.1, AcquisitionKind::uniform, 3};
    const auto log = run_acquisition(Pool(ids(N)), table, &table, oracle, LossSpec{}, config);
    REQUIRE(log.size() == N);
    std::set<std::size_t> seen;
    for (const auto& r : log.records) {
      seen.insert(r.pool_index);
      CHECK(r.v == 1.0);
      CHECK(r.loss.has_value());
    }
    CHECK(seen.size() == N);
    CHECK(oracle.reveal_count() == N);
  }

  TEST_CASE("acquisition never repeats an index and records valid masses") {
    std::mt19937_64 gen(2);
    std::gamma_distribution<double> g(0.4);
    const std::size_t N = 60;
    std::vector<std::vector<double>> rows(N, std::vector<double>(3));
    for (auto& r : rows) {
      double s = 0;
      for (auto& x : r) s += (x = g(gen) + 1e-9);
      for (auto& x : r) x /= s;
    }
    const auto table = validate_table(rows);
    LabelOracle oracle(std::vector<std::size_t>(N, 0), 3);
    AcquisitionConfig config{40, 0.1, AcquisitionKind::entropy, 17};
    const auto log = run_acquisition(Pool(ids(N)), table, nullptr, oracle, LossSpec{}, config);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < log.size(); ++k) {
      const auto& r = log.records[k];
      CHECK(r.step == k + 1);
      CHECK(seen.insert(r.pool_index).second);
      CHECK(r.q > 0.0);
      CHECK(r.q <= 1.0);
      CHECK(r.q >= 0.1 / static_cast<double>(N - k) * (1 - 1e-12));
      CHECK_FALSE(r.loss.has_value());
      CHECK(r.v == doctest::Approx(oracle::lure_weight(k + 1.0, N, 40, r.q)).epsilon(1e-14));
    }
  }

  TEST_CASE("acquisition is deterministic for a seed") {
    const auto table = validate_table({{0.9, 0.1}, {0.5, 0.5}, {0.7, 0.3}, {0.99, 0.01}, {0.6, 0.4}});
    auto run = [&](std::uint64_t seed) {
      LabelOracle oracle({0, 1, 0, 0, 1}, 2);
      AcquisitionConfig config{4, 0.1, AcquisitionKind::expected_loss, seed};
      return run_acquisition(Pool(ids(5)), table, &table, oracle, LossSpec{}, config).records;
    };
    CHECK(run(5) == run(5));
  }

  TEST_CASE("high-entropy row is drawn at the clipped rate") {
    const std::size_t N = 10;
    std::vector<std::vector<double>> rows(N, {1.0, 0.0});
    rows[4] = {0.5, 0.5};
    const auto table = validate_table(rows);
    const double alpha = 0.1;
    const double expected = 1.0 - alpha * static_cast<double>(N - 1) / N;
    std::size_t hits = 0;
    const std::size_t runs = 10000;
    for (std::size_t s = 0; s < runs; ++s) {
      LabelOracle oracle(std::vector<std::size_t>(N, 0), 2);
      AcquisitionConfig config{1, alpha, AcquisitionKind::entropy, s};
      hits += run_acquisition(Pool(ids(N)), table, nullptr, oracle, LossSpec{}, config).records[0].pool_index == 4;
    }
    CHECK(std::abs(static_cast<double>(hits) / runs - expected) <= 0.02);
  }

  TEST_CASE("acquisition preconditions") {
    const auto table = validate_table({{0.5, 0.5}, {0.4, 0.6}});
    LabelOracle oracle({0, 1}, 2);
    AcquisitionConfig ce{1, 0.1, AcquisitionKind::expected_loss, 0};
    CHECK_THROWS_AS(run_acquisition(Pool(ids(2)), table, nullptr, oracle, LossSpec{}, ce), ConfigError);
    AcquisitionConfig nll{1, 0.1, AcquisitionKind::nll, 0};
    CHECK_THROWS_AS(run_acquisition(Pool(ids(2)), table, nullptr, oracle, LossSpec{}, nll), StateError);
    AcquisitionConfig big{3, 0.1, AcquisitionKind::uniform, 0};
    CHECK_THROWS_AS(run_acquisition(Pool(ids(2)), table, nullptr, oracle, LossSpec{}, big), ConfigError);
  }

  TEST_CASE("nll acquisition on a one-hot agreeing surrogate falls back to uniform") {
    const std::size_t N = 6;
    std::vector<std::vector<double>> rows;
    std::vector<std::optional<std::size_t>> labels;
    for (std::size_t i = 0; i < N; ++i) {
      rows.push_back(i % 2 ? std::vector<double>{0, 1} : std::vector<double>{1, 0});
      labels.emplace_back(i % 2);
    }
    const auto table = validate_table(rows);
    Pool pool(ids(N), labels);
    auto oracle = LabelOracle::from_pool(pool, 2);
    AcquisitionConfig config{N, 0.1, AcquisitionKind::nll, 4};
    const auto log = run_acquisition(pool, table, nullptr, oracle, LossSpec{}, config);
    for (std::size_t k = 0; k < N; ++k) {
      CHECK(log.records[k].score == 0.0);
      CHECK(log.records[k].q == doctest::Approx(1.0 / static_cast<double>(N - k)));
    }
  }

  TEST_CASE("attach_losses fills losses from sparse predictions") {
    const auto table = validate_table({{0.5, 0.5}, {0.4, 0.6}, {0.9, 0.1}});
    LabelOracle oracle({0, 1, 0}, 3);
    AcquisitionConfig config{2, 0.1, AcquisitionKind::entropy, 1};
    auto log = run_acquisition(Pool(ids(3)), table, nullptr, oracle, LossSpec{}, config);
    SparsePredictions sparse;
    for (const auto& r : log.records) sparse[r.pool_index] = {0.25, 0.75, 0.0};
    attach_losses(log, sparse, oracle, LossSpec{});
    for (const auto& r : log.records) {
      const double expect = oracle.peek(r.pool_index) == 1 ? oracle::neg_log(0.75) : oracle::neg_log(0.25);
      CHECK(*r.loss == doctest::Approx(expect));
    }
    sparse.erase(log.records[0].pool_index);
    CHECK_THROWS_AS(attach_losses(log, sparse, oracle, LossSpec{}), StateError);
  }

  TEST_CASE("filter_pool_by_nll") {
    // NLLs of the labelled class: 0.1, 3.5, 6.0
    const auto model = validate_table({{std::exp(-0.1), 1 - std::exp(-0.1)},
                                       {1 - std::exp(-3.5), std::exp(-3.5)},
                                       {std::exp(-6.0), 1 - std::exp(-6.0)}});
    Pool pool(ids(3), {std::size_t{0}, std::size_t{1}, std::size_t{0}});
    CHECK(filter_pool_by_nll(pool, model, 5.0).ids() == std::vector<std::string>{"id0", "id1"});
    CHECK(filter_pool_by_nll(pool, model, INFINITY).ids() == pool.ids());
    CHECK(filter_pool_by_nll(pool, model, 0.0).empty());
    Pool partial(ids(3), {std::size_t{0}, std::nullopt, std::size_t{0}});
    CHECK_THROWS_AS(filter_pool_by_nll(partial, model, 5.0), StateError);
  }
}
