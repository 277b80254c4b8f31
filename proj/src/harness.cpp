#include "active_eval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "active_eval/acquisition.hpp"
#include "active_eval/rng.hpp"

namespace active_eval {

void SyntheticConfig::check() const {
  if (N < 1) throw ConfigError("synthetic pool needs N >= 1");
  if (C < 2) throw ConfigError("synthetic problem needs C >= 2");
  if (!(target_temperature > 0.0) || !std::isfinite(target_temperature)) {
    throw ConfigError("target_temperature must be positive");
  }
  if (!(surrogate_noise >= 0.0 && surrogate_noise <= 1.0)) {
    throw ConfigError("surrogate_noise must lie in [0, 1]");
  }
  if (!(label_flip_rate >= 0.0 && label_flip_rate < 1.0)) {
    throw ConfigError("label_flip_rate must lie in [0, 1)");
  }
  if (concentration.size() != 1 && concentration.size() != C) {
    throw ConfigError("concentration needs 1 or C entries");
  }
  for (double a : concentration) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("concentration entries must be positive");
  }
}

namespace {

struct SplitDraw {
  std::vector<double> target;
  std::vector<double> surrogate;
  std::vector<std::size_t> labels;
};

SplitDraw draw_split(const SyntheticConfig& config, std::size_t rows, Rng& rng) {
  const std::size_t C = config.C;
  SplitDraw out;
  out.target.resize(rows * C);
  out.surrogate.resize(rows * C);
  out.labels.resize(rows);

  std::vector<double> log_p(C), p(C), f(C), noise(C);
  for (std::size_t r = 0; r < rows; ++r) {
    // Dirichlet via Gamma(a) = Gamma(a + 1) * U^(1/a), in log space so
    // tiny concentrations do not underflow to an all-zero row.
    for (std::size_t c = 0; c < C; ++c) {
      const double a = config.concentration.size() == 1 ? config.concentration[0]
                                                         : config.concentration[c];
      std::gamma_distribution<double> gamma(a + 1.0, 1.0);
      const double g = gamma(rng.engine());
      const double u = 1.0 - rng.uniform01();  // (0, 1]
      log_p[c] = std::log(g) + std::log(u) / a;
    }
    const double top = *std::max_element(log_p.begin(), log_p.end());
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) total += (p[c] = std::exp(log_p[c] - top));
    for (auto& x : p) x /= total;

    // Label from the true distribution, optionally flipped to another class.
    const double u = rng.uniform01();
    std::size_t label = C - 1;
    double cumulative = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      cumulative += p[c];
      if (u < cumulative) {
        label = c;
        break;
      }
    }
    if (config.label_flip_rate > 0.0 && rng.uniform01() < config.label_flip_rate) {
      const std::size_t shift = 1 + rng.below(C - 1);
      label = (label + shift) % C;
    }
    out.labels[r] = label;

    double ftotal = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      ftotal += (f[c] = std::exp((log_p[c] - top) / config.target_temperature));
    }
    for (auto& x : f) x /= ftotal;
    std::copy(f.begin(), f.end(), out.target.begin() + r * C);

    if (config.surrogate_noise == 0.0) {
      std::copy(f.begin(), f.end(), out.surrogate.begin() + r * C);
    } else {
      double ntotal = 0.0;
      for (auto& x : noise) ntotal += (x = rng.uniform01());
      double stotal = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double s = (1.0 - config.surrogate_noise) * f[c] + config.surrogate_noise * noise[c] / ntotal;
        out.surrogate[r * C + c] = s;
        stotal += s;
      }
      for (std::size_t c = 0; c < C; ++c) out.surrogate[r * C + c] /= stotal;
    }
  }
  return out;
}

std::vector<std::string> make_ids(const char* prefix, std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i);
  return ids;
}

Pool labelled_pool(std::vector<std::string> ids, const std::vector<std::size_t>& labels,
                   SplitTag tag) {
  std::vector<std::optional<std::size_t>> slots(labels.begin(), labels.end());
  return Pool(std::move(ids), std::move(slots), tag);
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

SyntheticProblem generate_synthetic(const SyntheticConfig& config) {
  config.check();
  Rng pool_rng(config.seed, 0);
  Rng test_rng(config.seed, 1);
  auto pool_draw = draw_split(config, config.N, pool_rng);
  auto test_draw = draw_split(config, config.test_size, test_rng);

  SyntheticProblem out;
  out.pool = labelled_pool(make_ids("x", config.N), pool_draw.labels, SplitTag::pool);
  out.oracle = LabelOracle(pool_draw.labels, config.C);
  out.target = validate_table(config.C, std::move(pool_draw.target));
  out.surrogate = validate_table(config.C, std::move(pool_draw.surrogate));
  out.test = labelled_pool(make_ids("t", config.test_size), test_draw.labels, SplitTag::test);
  out.test_oracle = LabelOracle(test_draw.labels, config.C);
  if (config.test_size > 0) out.test_target = validate_table(config.C, std::move(test_draw.target));
  return out;
}

double median_squared_error(std::span<const double> estimates, double true_risk) {
  if (estimates.empty()) throw StateError("median squared error needs at least one estimate");
  std::vector<double> sq;
  sq.reserve(estimates.size());
  for (double e : estimates) sq.push_back((e - true_risk) * (e - true_risk));
  return median_of(std::move(sq));
}

std::vector<double> relative_error_curve(std::span<const double> active_mse,
                                         std::span<const double> uniform_mse,
                                         std::size_t offset) {
  if (active_mse.size() != uniform_mse.size()) {
    throw ShapeError("relative error needs curves on the same budget grid");
  }
  std::vector<double> out(active_mse.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k + offset < uniform_mse.size(); ++k) {
    const double base = uniform_mse[k + offset];
    if (base > 0.0) out[k] = active_mse[k] / base;
  }
  return out;
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(base, i);
  return seeds;
}

std::size_t worker_count(std::size_t requested) {
  std::size_t count = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ACTIVE_EVAL_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) count = std::min(count, static_cast<std::size_t>(cap));
  }
  return count;
}

namespace {

double resolve_truth(const SyntheticProblem& problem, const ExperimentOptions& options) {
  if (options.truth == TruthSource::test_split && problem.test.size() > 0) {
    return risk_true(problem.test_target, problem.test_oracle, options.loss, problem.test).value;
  }
  return risk_true(problem.target, problem.oracle, options.loss, problem.pool).value;
}

std::vector<double> running_estimates(const SyntheticProblem& problem, const MethodSpec& method,
                                      std::uint64_t seed, const LossSpec& loss) {
  if (method.estimator == EstimatorTag::ase) {
    const double ase = risk_ase(problem.surrogate, problem.target, loss, problem.pool).value;
    return std::vector<double>(method.acquisition.budget, ase);
  }
  AcquisitionConfig config = method.acquisition;
  config.seed = seed;
  LabelOracle oracle = problem.oracle;
  const auto log = run_acquisition(problem.pool, problem.surrogate, &problem.target, oracle, loss, config);
  return method.estimator == EstimatorTag::naive ? running_naive(log) : running_lure(log);
}

}  // namespace

ExperimentResult run_experiment(const SyntheticProblem& problem, std::span<const MethodSpec> methods,
                                std::span<const std::uint64_t> seeds,
                                const ExperimentOptions& options) {
  if (methods.empty()) throw ConfigError("experiment needs at least one method");
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  const std::size_t M = methods.front().acquisition.budget;
  for (const auto& m : methods) {
    if (m.acquisition.budget != M) throw ConfigError("every method must share the same budget");
    m.acquisition.check(problem.pool.size());
  }

  ExperimentResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.budget = M;
  result.true_risk = resolve_truth(problem, options);
  result.baseline = methods.size();
  for (std::size_t j = 0; j < methods.size(); ++j) {
    result.methods.push_back(methods[j].name);
    if (result.baseline == methods.size() && methods[j].acquisition.kind == AcquisitionKind::uniform &&
        methods[j].estimator == EstimatorTag::lure) {
      result.baseline = j;
    }
  }

  const std::size_t S = seeds.size();
  result.estimates.assign(methods.size(), std::vector<std::vector<double>>(S));
  const std::size_t threads = worker_count(options.threads);
  parallel_for(methods.size() * S, threads, [&](std::size_t job) {
    const std::size_t j = job / S;
    const std::size_t s = job % S;
    result.estimates[j][s] = running_estimates(problem, methods[j], seeds[s], options.loss);
  });

  result.median_sq_err.assign(methods.size(), std::vector<double>(M));
  std::vector<double> column(S);
  for (std::size_t j = 0; j < methods.size(); ++j) {
    for (std::size_t k = 0; k < M; ++k) {
      for (std::size_t s = 0; s < S; ++s) column[s] = result.estimates[j][s][k];
      result.median_sq_err[j][k] = median_squared_error(column, result.true_risk);
    }
  }

  result.rel_err.assign(methods.size(), std::vector<double>(M, std::numeric_limits<double>::quiet_NaN()));
  if (result.baseline < methods.size()) {
    for (std::size_t j = 0; j < methods.size(); ++j) {
      // The baseline is compared with itself at matched budgets.
      const std::size_t offset = j == result.baseline ? 0 : options.relative_offset;
      result.rel_err[j] =
          relative_error_curve(result.median_sq_err[j], result.median_sq_err[result.baseline], offset);
    }
  }
  return result;
}

CoverageResult run_coverage_study(const SyntheticProblem& problem, const MethodSpec& method,
                                  std::size_t runs, std::span<const std::size_t> K_grid,
                                  const BootstrapConfig& bootstrap, std::uint64_t base_seed,
                                  const ExperimentOptions& options) {
  if (runs < 1) throw ConfigError("coverage study needs at least one run");
  if (K_grid.empty()) throw ConfigError("coverage study needs at least one K");
  bootstrap.check();
  const std::size_t M = *std::max_element(K_grid.begin(), K_grid.end());
  if (*std::min_element(K_grid.begin(), K_grid.end()) < 1) throw ConfigError("K must be >= 1");

  AcquisitionConfig config = method.acquisition;
  config.budget = M;
  config.check(problem.pool.size());

  CoverageResult result;
  result.K_grid.assign(K_grid.begin(), K_grid.end());
  result.pool_risk = risk_true(problem.target, problem.oracle, options.loss, problem.pool).value;

  const std::size_t G = K_grid.size();
  std::vector<std::vector<double>> estimates(runs, std::vector<double>(G));
  std::vector<std::vector<BootstrapReport>> reports(runs, std::vector<BootstrapReport>(G));
  const auto seeds = seed_list(base_seed, runs);

  parallel_for(runs, worker_count(options.threads), [&](std::size_t r) {
    AcquisitionConfig run_config = config;
    run_config.seed = seeds[r];
    LabelOracle oracle = problem.oracle;
    const auto log = run_acquisition(problem.pool, problem.surrogate, &problem.target, oracle,
                                     options.loss, run_config);
    for (std::size_t g = 0; g < G; ++g) {
      const auto L = reweighted_losses(log, K_grid[g]);
      double total = 0.0;
      for (double x : L) total += x;
      estimates[r][g] = total / static_cast<double>(L.size());
      BootstrapConfig run_boot = bootstrap;
      run_boot.seed = derive_seed(seeds[r], 0xb007 + g);
      reports[r][g] = confidence_interval(L, run_boot);
    }
  });

  result.coverage.resize(G);
  result.mse_true.resize(G);
  std::vector<double> column(runs);
  std::vector<BootstrapReport> report_column(runs);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t r = 0; r < runs; ++r) {
      column[r] = estimates[r][g];
      report_column[r] = reports[r][g];
    }
    result.mse_true[g] = empirical_mse(column, result.pool_risk);
    const std::vector<double> truth(runs, result.mse_true[g]);
    result.coverage[g] = coverage_probability(report_column, truth);
  }
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t g = 0; g < G; ++g) {
      const auto& rep = reports[r][g];
      const double truth = result.mse_true[g];
      result.rows.push_back({r, K_grid[g], truth, rep.mse_estimate, rep.ci_low, rep.ci_high,
                             rep.ci_low <= truth && truth <= rep.ci_high});
    }
  }
  return result;
}

}  // namespace active_eval
