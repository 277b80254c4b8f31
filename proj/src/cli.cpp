#include "active_eval/cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "active_eval/acquisition.hpp"
#include "active_eval/diagnostics.hpp"
#include "active_eval/harness.hpp"
#include "active_eval/io.hpp"
#include "active_eval/rng.hpp"

namespace active_eval::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flat JSON object writer. Doubles go through io::format_double so every
// emitted number carries 17 significant digits; non-finite values become null.
class JsonObject {
 public:
  JsonObject& add(std::string_view key, double value) {
    return raw(key, std::isfinite(value) ? io::format_double(value) : "null");
  }
  JsonObject& add(std::string_view key, std::uint64_t value) { return raw(key, std::to_string(value)); }
  JsonObject& add(std::string_view key, std::size_t value, int) { return raw(key, std::to_string(value)); }
  JsonObject& add(std::string_view key, std::string_view value) {
    return raw(key, json(std::string(value)).dump());
  }
  JsonObject& add(std::string_view key, const JsonObject& nested) { return raw(key, nested.str()); }
  JsonObject& add_null(std::string_view key) { return raw(key, "null"); }
  JsonObject& raw(std::string_view key, std::string rendered) {
    fields_.emplace_back(std::string(key), std::move(rendered));
    return *this;
  }
  std::string str() const {
    std::string out = "{";
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (i) out += ',';
      out += json(fields_[i].first).dump();
      out += ':';
      out += fields_[i].second;
    }
    return out + "}";
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

EstimatorTag parse_estimator(std::string_view text) {
  if (text == "lure") return EstimatorTag::lure;
  if (text == "naive") return EstimatorTag::naive;
  if (text == "ase") return EstimatorTag::ase;
  if (text == "uniform") return EstimatorTag::uniform;
  throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

LossSpec parse_loss(const json& obj) {
  LossSpec spec;
  if (obj.is_object()) {
    spec.kind = parse_loss_kind(get_or<std::string>(obj, "kind", "log"));
    spec.probability_floor = get_or<double>(obj, "probability_floor", spec.probability_floor);
  }
  spec.check();
  return spec;
}

// ---------------------------------------------------------------------------
// Shared inputs for acquire / curate
// ---------------------------------------------------------------------------

struct Inputs {
  io::IdTable surrogate;
  std::unordered_map<std::string, std::size_t> position;  // id -> pool position
  std::vector<std::size_t> labels;                         // per pool position
  std::vector<bool> has_label;
  std::optional<io::IdTable> target;
};

Inputs load_inputs(const RunManifest& manifest) {
  Inputs in;
  in.surrogate = io::read_predictions(manifest.surrogate);
  const std::size_t N = in.surrogate.ids.size();
  if (N == 0) throw ValidationError("surrogate predictions contain no rows");
  for (std::size_t i = 0; i < N; ++i) in.position.emplace(in.surrogate.ids[i], i);

  in.labels.assign(N, 0);
  in.has_label.assign(N, false);
  const std::size_t C = in.surrogate.table.num_classes();
  for (const auto& [id, label] : io::read_labels(manifest.labels)) {
    const auto it = in.position.find(id);
    if (it == in.position.end()) continue;
    if (label >= C) {
      throw DomainError("label " + std::to_string(label) + " for id '" + id + "' outside [0, " +
                        std::to_string(C) + ")");
    }
    in.labels[it->second] = label;
    in.has_label[it->second] = true;
  }

  if (manifest.target) {
    in.target = io::read_predictions(*manifest.target);
    if (in.target->table.num_classes() != C) {
      throw ShapeError("target predictions have " + std::to_string(in.target->table.num_classes()) +
                       " classes but surrogate predictions have " + std::to_string(C));
    }
  }
  return in;
}

// Target rows keyed by position within `pool_ids`; ids outside the pool are ignored.
SparsePredictions sparse_target(const io::IdTable& target,
                                const std::unordered_map<std::string, std::size_t>& position) {
  SparsePredictions out;
  for (std::size_t r = 0; r < target.ids.size(); ++r) {
    const auto it = position.find(target.ids[r]);
    if (it == position.end()) continue;
    const auto row = target.table.row(r);
    out.emplace(it->second, std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

// Full-coverage target table aligned to the pool order, if every id is present.
std::optional<PredictionTable> aligned_target(const SparsePredictions& sparse, std::size_t N,
                                              std::size_t C) {
  if (sparse.size() != N) return std::nullopt;
  std::vector<double> values(N * C);
  for (const auto& [pos, row] : sparse) std::copy(row.begin(), row.end(), values.begin() + pos * C);
  return validate_table(C, std::move(values));
}

PredictionTable table_subset(const PredictionTable& table, std::span<const std::size_t> keep) {
  std::vector<double> values;
  values.reserve(keep.size() * table.num_classes());
  for (std::size_t i : keep) {
    const auto row = table.row(i);
    values.insert(values.end(), row.begin(), row.end());
  }
  return validate_table(table.num_classes(), std::move(values));
}

std::string optional_cell(std::optional<double> value) {
  return value ? io::format_double(*value) : std::string();
}

bool all_losses(const AcquisitionLog& log) {
  return std::all_of(log.records.begin(), log.records.end(), [](const auto& r) { return r.loss.has_value(); });
}

JsonObject estimates_json(const AcquisitionLog& log, const std::vector<EstimatorTag>& wanted,
                          std::optional<double> ase) {
  JsonObject obj;
  const bool have = all_losses(log) && !log.empty();
  for (auto tag : wanted) {
    switch (tag) {
      case EstimatorTag::lure:
        have ? obj.add("lure", risk_lure(log).value) : obj.add_null("lure");
        break;
      case EstimatorTag::naive:
        have ? obj.add("naive", risk_naive(log).value) : obj.add_null("naive");
        break;
      case EstimatorTag::ase:
        ase ? obj.add("ase", *ase) : obj.add_null("ase");
        break;
      default:
        break;
    }
  }
  return obj;
}

// ---------------------------------------------------------------------------
// acquire
// ---------------------------------------------------------------------------

int cmd_acquire(const RunManifest& manifest, std::ostream& out) {
  const Inputs in = load_inputs(manifest);
  const std::size_t N = in.surrogate.ids.size();
  const std::size_t C = in.surrogate.table.num_classes();
  for (std::size_t i = 0; i < N; ++i) {
    if (!in.has_label[i]) {
      throw ValidationError("label oracle has no label for id '" + in.surrogate.ids[i] + "'");
    }
  }
  LabelOracle oracle(in.labels, C);
  const Pool pool(in.surrogate.ids);

  SparsePredictions sparse;
  std::optional<PredictionTable> full_target;
  if (in.target) {
    sparse = sparse_target(*in.target, in.position);
    full_target = aligned_target(sparse, N, C);
  }
  if (manifest.acquisition.kind == AcquisitionKind::expected_loss && !full_target) {
    throw ConfigError("expected-loss acquisition needs target predictions for every pool id");
  }

  AcquisitionLog log = run_acquisition(pool, in.surrogate.table, full_target ? &*full_target : nullptr,
                                       oracle, manifest.loss, manifest.acquisition);
  if (in.target && !full_target) attach_losses(log, sparse, oracle, manifest.loss);

  std::optional<double> ase;
  const bool want_ase = std::find(manifest.estimators.begin(), manifest.estimators.end(),
                                  EstimatorTag::ase) != manifest.estimators.end();
  if (want_ase && full_target) ase = risk_ase(in.surrogate.table, *full_target, manifest.loss, pool).value;

  const fs::path dir = manifest.output_dir;
  {
    auto f = open_output(dir / "acquisition_log.jsonl");
    io::write_log(f, log, manifest.loss, in.surrogate.ids);
  }
  {
    std::ostringstream csv;
    csv << io::seed_comment(manifest.acquisition.seed) << "\nK,lure,naive,ase\n";
    const bool have = all_losses(log);
    const auto lure = have ? running_lure(log) : std::vector<double>{};
    const auto naive = have ? running_naive(log) : std::vector<double>{};
    for (std::size_t k = 0; k < log.size(); ++k) {
      csv << (k + 1) << ',' << (have ? io::format_double(lure[k]) : "") << ','
          << (have ? io::format_double(naive[k]) : "") << ',' << optional_cell(ase) << '\n';
    }
    write_text(dir / "running_estimates.csv", csv.str());
  }

  JsonObject summary;
  summary.add("command", "acquire")
      .add("version", "1")
      .add("seed", manifest.acquisition.seed)
      .add("kind", to_string(manifest.acquisition.kind))
      .add("N", N, 0)
      .add("M", log.size(), 0)
      .add("labels_revealed", oracle.reveal_count(), 0)
      .add("estimates", estimates_json(log, manifest.estimators, ase));
  write_text(dir / "summary.json", summary.str() + "\n");
  out << summary.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

int cmd_curate(const RunManifest& manifest, std::ostream& out) {
  const Inputs in = load_inputs(manifest);
  std::size_t N = in.surrogate.ids.size();
  const std::size_t C = in.surrogate.table.num_classes();

  std::vector<std::optional<std::size_t>> slots(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (!in.has_label[i]) throw StateError("curation needs a label for id '" + in.surrogate.ids[i] + "'");
    slots[i] = in.labels[i];
  }
  Pool pool(in.surrogate.ids, slots);
  PredictionTable surrogate = in.surrogate.table;

  if (manifest.filter_nll) {
    const auto keep = filter_indices_by_nll(pool, surrogate, *manifest.filter_nll);
    pool = pool.subset(keep);
    surrogate = table_subset(surrogate, keep);
    N = pool.size();
  }
  if (manifest.acquisition.budget > N) {
    throw ConfigError("budget " + std::to_string(manifest.acquisition.budget) +
                      " exceeds curated pool size " + std::to_string(N));
  }

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < N; ++i) position.emplace(pool.id(i), i);
  LabelOracle oracle = LabelOracle::from_pool(pool, C);

  SparsePredictions sparse;
  std::optional<PredictionTable> full_target;
  if (in.target) {
    sparse = sparse_target(*in.target, position);
    full_target = aligned_target(sparse, N, C);
  }
  if (manifest.acquisition.kind == AcquisitionKind::expected_loss && !full_target) {
    throw ConfigError("expected-loss acquisition needs target predictions for every pool id");
  }

  AcquisitionLog log = run_acquisition(pool, surrogate, full_target ? &*full_target : nullptr, oracle,
                                       manifest.loss, manifest.acquisition);
  if (in.target && !full_target) attach_losses(log, sparse, oracle, manifest.loss);

  const fs::path dir = manifest.output_dir;
  {
    std::ostringstream csv;
    csv << io::seed_comment(manifest.acquisition.seed) << "\nm,id\n";
    for (const auto& rec : log.records) csv << rec.step << ',' << io::quote_csv(pool.id(rec.pool_index)) << '\n';
    write_text(dir / "curated_ids.csv", csv.str());
  }
  {
    auto f = open_output(dir / "curation_log.jsonl");
    io::write_log(f, log, manifest.loss, pool.ids());
  }

  JsonObject summary;
  summary.add("command", "curate")
      .add("version", "1")
      .add("seed", manifest.acquisition.seed)
      .add("kind", to_string(manifest.acquisition.kind))
      .add("N", N, 0)
      .add("M", log.size(), 0);
  if (manifest.filter_nll) summary.add("filter_nll", *manifest.filter_nll);
  if (in.target) {
    JsonObject estimate = estimates_json(log, {EstimatorTag::lure, EstimatorTag::naive}, std::nullopt);
    write_text(dir / "estimate.json", estimate.str() + "\n");
    summary.add("estimates", estimate);
  }
  write_text(dir / "summary.json", summary.str() + "\n");
  out << summary.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bootstrap
// ---------------------------------------------------------------------------

struct BootstrapArgs {
  fs::path log;
  std::size_t B = 1000;
  std::size_t outer_B = 200;
  std::optional<std::size_t> K;
  std::uint64_t seed = 0;
  double ci_multiplier = 2.0;
  std::optional<fs::path> out;
};

int cmd_bootstrap(const BootstrapArgs& args, std::ostream& out) {
  const io::LogFile file = io::read_log(args.log);
  const std::size_t K = args.K.value_or(file.log.size());
  if (K == 0) throw StateError("bootstrap needs a non-empty log or K >= 1");
  if (K > file.log.size()) {
    throw StateError("--K " + std::to_string(K) + " exceeds the log's " +
                     std::to_string(file.log.size()) + " records");
  }
  const auto L = reweighted_losses(file.log, K);
  BootstrapConfig config{args.B, args.outer_B, args.ci_multiplier, args.seed};
  const BootstrapReport report = confidence_interval(L, config);
  double lure = 0.0;
  for (double x : L) lure += x;
  lure /= static_cast<double>(K);

  JsonObject obj;
  obj.add("version", "1")
      .add("seed", args.seed)
      .add("K", K, 0)
      .add("B", args.B, 0)
      .add("outer_B", args.outer_B, 0)
      .add("ci_multiplier", args.ci_multiplier)
      .add("lure_estimate", lure)
      .add("mse_estimate", report.mse_estimate)
      .add("ci_low", report.ci_low)
      .add("ci_high", report.ci_high)
      .add("sigma_hat", report.sigma_hat)
      .add("replicate_mean", report.replicate_mean);
  if (args.out) write_text(*args.out, obj.str() + "\n");
  out << obj.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  fs::path config;
  fs::path out = "sim_out";
  std::optional<std::size_t> seeds;
  std::optional<std::uint64_t> seed;
  bool coverage = false;
  std::size_t threads = 0;
};

struct SimulationPlan {
  SyntheticConfig synthetic;
  std::vector<MethodSpec> methods;
  std::size_t seeds = 1000;
  std::uint64_t seed = 0;
  ExperimentOptions options;
  // coverage
  std::string coverage_method;
  std::size_t coverage_runs = 100;
  std::vector<std::size_t> coverage_K{100};
  BootstrapConfig bootstrap;
};

SimulationPlan parse_simulation(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("simulation config must be a JSON object");
  if (get_or<std::string>(cfg, "version", "1") != "1") throw ConfigError("simulation config version must be \"1\"");
  SimulationPlan plan;
  const json syn = cfg.value("synthetic", json::object());
  auto& s = plan.synthetic;
  s.N = get_or<std::size_t>(syn, "N", s.N);
  s.C = get_or<std::size_t>(syn, "C", s.C);
  s.test_size = get_or<std::size_t>(syn, "test_size", s.test_size);
  s.target_temperature = get_or<double>(syn, "target_temperature", s.target_temperature);
  s.surrogate_noise = get_or<double>(syn, "surrogate_noise", s.surrogate_noise);
  s.label_flip_rate = get_or<double>(syn, "label_flip_rate", s.label_flip_rate);
  if (syn.contains("concentration")) {
    const auto& c = syn["concentration"];
    s.concentration = c.is_array() ? c.get<std::vector<double>>() : std::vector<double>{c.get<double>()};
  }

  const std::size_t budget = get_or<std::size_t>(cfg, "budget", 400);
  const double clip = get_or<double>(cfg, "clip_alpha", 0.1);
  const json methods = cfg.value("methods", json::array({json{{"name", "uniform"}, {"kind", "uniform"}}}));
  if (!methods.is_array() || methods.empty()) throw ConfigError("methods must be a non-empty array");
  for (const auto& m : methods) {
    MethodSpec spec;
    spec.acquisition.kind = parse_acquisition_kind(get_or<std::string>(m, "kind", "uniform"));
    spec.name = get_or<std::string>(m, "name", std::string(to_string(spec.acquisition.kind)));
    spec.acquisition.budget = budget;
    spec.acquisition.clip_alpha = get_or<double>(m, "clip_alpha", clip);
    spec.estimator = parse_estimator(get_or<std::string>(m, "estimator", "lure"));
    if (spec.acquisition.kind == AcquisitionKind::nll) {
      throw ConfigError("nll acquisition reads pool labels and is not a valid testing method here");
    }
    plan.methods.push_back(std::move(spec));
  }

  plan.seeds = get_or<std::size_t>(cfg, "seeds", plan.seeds);
  plan.seed = get_or<std::uint64_t>(cfg, "seed", plan.seed);
  plan.options.loss = parse_loss(cfg.value("loss", json::object()));
  const auto truth = get_or<std::string>(cfg, "truth", "test");
  if (truth == "test") plan.options.truth = TruthSource::test_split;
  else if (truth == "pool") plan.options.truth = TruthSource::pool;
  else throw ConfigError("truth must be \"test\" or \"pool\"");
  plan.options.relative_offset = get_or<std::size_t>(cfg, "relative_offset", 0);

  const json cov = cfg.value("coverage", json::object());
  plan.coverage_method = get_or<std::string>(cov, "method", plan.methods.back().name);
  plan.coverage_runs = get_or<std::size_t>(cov, "runs", plan.coverage_runs);
  plan.coverage_K = get_or<std::vector<std::size_t>>(cov, "K", plan.coverage_K);
  plan.bootstrap.B = get_or<std::size_t>(cov, "B", plan.bootstrap.B);
  plan.bootstrap.outer_B = get_or<std::size_t>(cov, "outer_B", plan.bootstrap.outer_B);
  plan.bootstrap.ci_multiplier = get_or<double>(cov, "ci_multiplier", plan.bootstrap.ci_multiplier);
  return plan;
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  SimulationPlan plan = parse_simulation(read_json_file(args.config));
  if (args.seeds) plan.seeds = *args.seeds;
  if (args.seed) plan.seed = *args.seed;
  if (plan.seeds < 1) throw ConfigError("--seeds must be at least 1");
  plan.options.threads = args.threads;

  // Every random stream descends from the one run seed.
  plan.synthetic.seed = derive_seed(plan.seed, 0);
  const SyntheticProblem problem = generate_synthetic(plan.synthetic);
  const auto seeds = seed_list(derive_seed(plan.seed, 1), plan.seeds);
  const ExperimentResult result = run_experiment(problem, plan.methods, seeds, plan.options);

  {
    std::ostringstream csv;
    csv << io::seed_comment(plan.seed) << "\nmethod,K,median_sq_err,rel_err\n";
    for (std::size_t j = 0; j < result.methods.size(); ++j) {
      for (std::size_t k = 0; k < result.budget; ++k) {
        csv << io::quote_csv(result.methods[j]) << ',' << (k + 1) << ','
            << io::format_double(result.median_sq_err[j][k]) << ','
            << io::format_double(result.rel_err[j][k]) << '\n';
      }
    }
    write_text(args.out / "curves.csv", csv.str());
  }

  JsonObject summary;
  summary.add("command", "simulate")
      .add("version", "1")
      .add("seed", plan.seed)
      .add("seeds", plan.seeds, 0)
      .add("budget", result.budget, 0)
      .add("true_risk", result.true_risk);

  if (args.coverage) {
    const auto it = std::find_if(plan.methods.begin(), plan.methods.end(),
                                 [&](const MethodSpec& m) { return m.name == plan.coverage_method; });
    if (it == plan.methods.end()) throw ConfigError("coverage method '" + plan.coverage_method + "' not found");
    const CoverageResult cov = run_coverage_study(problem, *it, plan.coverage_runs, plan.coverage_K,
                                                  plan.bootstrap, derive_seed(plan.seed, 2), plan.options);
    std::ostringstream csv;
    csv << io::seed_comment(plan.seed) << "\nrun_id,K,mse_true,mse_hat,ci_low,ci_high,covered\n";
    for (const auto& row : cov.rows) {
      csv << row.run_id << ',' << row.K << ',' << io::format_double(row.mse_true) << ','
          << io::format_double(row.mse_hat) << ',' << io::format_double(row.ci_low) << ','
          << io::format_double(row.ci_high) << ',' << (row.covered ? 1 : 0) << '\n';
    }
    write_text(args.out / "coverage.csv", csv.str());

    JsonObject per_k;
    for (std::size_t g = 0; g < cov.K_grid.size(); ++g) {
      per_k.add(std::to_string(cov.K_grid[g]), cov.coverage[g]);
    }
    summary.add("coverage_method", plan.coverage_method)
        .add("pool_risk", cov.pool_risk)
        .add("coverage", per_k);
  }
  write_text(args.out / "summary.json", summary.str() + "\n");
  out << summary.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::vector<fs::path> predictions;
  std::vector<fs::path> labels;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out) {
  if (args.predictions.empty() && args.labels.empty()) {
    throw ConfigError("validate needs --predictions and/or --labels");
  }
  std::size_t classes = 0;
  for (const auto& path : args.predictions) {
    const auto table = io::read_predictions(path);
    if (classes != 0 && table.table.num_classes() != classes) {
      throw ShapeError(path.string() + ": class count differs from the other prediction files");
    }
    classes = table.table.num_classes();
    JsonObject obj;
    obj.add("file", path.string()).add("kind", "predictions").add("rows", table.ids.size(), 0).add("classes", classes, 0);
    out << obj.str() << '\n';
  }
  for (const auto& path : args.labels) {
    const auto rows = io::read_labels(path);
    for (const auto& [id, label] : rows) {
      if (classes != 0 && label >= classes) {
        throw DomainError(path.string() + ": label " + std::to_string(label) + " for id '" + id +
                          "' outside [0, " + std::to_string(classes) + ")");
      }
    }
    JsonObject obj;
    obj.add("file", path.string()).add("kind", "labels").add("rows", rows.size(), 0);
    out << obj.str() << '\n';
  }
  return kExitOk;
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
  JsonObject obj;
  obj.add("error", kind).add("message", message);
  err << obj.str() << '\n';
}

}  // namespace

RunManifest load_manifest(const fs::path& path) {
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw ConfigError("manifest must be a JSON object");
  RunManifest m;
  m.version = get_or<std::string>(cfg, "version", "");
  if (m.version != "1") throw ConfigError("manifest version must be \"1\"");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  const auto surrogate = get_or<std::string>(cfg, "surrogate", "");
  const auto labels = get_or<std::string>(cfg, "labels", "");
  if (surrogate.empty()) throw ConfigError("manifest needs a 'surrogate' predictions path");
  if (labels.empty()) throw ConfigError("manifest needs a 'labels' path");
  m.surrogate = resolve(surrogate);
  m.labels = resolve(labels);
  if (const auto target = get_or<std::string>(cfg, "target", ""); !target.empty()) m.target = resolve(target);

  const json acq = cfg.value("acquisition", json::object());
  m.acquisition.kind = parse_acquisition_kind(get_or<std::string>(acq, "kind", "expected-loss"));
  m.acquisition.budget = get_or<std::size_t>(acq, "budget", 1);
  m.acquisition.clip_alpha = get_or<double>(acq, "clip_alpha", 0.1);
  m.acquisition.seed = get_or<std::uint64_t>(acq, "seed", 0);
  m.loss = parse_loss(cfg.value("loss", json::object()));
  if (cfg.contains("estimators")) {
    m.estimators.clear();
    for (const auto& e : cfg["estimators"]) m.estimators.push_back(parse_estimator(e.get<std::string>()));
  }
  m.output_dir = resolve(get_or<std::string>(cfg, "output_dir", "out"));
  if (cfg.contains("filter_nll") && !cfg["filter_nll"].is_null()) m.filter_nll = cfg["filter_nll"].get<double>();
  return m;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-efficient model evaluation: active testing, curation and bootstrap error estimates"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string manifest_path;
  std::string out_dir;

  auto* acquire = app.add_subcommand("acquire", "Run active acquisition from a manifest");
  acquire->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  acquire->add_option("--seed", seed, "Seed for all randomness (overrides the manifest)");
  acquire->add_option("--out", out_dir, "Output directory (overrides the manifest)");

  std::optional<double> filter_nll;
  std::string curate_kind;
  auto* curate = app.add_subcommand("curate", "Select a labelled subset for target-model evaluation");
  curate->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  curate->add_option("--seed", seed, "Seed for all randomness (overrides the manifest)");
  curate->add_option("--out", out_dir, "Output directory (overrides the manifest)");
  curate->add_option("--filter-nll", filter_nll, "Drop pool points whose surrogate NLL exceeds this");

  BootstrapArgs boot;
  std::optional<std::uint64_t> boot_seed;
  std::string boot_out;
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap MSE estimate and interval from a log");
  bootstrap->add_option("--log", boot.log, "Acquisition log (JSON lines)")->required();
  bootstrap->add_option("--B", boot.B, "Bootstrap replicates")->capture_default_str();
  bootstrap->add_option("--outer-B", boot.outer_B, "Outer resamples for sigma")->capture_default_str();
  bootstrap->add_option("--K", boot.K, "Use only the first K records");
  bootstrap->add_option("--ci-multiplier", boot.ci_multiplier, "Interval half-width in sigmas")->capture_default_str();
  bootstrap->add_option("--seed", boot_seed, "Seed");
  bootstrap->add_option("--out", boot_out, "Also write the report here");

  SimulateArgs sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Multi-seed synthetic experiment");
  simulate->add_option("--config", sim.config, "Simulation config (JSON)")->required();
  simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();
  simulate->add_option("--seeds", sim.seeds, "Number of acquisition seeds");
  simulate->add_option("--seed", sim.seed, "Seed for all randomness");
  simulate->add_flag("--coverage", sim.coverage, "Also run the bootstrap coverage study");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Check prediction and label files");
  validate->add_option("--predictions", val.predictions, "Prediction CSV (repeatable)");
  validate->add_option("--labels", val.labels, "Label CSV (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*acquire || *curate) {
      RunManifest manifest = load_manifest(manifest_path);
      if (seed) manifest.acquisition.seed = *seed;
      if (!out_dir.empty()) manifest.output_dir = out_dir;
      if (*curate) {
        if (filter_nll) manifest.filter_nll = filter_nll;
        return cmd_curate(manifest, out);
      }
      return cmd_acquire(manifest, out);
    }
    if (*bootstrap) {
      if (boot_seed) boot.seed = *boot_seed;
      if (!boot_out.empty()) boot.out = boot_out;
      return cmd_bootstrap(boot, out);
    }
    if (*simulate) {
      if (!sim_out.empty()) sim.out = sim_out;
      return cmd_simulate(sim, out);
    }
    if (*validate) return cmd_validate(val, out);
  } catch (const NumericalError& e) {
    report_error(err, e.kind(), e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "io", e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "config", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace active_eval::cli
