// mfl: generate data, fit direct and transfer models, predict, run the benchmark.
//
// Config file: one JSON document, flags override its values. Logs go to
// stderr as key=value lines. Exit codes: 0 ok, 2 usage/config, 3 data,
// 4 numerical failure, 1 anything unexpected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mfl/dataset.hpp"
#include "mfl/error.hpp"
#include "mfl/parallel.hpp"
#include "mfl/protocol.hpp"
#include "mfl/sourcegen.hpp"
#include "mfl/svr.hpp"
#include "mfl/transfer.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::mutex log_mutex;

void log_line(const std::string& line) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << line << '\n';
}

template <typename T>
std::string kv(const std::string& key, const T& value) {
  std::ostringstream out;
  out << key << '=' << std::setprecision(10) << value;
  return out.str();
}

// Thrown for malformed model files so they map to the data exit code.
struct ModelFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mfl::Error(mfl::Errc::Io, "cannot open " + path.string());
  return json::parse(in);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mfl::Error(mfl::Errc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw mfl::Error(mfl::Errc::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Effective settings: defaults, then the config file, then flags.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  mfl::SourceModelConfig source;
  mfl::GridSpec grid;
  std::string fixture = "nonlinear";
  json synthetic = json::object();  // field overrides on top of the fixture
  std::optional<mfl::SvrParams> svr;                    // unset selects grid search
  mfl::SearchConfig search;
  mfl::TransferConfig transfer;
  mfl::BenchmarkConfig benchmark;
};

const std::vector<std::string> kConfigKeys = {"seed",   "jobs",   "source", "grid",     "synthetic", "fixture",
                                              "svr",    "search", "solver", "transfer", "benchmark"};

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  json j;
  try {
    j = read_json_file(path);
  } catch (const json::exception& e) {
    throw mfl::Error(mfl::Errc::InvalidConfig, path + ": " + e.what());
  }
  try {
    if (!j.is_object()) throw mfl::Error(mfl::Errc::InvalidConfig, path + ": top level must be an object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
        throw mfl::Error(mfl::Errc::InvalidConfig, path + ": unknown key '" + key + "'");
      }
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("source")) {
      const auto& s = j.at("source");
      cfg.source.filament_diameter = s.value("filament_diameter", cfg.source.filament_diameter);
      cfg.source.h = s.value("h", cfg.source.h);
    }
    if (j.contains("grid")) cfg.grid = j.at("grid").get<mfl::GridSpec>();
    if (j.contains("synthetic")) {
      cfg.synthetic = j.at("synthetic");
      if (!cfg.synthetic.is_object()) throw mfl::Error(mfl::Errc::InvalidConfig, path + ": synthetic must be an object");
    }
    cfg.fixture = j.value("fixture", cfg.fixture);
    if (j.contains("svr")) cfg.svr = j.at("svr").get<mfl::SvrParams>();
    if (j.contains("search")) cfg.search = j.at("search").get<mfl::SearchConfig>();
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.search.solver.tol = s.value("tol", cfg.search.solver.tol);
      cfg.search.solver.max_iterations = s.value("max_iterations", cfg.search.solver.max_iterations);
    }
    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      cfg.transfer.n_iterations = t.value("n_iterations", cfg.transfer.n_iterations);
      if (t.contains("loss")) cfg.transfer.loss = mfl::parse_loss(t.at("loss").get<std::string>());
    }
    // Top-level sections seed the benchmark block; values given inside it win.
    cfg.benchmark.search = cfg.search;
    cfg.benchmark.sweep.n_iterations = cfg.transfer.n_iterations;
    cfg.benchmark.sweep.loss = cfg.transfer.loss;
    if (j.contains("benchmark")) mfl::from_json(j.at("benchmark"), cfg.benchmark);
    cfg.search = cfg.benchmark.search;
    cfg.transfer.n_iterations = cfg.benchmark.sweep.n_iterations;
    cfg.transfer.loss = cfg.benchmark.sweep.loss;
  } catch (const json::exception& e) {
    throw mfl::Error(mfl::Errc::InvalidConfig, path + ": " + e.what());
  }
  return cfg;
}

mfl::Dataset load_dataset(const std::string& path, mfl::Origin origin) {
  auto data = mfl::load_csv(path, origin);
  log_line(kv("event", "load") + " " + kv("path", path) + " " + kv("rows", data.size()));
  return data;
}

void write_dataset(const std::string& path, const mfl::Dataset& data) {
  if (path.empty() || path == "-") {
    mfl::write_csv(std::cout, data);
  } else {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    mfl::save_csv(path, data);
  }
}

std::uint64_t resolve_seed(RunConfig& cfg) {
  if (!cfg.seed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  log_line(kv("seed", *cfg.seed));
  return *cfg.seed;
}

std::size_t resolve_jobs(const RunConfig& cfg) { return cfg.jobs == 0 ? mfl::default_jobs() : cfg.jobs; }

mfl::SvrParams choose_params(const RunConfig& cfg, const mfl::Dataset& train, const Eigen::VectorXd& weights,
                             std::uint64_t seed) {
  if (cfg.svr) return *cfg.svr;
  const auto result =
      mfl::grid_search_cv_detailed(train, weights, cfg.search.grid, cfg.search.k_folds, seed, cfg.search.solver);
  log_line(kv("event", "grid_search") + " " + kv("c", result.best.c) + " " + kv("gamma", result.best.gamma) + " " +
           kv("epsilon", result.best.epsilon) + " " + kv("cv_rmse", result.mean_rmse[result.best_index]));
  return result.best;
}

// The named fixture for the configured h with any field overrides applied.
mfl::SyntheticTargetConfig synthetic_config(const RunConfig& cfg) {
  mfl::SyntheticTargetConfig syn;
  if (cfg.fixture == "identity") {
    syn = mfl::SyntheticTargetConfig::identity();
  } else if (cfg.fixture == "nonlinear") {
    syn = mfl::SyntheticTargetConfig::fixture_for(cfg.source.h);
  } else {
    throw mfl::Error(mfl::Errc::InvalidConfig, "unknown fixture '" + cfg.fixture + "'");
  }
  mfl::from_json(cfg.synthetic, syn);
  return syn;
}

// Flags that override config values; unset options leave the config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> h, diameter;
  std::optional<double> f_min, f_max, s_min, s_max;
  std::optional<std::size_t> n_f, n_s;
  std::optional<double> alpha, p, offset, noise_std, band_min, band_max;
  std::optional<std::string> fixture;
  std::optional<double> c, gamma, epsilon, tol;
  std::optional<std::size_t> k_folds, iterations, max_iterations;
  std::optional<std::string> loss;
  std::optional<std::size_t> reps, eval_reps, test_size;
  std::optional<double> rel_tol;
  std::vector<std::size_t> n_grid;

  RunConfig apply() const {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = seed;
    if (jobs) cfg.jobs = *jobs;
    if (h) cfg.source.h = *h;
    if (diameter) cfg.source.filament_diameter = *diameter;
    if (f_min) cfg.grid.f_min = *f_min;
    if (f_max) cfg.grid.f_max = *f_max;
    if (s_min) cfg.grid.s_min = *s_min;
    if (s_max) cfg.grid.s_max = *s_max;
    if (n_f) cfg.grid.n_f = *n_f;
    if (n_s) cfg.grid.n_s = *n_s;
    if (fixture) cfg.fixture = *fixture;
    if (alpha) cfg.synthetic["alpha"] = *alpha;
    if (p) cfg.synthetic["p"] = *p;
    if (offset) cfg.synthetic["offset"] = *offset;
    if (noise_std) cfg.synthetic["noise_std"] = *noise_std;
    if (band_min) cfg.synthetic["band_min"] = *band_min;
    if (band_max) cfg.synthetic["band_max"] = *band_max;
    if (c || gamma || epsilon) {
      auto params = cfg.svr.value_or(mfl::SvrParams{});
      if (c) params.c = *c;
      if (gamma) params.gamma = *gamma;
      if (epsilon) params.epsilon = *epsilon;
      cfg.svr = params;
    }
    if (tol) cfg.search.solver.tol = *tol;
    if (max_iterations) cfg.search.solver.max_iterations = *max_iterations;
    if (k_folds) cfg.search.k_folds = *k_folds;
    if (iterations) cfg.transfer.n_iterations = *iterations;
    if (loss) cfg.transfer.loss = mfl::parse_loss(*loss);
    cfg.benchmark.search = cfg.search;
    cfg.benchmark.sweep.search = cfg.search;
    cfg.benchmark.sweep.n_iterations = cfg.transfer.n_iterations;
    cfg.benchmark.sweep.loss = cfg.transfer.loss;
    if (reps) cfg.benchmark.reps = *reps;
    if (eval_reps) cfg.benchmark.sweep.eval_reps = *eval_reps;
    if (test_size) cfg.benchmark.sweep.test_size = *test_size;
    if (rel_tol) cfg.benchmark.rel_tol = *rel_tol;
    if (!n_grid.empty()) cfg.benchmark.n_grid = n_grid;
    return cfg;
  }
};

int cmd_generate(const Overrides& o, const std::string& kind, const std::string& out) {
  RunConfig cfg = o.apply();
  mfl::Dataset data;
  if (kind == "source") {
    data = mfl::generate_source_grid(cfg.grid, cfg.source);
  } else {
    const std::uint64_t seed = resolve_seed(cfg);
    auto syn = synthetic_config(cfg);
    syn.seed = seed;
    data = mfl::generate_synthetic_target(cfg.grid, cfg.source, syn);
  }
  write_dataset(out, data);
  log_line(kv("event", "generate") + " " + kv("kind", kind) + " " + kv("h", cfg.source.h) + " " +
           kv("rows", data.size()));
  if (!out.empty() && out != "-") std::cout << data.size() << '\n';
  return 0;
}

int cmd_fit_direct(const Overrides& o, const std::string& train_path, const std::string& out) {
  RunConfig cfg = o.apply();
  const std::uint64_t seed = resolve_seed(cfg);
  const auto train = load_dataset(train_path, mfl::Origin::Target);
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(train.size()),
                                                            1.0 / static_cast<double>(train.size()));
  const auto params = choose_params(cfg, train, weights, seed);
  const auto model = mfl::fit_svr(train, params, cfg.search.solver);
  log_line(kv("event", "fit_direct") + " " + kv("support_vectors", model.support_indices.size()) + " " +
           kv("iterations", model.iterations));
  write_json(out, json{{"kind", "direct"}, {"model", model}});
  return 0;
}

int cmd_fit_transfer(const Overrides& o, const std::string& source_path, const std::string& target_path,
                     const std::string& out) {
  RunConfig cfg = o.apply();
  const std::uint64_t seed = resolve_seed(cfg);
  const auto source = load_dataset(source_path, mfl::Origin::Source);
  const auto target = load_dataset(target_path, mfl::Origin::Target);
  const auto both = mfl::concat(source, target);
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(both.size()),
                                                            1.0 / static_cast<double>(both.size()));
  mfl::TransferConfig tc = cfg.transfer;
  tc.svr_params = choose_params(cfg, both, weights, seed);
  tc.tol = cfg.search.solver.tol;
  tc.max_iterations = cfg.search.solver.max_iterations;
  const auto ensemble = mfl::fit_tradaboost_r2(source, target, tc);
  log_line(kv("event", "fit_transfer") + " " + kv("models", ensemble.models.size()) + " " +
           kv("stopped_early", ensemble.stopped_early) + " " + kv("perfect_fit", ensemble.perfect_fit));
  write_json(out, json{{"kind", "transfer"}, {"ensemble", ensemble}});
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out) {
  json doc;
  try {
    doc = read_json_file(model_path);
  } catch (const json::exception& e) {
    throw ModelFileError(model_path + ": " + e.what());
  }
  const auto data = mfl::load_feature_csv(data_path);
  Eigen::VectorXd pred;
  try {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "direct") {
      pred = doc.at("model").get<mfl::SvrModel>().predict(data);
    } else if (kind == "transfer") {
      pred = doc.at("ensemble").get<mfl::TransferEnsemble>().predict(data);
    } else {
      throw ModelFileError(model_path + ": unknown model kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw ModelFileError(model_path + ": " + e.what());
  }
  std::ostringstream csv;
  csv << std::setprecision(17) << "F_mm_per_min,S_mm_per_min,h_mm,W_pred_mm\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv << data[i].f << ',' << data[i].s << ',' << data[i].h << ',' << pred(static_cast<Eigen::Index>(i)) << '\n';
  }
  if (out.empty() || out == "-") {
    std::cout << csv.str();
  } else {
    write_text(out, csv.str());
  }
  log_line(kv("event", "predict") + " " + kv("rows", data.size()));
  return 0;
}

int cmd_grid_search(const Overrides& o, const std::string& train_path, const std::string& out) {
  RunConfig cfg = o.apply();
  const std::uint64_t seed = resolve_seed(cfg);
  const auto train = load_dataset(train_path, mfl::Origin::Target);
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(train.size()),
                                                            1.0 / static_cast<double>(train.size()));
  const auto result =
      mfl::grid_search_cv_detailed(train, weights, cfg.search.grid, cfg.search.k_folds, seed, cfg.search.solver);
  json table = json::array();
  for (std::size_t i = 0; i < cfg.search.grid.size(); ++i) {
    const double r = result.mean_rmse[i];
    table.push_back({{"params", cfg.search.grid[i]}, {"cv_rmse", std::isfinite(r) ? json(r) : json(nullptr)}});
  }
  const json doc{{"best", result.best}, {"cv_rmse", result.mean_rmse[result.best_index]},
                 {"k_folds", cfg.search.k_folds}, {"seed", seed}, {"table", table}};
  log_line(kv("event", "grid_search") + " " + kv("c", result.best.c) + " " + kv("gamma", result.best.gamma) + " " +
           kv("epsilon", result.best.epsilon) + " " + kv("cv_rmse", result.mean_rmse[result.best_index]));
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(out, doc);
  }
  return 0;
}

int cmd_benchmark(const Overrides& o, const std::string& source_path, const std::string& target_path,
                  const std::string& out_dir) {
  RunConfig cfg = o.apply();
  const std::uint64_t seed = resolve_seed(cfg);
  const std::size_t jobs = resolve_jobs(cfg);
  log_line(kv("jobs", jobs));
  const auto source = load_dataset(source_path, mfl::Origin::Source);
  const auto target = load_dataset(target_path, mfl::Origin::Target);
  const auto result = mfl::run_benchmark(source, target, cfg.benchmark, seed, jobs, log_line);

  fs::create_directories(out_dir);
  json report = result.report;
  report["seed"] = seed;
  write_json(fs::path(out_dir) / "report.json", report);
  std::ostringstream curve, sweep;
  mfl::write_curve_csv(curve, result.curve);
  mfl::write_sweep_csv(sweep, result.sweep);
  write_text(fs::path(out_dir) / "curve.csv", curve.str());
  write_text(fs::path(out_dir) / "sweep.csv", sweep.str());
  log_line(kv("event", "benchmark_done") + " " + kv("n_direct", result.report.baseline.n_direct) + " " +
           kv("n_t", result.report.cell.n_t) + " " + kv("achieved", result.report.achieved));
  return 0;
}

int exit_code(mfl::Errc code) {
  switch (mfl::category(code)) {
    case mfl::ErrorCategory::Config: return 2;
    case mfl::ErrorCategory::Data: return 3;
    case mfl::ErrorCategory::Numerical: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer-based multifidelity learning for process data"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  Overrides o;

  app.add_option("--config", o.config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed; a random one is logged when omitted");
  app.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");

  auto add_source_opts = [&o](CLI::App* cmd) {
    cmd->add_option("--h", o.h, "Nozzle-to-platen distance, mm");
    cmd->add_option("--diameter", o.diameter, "Filament diameter, mm");
  };
  auto add_svr_opts = [&o](CLI::App* cmd) {
    cmd->add_option("--c", o.c, "SVR box constraint (skips grid search)");
    cmd->add_option("--gamma", o.gamma, "RBF width (skips grid search)");
    cmd->add_option("--epsilon", o.epsilon, "Tube width, standardized-target units (skips grid search)");
    cmd->add_option("--tol", o.tol, "Solver KKT tolerance");
    cmd->add_option("--max-iterations", o.max_iterations, "Solver iteration cap");
    cmd->add_option("--k-folds", o.k_folds, "Cross-validation folds");
  };

  std::string kind, out;
  auto* gen = app.add_subcommand("generate", "Write a source or synthetic target CSV");
  gen->add_option("kind", kind, "source | synthetic-target")
      ->required()
      ->check(CLI::IsMember({"source", "synthetic-target"}));
  gen->add_option("--out", out, "Output CSV (default stdout)");
  add_source_opts(gen);
  gen->add_option("--f-min", o.f_min);
  gen->add_option("--f-max", o.f_max);
  gen->add_option("--s-min", o.s_min);
  gen->add_option("--s-max", o.s_max);
  gen->add_option("--n-f", o.n_f);
  gen->add_option("--n-s", o.n_s);
  gen->add_option("--fixture", o.fixture, "nonlinear | identity")->check(CLI::IsMember({"nonlinear", "identity"}));
  gen->add_option("--alpha", o.alpha);
  gen->add_option("--p", o.p);
  gen->add_option("--offset", o.offset);
  gen->add_option("--noise-std", o.noise_std);
  gen->add_option("--band-min", o.band_min);
  gen->add_option("--band-max", o.band_max);

  std::string train, source, target, model, data, out_dir;
  auto* fit_direct = app.add_subcommand("fit-direct", "Fit an SVR on target data alone");
  fit_direct->add_option("--train", train)->required();
  fit_direct->add_option("--out", out)->required();
  add_svr_opts(fit_direct);

  auto* fit_transfer = app.add_subcommand("fit-transfer", "Fit a TrAdaBoost.R2 ensemble on source plus target");
  fit_transfer->add_option("--source", source)->required();
  fit_transfer->add_option("--target", target)->required();
  fit_transfer->add_option("--out", out)->required();
  fit_transfer->add_option("--iterations", o.iterations, "Boosting iterations");
  fit_transfer->add_option("--loss", o.loss, "linear | square | exponential");
  add_svr_opts(fit_transfer);

  auto* predict = app.add_subcommand("predict", "Predict line widths for a feature CSV");
  predict->add_option("--model", model)->required();
  predict->add_option("--data", data)->required();
  predict->add_option("--out", out, "Output CSV (default stdout)");

  auto* grid = app.add_subcommand("grid-search", "Cross-validated SVR hyperparameter search");
  grid->add_option("--train", train)->required();
  grid->add_option("--out", out, "Output JSON (default stdout)");
  add_svr_opts(grid);

  auto* bench = app.add_subcommand("benchmark", "Direct-vs-transfer benchmark for one h");
  bench->add_option("--source", source)->required();
  bench->add_option("--target", target)->required();
  bench->add_option("--out-dir", out_dir)->required();
  bench->add_option("--reps", o.reps, "Repetitions per learning-curve point");
  bench->add_option("--eval-reps", o.eval_reps, "Repetitions per sub-grid cell");
  bench->add_option("--test-size", o.test_size, "Transfer test-set size (0 = n_direct)");
  bench->add_option("--rel-tol", o.rel_tol, "Plateau tolerance");
  bench->add_option("--n-grid", o.n_grid, "Training sizes for the learning curve");
  bench->add_option("--iterations", o.iterations, "Boosting iterations");
  bench->add_option("--loss", o.loss, "linear | square | exponential");
  add_svr_opts(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(o, kind, out);
    if (*fit_direct) return cmd_fit_direct(o, train, out);
    if (*fit_transfer) return cmd_fit_transfer(o, source, target, out);
    if (*predict) return cmd_predict(model, data, out);
    if (*grid) return cmd_grid_search(o, train, out);
    if (*bench) return cmd_benchmark(o, source, target, out_dir);
  } catch (const mfl::Error& e) {
    log_line(kv("error", mfl::to_string(e.code())) + " " + kv("message", std::quoted(e.what())));
    return exit_code(e.code());
  } catch (const ModelFileError& e) {
    log_line(kv("error", "Schema") + " " + kv("message", std::quoted(e.what())));
    return 3;
  } catch (const fs::filesystem_error& e) {
    log_line(kv("error", "Io") + " " + kv("message", std::quoted(e.what())));
    return 3;
  } catch (const std::exception& e) {
    log_line(kv("error", "Internal") + " " + kv("message", std::quoted(e.what())));
    return 1;
  }
  return 2;
}
