#ifndef MFL_PROTOCOL_HPP
#define MFL_PROTOCOL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mfl/dataset.hpp"
#include "mfl/svr.hpp"
#include "mfl/transfer.hpp"

namespace mfl {

// Receives one key=value progress record per call.
using ProgressLog = std::function<void(const std::string&)>;

struct SearchConfig {
  std::vector<SvrParams> grid = default_param_grid();
  std::size_t k_folds = 5;
  SolverOptions solver;
};

struct CurvePoint {
  std::size_t n_train = 0;
  double mean_rmse = 0.0;  // mm
  double std_rmse = 0.0;   // mm, population
  std::size_t n_repetitions = 0;
  SvrParams params;        // chosen once per point
};

struct DirectLearningCurve {
  std::vector<CurvePoint> points;
  std::size_t disjoint_splits_checked = 0;
};

/// n = 10, 20, ... up to min(200, target_size - 50).
std::vector<std::size_t> default_n_grid(std::size_t target_size);

/// For each n: pick hyperparameters by k-fold CV on the first split's
/// training set, then train on `reps` random splits (n train, rest test).
/// Repetition r of point i draws from the stream (seed, i, r).
DirectLearningCurve direct_learning_curve(const Dataset& target, const std::vector<std::size_t>& n_grid,
                                          std::size_t reps, const SearchConfig& search, std::uint64_t seed,
                                          std::size_t jobs = 0, const ProgressLog& log = {});

struct Baseline {
  std::size_t n_direct = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  bool plateau_found = true;
};

/// First point after which the next two steps each improve the mean RMSE by
/// less than rel_tol (relative). Falls back to the last point with
/// plateau_found = false. Throws TooShort for fewer than 3 points.
Baseline find_n_direct(const DirectLearningCurve& curve, double rel_tol = 0.01);

struct SubgridSize {
  std::size_t n_s = 0;
  std::size_t n_f = 0;

  friend bool operator==(const SubgridSize&, const SubgridSize&) = default;
};

/// (k, k) and (k, k + 1) for k = 2, 3, ... within the level counts.
std::vector<SubgridSize> default_subgrid_sizes(std::size_t s_levels, std::size_t f_levels);

struct SweepConfig {
  std::vector<SubgridSize> subgrid_sizes;
  std::size_t eval_reps = 30;
  std::size_t test_size = 0;  // 0 selects baseline.n_direct
  std::size_t n_iterations = 30;
  Loss loss = Loss::Linear;
  SearchConfig search;
  bool stop_at_first_qualifying = true;
};

struct SweepCell {
  std::size_t n_s = 0;
  std::size_t n_f = 0;
  std::size_t n_t = 0;  // target samples actually on the sub-grid
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  std::size_t n_repetitions = 0;
  SvrParams params;
};

struct TransferSweepResult {
  std::vector<SweepCell> cells;  // evaluation order
  Baseline baseline;
  std::size_t test_size = 0;
  std::size_t disjoint_splits_checked = 0;
};

/// Cells are evaluated by ascending on-grid target count (then fewer S
/// levels, then list order). Per repetition a source subset of baseline
/// n_direct samples and a test set drawn from the off-grid target samples
/// are resampled. Throws InsufficientData when a cell leaves fewer than
/// test_size off-grid samples.
TransferSweepResult transfer_sweep(const Dataset& source_pool, const Dataset& target, const Baseline& baseline,
                                   const SweepConfig& config, std::uint64_t seed, std::size_t jobs = 0,
                                   const ProgressLog& log = {});

double sample_reduction_pct(double n_direct, double n_t);
double rmse_reduction_pct(double rmse_direct, double rmse_t);

struct BenchmarkReport {
  double h = 0.0;
  Baseline baseline;
  SweepCell cell;
  double sample_reduction_pct = 0.0;
  double rmse_reduction_pct = 0.0;
  bool achieved = false;
};

/// Smallest qualifying cell (mean RMSE_t <= baseline mean); otherwise the
/// lowest-error cell with achieved = false.
BenchmarkReport select_n_t(const TransferSweepResult& sweep, double h);

struct BenchmarkConfig {
  std::vector<std::size_t> n_grid;  // empty selects default_n_grid
  std::size_t reps = 1000;
  double rel_tol = 0.01;
  SearchConfig search;              // used by both the curve and the sweep
  SweepConfig sweep;                // empty subgrid_sizes selects defaults
};

struct BenchmarkResult {
  DirectLearningCurve curve;
  TransferSweepResult sweep;
  BenchmarkReport report;
};

/// Full protocol on one h: learning curve, plateau, sweep, selection.
BenchmarkResult run_benchmark(const Dataset& source_pool, const Dataset& target, const BenchmarkConfig& config,
                              std::uint64_t seed, std::size_t jobs = 0, const ProgressLog& log = {});

void write_curve_csv(std::ostream& out, const DirectLearningCurve& curve);
void write_sweep_csv(std::ostream& out, const TransferSweepResult& sweep);

void to_json(nlohmann::json& j, const BenchmarkReport& report);
void to_json(nlohmann::json& j, const SearchConfig& search);
void from_json(const nlohmann::json& j, SearchConfig& search);
void to_json(nlohmann::json& j, const BenchmarkConfig& config);
void from_json(const nlohmann::json& j, BenchmarkConfig& config);

}  // namespace mfl

#endif  // MFL_PROTOCOL_HPP
