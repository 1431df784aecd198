#include "mfl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mfl/parallel.hpp"
#include "mfl/random.hpp"

namespace mfl {

namespace {

// Stream keys under a point/cell index; repetition streams use the
// repetition number directly.
constexpr std::uint64_t kSearchStream = 0xC0FFEE;
constexpr std::uint64_t kSourceStream = 1;
constexpr std::uint64_t kTestStream = 2;

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

// Aggregated in repetition order.
Moments population_moments(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(var / n);
  return m;
}

// Repetitions whose fit hit the solver's iteration cap are left as NaN and
// excluded; an all-failed point reports an infinite mean.
struct Completed {
  Moments moments;
  std::size_t count = 0;
  std::size_t failed = 0;
};

Completed completed_moments(const std::vector<double>& errors) {
  std::vector<double> done;
  for (double e : errors) {
    if (!std::isnan(e)) done.push_back(e);
  }
  Completed c;
  c.count = done.size();
  c.failed = errors.size() - done.size();
  c.moments = population_moments(done);
  if (done.empty()) c.moments.mean = c.moments.std = std::numeric_limits<double>::infinity();
  return c;
}

void ensure_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> sa = a;
  std::vector<std::size_t> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<std::size_t> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  if (!common.empty()) throw std::logic_error("train and test sets overlap at index " + std::to_string(common[0]));
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

Eigen::VectorXd uniform_weights(std::size_t n) { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)); }

}  // namespace

std::vector<std::size_t> default_n_grid(std::size_t target_size) {
  std::vector<std::size_t> grid;
  const std::size_t cap = target_size > 50 ? std::min<std::size_t>(200, target_size - 50) : 0;
  for (std::size_t n = 10; n <= cap; n += 10) grid.push_back(n);
  return grid;
}

DirectLearningCurve direct_learning_curve(const Dataset& target, const std::vector<std::size_t>& n_grid,
                                          std::size_t reps, const SearchConfig& search, std::uint64_t seed,
                                          std::size_t jobs, const ProgressLog& log) {
  if (n_grid.empty() || reps == 0) throw Error(Errc::InvalidGrid, "learning curve needs n values and reps >= 1");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < search.k_folds || n_grid[i] >= target.size() || (i > 0 && n_grid[i] <= n_grid[i - 1])) {
      throw Error(Errc::InvalidGrid, "n values must increase strictly within [k_folds, |target|); got " +
                                         std::to_string(n_grid[i]) + " for " + std::to_string(target.size()) +
                                         " samples");
    }
  }

  DirectLearningCurve curve;
  for (std::size_t point = 0; point < n_grid.size(); ++point) {
    const std::size_t n = n_grid[point];
    const Split first = random_split(target, n, derive_seed(seed, {point, 0}));
    const SvrParams params = grid_search_cv(first.train, uniform_weights(n), search.grid, search.k_folds,
                                            derive_seed(seed, {point, kSearchStream}), search.solver);

    std::vector<double> errors(reps);
    parallel_for(reps, jobs, [&](std::size_t rep) {
      const Split split = random_split(target, n, derive_seed(seed, {point, rep}));
      ensure_disjoint(split.train_indices, split.test_indices);
      try {
        const SvrModel model = fit_svr(split.train, params, search.solver);
        errors[rep] = rmse(model.predict(split.test), split.test.targets());
      } catch (const DidNotConverge&) {
        errors[rep] = std::numeric_limits<double>::quiet_NaN();
      }
    });
    curve.disjoint_splits_checked += reps;

    const Completed done = completed_moments(errors);
    const Moments& m = done.moments;
    curve.points.push_back({n, m.mean, m.std, done.count, params});
    if (log) {
      log("event=curve_point n_train=" + std::to_string(n) + " mean_rmse_mm=" + fmt(m.mean) +
          " std_rmse_mm=" + fmt(m.std) + " reps=" + std::to_string(done.count) +
          " failed=" + std::to_string(done.failed) + " c=" + fmt(params.c) +
          " gamma=" + fmt(params.gamma) + " epsilon=" + fmt(params.epsilon));
    }
  }
  return curve;
}

Baseline find_n_direct(const DirectLearningCurve& curve, double rel_tol) {
  const auto& pts = curve.points;
  if (pts.size() < 3) throw Error(Errc::TooShort, "plateau detection needs at least 3 curve points");
  const auto improvement = [&](std::size_t i) { return (pts[i].mean_rmse - pts[i + 1].mean_rmse) / pts[i].mean_rmse; };
  for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
    if (improvement(i) < rel_tol && improvement(i + 1) < rel_tol) {
      return {pts[i].n_train, pts[i].mean_rmse, pts[i].std_rmse, true};
    }
  }
  return {pts.back().n_train, pts.back().mean_rmse, pts.back().std_rmse, false};
}

std::vector<SubgridSize> default_subgrid_sizes(std::size_t s_levels, std::size_t f_levels) {
  std::vector<SubgridSize> sizes;
  for (std::size_t k = 2; k <= std::min(s_levels, f_levels); ++k) {
    sizes.push_back({k, k});
    if (k + 1 <= f_levels) sizes.push_back({k, k + 1});
  }
  return sizes;
}

TransferSweepResult transfer_sweep(const Dataset& source_pool, const Dataset& target, const Baseline& baseline,
                                   const SweepConfig& config, std::uint64_t seed, std::size_t jobs,
                                   const ProgressLog& log) {
  if (source_pool.empty()) throw Error(Errc::InsufficientData, "source pool is empty");
  if (config.subgrid_sizes.empty()) throw Error(Errc::InvalidGrid, "no sub-grid sizes to sweep");
  if (config.eval_reps == 0) throw Error(Errc::InvalidConfig, "eval_reps must be >= 1");

  TransferSweepResult result;
  result.baseline = baseline;
  result.test_size = config.test_size > 0 ? config.test_size : baseline.n_direct;
  const std::size_t source_size = std::min(baseline.n_direct, source_pool.size());

  struct Candidate {
    SubgridSize size;
    std::vector<std::size_t> on_grid;
    std::vector<std::size_t> off_grid;
    std::size_t order = 0;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < config.subgrid_sizes.size(); ++k) {
    Candidate c;
    c.size = config.subgrid_sizes[k];
    c.on_grid = subgrid_indices(target, c.size.n_s, c.size.n_f);
    std::size_t next = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (next < c.on_grid.size() && c.on_grid[next] == i) ++next;
      else c.off_grid.push_back(i);
    }
    if (c.off_grid.size() < result.test_size) {
      throw Error(Errc::InsufficientData, "sub-grid " + std::to_string(c.size.n_s) + "x" +
                                              std::to_string(c.size.n_f) + " leaves " +
                                              std::to_string(c.off_grid.size()) + " test candidates, need " +
                                              std::to_string(result.test_size));
    }
    c.order = k;
    if (c.on_grid.empty()) continue;
    candidates.push_back(std::move(c));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.on_grid.size() != b.on_grid.size()) return a.on_grid.size() < b.on_grid.size();
    return a.size.n_s < b.size.n_s;
  });

  for (const Candidate& cand : candidates) {
    const Dataset train_target = target.subset(cand.on_grid);
    const auto cell_key = static_cast<std::uint64_t>(cand.order);

    const auto draw_source = [&](std::size_t rep) {
      Rng rng = make_rng(seed, {cell_key, rep, kSourceStream});
      return source_pool.subset(sample_indices(source_pool.size(), source_size, rng));
    };

    const Dataset first_union = concat(draw_source(0), train_target);
    const SvrParams params =
        grid_search_cv(first_union, uniform_weights(first_union.size()), config.search.grid, config.search.k_folds,
                       derive_seed(seed, {cell_key, kSearchStream}), config.search.solver);
    TransferConfig tc;
    tc.n_iterations = config.n_iterations;
    tc.loss = config.loss;
    tc.svr_params = params;
    tc.tol = config.search.solver.tol;
    tc.max_iterations = config.search.solver.max_iterations;

    std::vector<double> errors(config.eval_reps);
    parallel_for(config.eval_reps, jobs, [&](std::size_t rep) {
      const Dataset source = draw_source(rep);
      Rng rng = make_rng(seed, {cell_key, rep, kTestStream});
      std::vector<std::size_t> test_idx;
      for (std::size_t k : sample_indices(cand.off_grid.size(), result.test_size, rng)) {
        test_idx.push_back(cand.off_grid[k]);
      }
      ensure_disjoint(cand.on_grid, test_idx);
      const Dataset test = target.subset(test_idx);
      try {
        const TransferEnsemble ensemble = fit_tradaboost_r2(source, train_target, tc);
        errors[rep] = rmse(ensemble.predict(test), test.targets());
      } catch (const EnsembleEmpty& e) {
        // Boosting stopped before storing a model; the first hypothesis
        // stands alone, as in AdaBoost.R2.
        errors[rep] = rmse(e.first_model().predict(test), test.targets());
      } catch (const DidNotConverge&) {
        errors[rep] = std::numeric_limits<double>::quiet_NaN();
      }
    });
    result.disjoint_splits_checked += config.eval_reps;

    const Completed done = completed_moments(errors);
    const Moments& m = done.moments;
    result.cells.push_back({cand.size.n_s, cand.size.n_f, cand.on_grid.size(), m.mean, m.std, done.count, params});
    if (log) {
      log("event=sweep_cell n_s=" + std::to_string(cand.size.n_s) + " n_f=" + std::to_string(cand.size.n_f) +
          " n_t=" + std::to_string(cand.on_grid.size()) + " mean_rmse_t_mm=" + fmt(m.mean) +
          " std_rmse_t_mm=" + fmt(m.std) + " reps=" + std::to_string(done.count) +
          " failed=" + std::to_string(done.failed) + " rmse_direct_mm=" + fmt(baseline.mean_rmse));
    }
    if (config.stop_at_first_qualifying && m.mean <= baseline.mean_rmse) break;
  }
  return result;
}

double sample_reduction_pct(double n_direct, double n_t) { return (n_direct - n_t) / n_direct * 100.0; }

double rmse_reduction_pct(double rmse_direct, double rmse_t) { return (rmse_direct - rmse_t) / rmse_direct * 100.0; }

BenchmarkReport select_n_t(const TransferSweepResult& sweep, double h) {
  if (sweep.cells.empty()) throw Error(Errc::InsufficientData, "sweep produced no cells");
  BenchmarkReport report;
  report.h = h;
  report.baseline = sweep.baseline;

  const SweepCell* chosen = nullptr;
  for (const SweepCell& cell : sweep.cells) {
    if (cell.mean_rmse > sweep.baseline.mean_rmse) continue;
    if (chosen == nullptr || cell.n_t < chosen->n_t || (cell.n_t == chosen->n_t && cell.n_s < chosen->n_s)) {
      chosen = &cell;
    }
  }
  report.achieved = chosen != nullptr;
  if (chosen == nullptr) {
    chosen = &sweep.cells.front();
    for (const SweepCell& cell : sweep.cells) {
      if (cell.mean_rmse < chosen->mean_rmse) chosen = &cell;
    }
  }
  report.cell = *chosen;
  report.sample_reduction_pct =
      sample_reduction_pct(static_cast<double>(sweep.baseline.n_direct), static_cast<double>(chosen->n_t));
  report.rmse_reduction_pct = rmse_reduction_pct(sweep.baseline.mean_rmse, chosen->mean_rmse);
  return report;
}

BenchmarkResult run_benchmark(const Dataset& source_pool, const Dataset& target, const BenchmarkConfig& config,
                              std::uint64_t seed, std::size_t jobs, const ProgressLog& log) {
  const auto h = target.common_h();
  if (!h) throw Error(Errc::InsufficientData, "target samples must share a single h");
  if (source_pool.common_h() != h) throw Error(Errc::InsufficientData, "source pool h differs from target h");

  BenchmarkResult result;
  const auto n_grid = config.n_grid.empty() ? default_n_grid(target.size()) : config.n_grid;
  if (n_grid.size() < 3) {
    throw Error(Errc::InsufficientData, "target of " + std::to_string(target.size()) +
                                            " samples is too small for a learning curve");
  }
  result.curve = direct_learning_curve(target, n_grid, config.reps, config.search, derive_seed(seed, {1}), jobs, log);
  const Baseline baseline = find_n_direct(result.curve, config.rel_tol);
  if (log) {
    log("event=baseline n_direct=" + std::to_string(baseline.n_direct) + " rmse_direct_mm=" +
        fmt(baseline.mean_rmse) + " plateau=" + (baseline.plateau_found ? "1" : "0"));
  }

  SweepConfig sweep = config.sweep;
  sweep.search = config.search;
  const std::size_t test_size = sweep.test_size > 0 ? sweep.test_size : baseline.n_direct;
  if (sweep.subgrid_sizes.empty()) {
    const GridLevels levels = grid_levels(target);
    sweep.subgrid_sizes = default_subgrid_sizes(levels.s.size(), levels.f.size());
  }
  // Sub-grids too large to leave a full test set are dropped.
  std::erase_if(sweep.subgrid_sizes, [&](const SubgridSize& size) {
    return target.size() - subgrid_indices(target, size.n_s, size.n_f).size() < test_size;
  });
  if (sweep.subgrid_sizes.empty()) {
    throw Error(Errc::InsufficientData, "no sub-grid leaves " + std::to_string(test_size) + " test samples");
  }
  result.sweep = transfer_sweep(source_pool, target, baseline, sweep, derive_seed(seed, {2}), jobs, log);
  result.report = select_n_t(result.sweep, *h);
  return result;
}

void write_curve_csv(std::ostream& out, const DirectLearningCurve& curve) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "n_train,mean_rmse_mm,std_rmse_mm,n_repetitions,c,gamma,epsilon\n";
  for (const CurvePoint& p : curve.points) {
    buf << p.n_train << ',' << p.mean_rmse << ',' << p.std_rmse << ',' << p.n_repetitions << ',' << p.params.c
        << ',' << p.params.gamma << ',' << p.params.epsilon << '\n';
  }
  out << buf.str();
}

void write_sweep_csv(std::ostream& out, const TransferSweepResult& sweep) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "n_s,n_f,n_t,mean_rmse_t_mm,std_rmse_t_mm,n_repetitions,n_direct,rmse_direct_mm,c,gamma,epsilon\n";
  for (const SweepCell& c : sweep.cells) {
    buf << c.n_s << ',' << c.n_f << ',' << c.n_t << ',' << c.mean_rmse << ',' << c.std_rmse << ','
        << c.n_repetitions << ',' << sweep.baseline.n_direct << ',' << sweep.baseline.mean_rmse << ',' << c.params.c
        << ',' << c.params.gamma << ',' << c.params.epsilon << '\n';
  }
  out << buf.str();
}

void to_json(nlohmann::json& j, const BenchmarkReport& r) {
  j = nlohmann::json{
      {"h_mm", r.h},
      {"n_direct", r.baseline.n_direct},
      {"rmse_direct_mm", {{"mean", r.baseline.mean_rmse}, {"std", r.baseline.std_rmse}}},
      {"plateau_found", r.baseline.plateau_found},
      {"n_t", {{"n_s", r.cell.n_s}, {"n_f", r.cell.n_f}, {"total", r.cell.n_t}}},
      {"rmse_t_mm", {{"mean", r.cell.mean_rmse}, {"std", r.cell.std_rmse}}},
      {"sample_reduction_pct", r.sample_reduction_pct},
      {"rmse_reduction_pct", r.rmse_reduction_pct},
      {"achieved", r.achieved},
      {"status", r.achieved ? "Achieved" : "NotAchieved"},
  };
}

void to_json(nlohmann::json& j, const SearchConfig& search) {
  j = nlohmann::json{{"grid", search.grid},
                     {"k_folds", search.k_folds},
                     {"tol", search.solver.tol},
                     {"max_iterations", search.solver.max_iterations}};
}

void from_json(const nlohmann::json& j, SearchConfig& search) {
  if (j.contains("grid")) search.grid = j.at("grid").get<std::vector<SvrParams>>();
  search.k_folds = j.value("k_folds", search.k_folds);
  search.solver.tol = j.value("tol", search.solver.tol);
  search.solver.max_iterations = j.value("max_iterations", search.solver.max_iterations);
}

void to_json(nlohmann::json& j, const BenchmarkConfig& config) {
  nlohmann::json sizes = nlohmann::json::array();
  for (const SubgridSize& s : config.sweep.subgrid_sizes) sizes.push_back({s.n_s, s.n_f});
  j = nlohmann::json{{"n_grid", config.n_grid},
                     {"reps", config.reps},
                     {"rel_tol", config.rel_tol},
                     {"search", config.search},
                     {"sweep",
                      {{"subgrid_sizes", std::move(sizes)},
                       {"eval_reps", config.sweep.eval_reps},
                       {"test_size", config.sweep.test_size},
                       {"n_iterations", config.sweep.n_iterations},
                       {"loss", to_string(config.sweep.loss)},
                       {"stop_at_first_qualifying", config.sweep.stop_at_first_qualifying}}}};
}

void from_json(const nlohmann::json& j, BenchmarkConfig& config) {
  if (j.contains("n_grid")) config.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
  config.reps = j.value("reps", config.reps);
  config.rel_tol = j.value("rel_tol", config.rel_tol);
  if (j.contains("search")) {
    from_json(j.at("search"), config.search);
    config.sweep.search = config.search;
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (s.contains("subgrid_sizes")) {
      config.sweep.subgrid_sizes.clear();
      for (const auto& pair : s.at("subgrid_sizes")) {
        config.sweep.subgrid_sizes.push_back({pair.at(0).get<std::size_t>(), pair.at(1).get<std::size_t>()});
      }
    }
    config.sweep.eval_reps = s.value("eval_reps", config.sweep.eval_reps);
    config.sweep.test_size = s.value("test_size", config.sweep.test_size);
    config.sweep.n_iterations = s.value("n_iterations", config.sweep.n_iterations);
    if (s.contains("loss")) config.sweep.loss = parse_loss(s.at("loss").get<std::string>());
    config.sweep.stop_at_first_qualifying = s.value("stop_at_first_qualifying", config.sweep.stop_at_first_qualifying);
  }
}

}  // namespace mfl
