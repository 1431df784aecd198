#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mfl/protocol.hpp"
#include "mfl/sourcegen.hpp"

using namespace mfl;

namespace {

SearchConfig small_search() {
  SearchConfig search;
  search.grid = make_param_grid({10.0, 100.0}, {0.1, 1.0}, {0.01});
  search.k_folds = 3;
  return search;
}

GridSpec grid8() {
  GridSpec g;
  g.n_f = 8;
  g.n_s = 8;
  return g;
}

Dataset noisy_target(double h, std::uint64_t seed) {
  return generate_synthetic_target(grid8(), {1.75, h}, SyntheticTargetConfig::fixture_for(h, seed));
}

DirectLearningCurve curve_of(const std::vector<double>& means) {
  DirectLearningCurve curve;
  for (std::size_t i = 0; i < means.size(); ++i) curve.points.push_back({10 * (i + 1), means[i], 0.01, 5, {}});
  return curve;
}

TransferSweepResult table_sweep() {
  TransferSweepResult sweep;
  sweep.baseline = {150, 0.104, 0.014, true};
  sweep.cells.push_back({6, 7, 42, 0.081, 0.004, 30, {}});
  sweep.cells.push_back({11, 6, 66, 0.075, 0.002, 30, {}});
  return sweep;
}

}  // namespace

TEST_CASE("default n grid") {
  CHECK(default_n_grid(127) == std::vector<std::size_t>{10, 20, 30, 40, 50, 60, 70});
  const auto big = default_n_grid(400);
  CHECK(big.front() == 10);
  CHECK(big.back() == 200);
  CHECK(big.size() == 20);
  CHECK(default_n_grid(55).empty());
}

TEST_CASE("learning curve has one point per n with the requested repetitions") {
  const Dataset target = noisy_target(1.2, 3);
  const DirectLearningCurve curve = direct_learning_curve(target, {10, 20}, 2, small_search(), 11, 1);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].n_train == 10);
  CHECK(curve.points[1].n_train == 20);
  for (const CurvePoint& p : curve.points) {
    CHECK(p.n_repetitions == 2);
    CHECK(p.mean_rmse > 0.0);
    CHECK(p.std_rmse >= 0.0);
  }
  CHECK(curve.disjoint_splits_checked == 4);
}

TEST_CASE("learning curve rejects bad n grids") {
  const Dataset target = noisy_target(1.2, 3);
  CHECK_THROWS_AS(direct_learning_curve(target, {}, 2, small_search(), 1), Error);
  CHECK_THROWS_AS(direct_learning_curve(target, {10, 10}, 2, small_search(), 1), Error);
  CHECK_THROWS_AS(direct_learning_curve(target, {10, target.size()}, 2, small_search(), 1), Error);
  CHECK_THROWS_AS(direct_learning_curve(target, {10}, 0, small_search(), 1), Error);
  try {
    direct_learning_curve(target, {20, 10}, 2, small_search(), 1);
    FAIL("expected InvalidGrid");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidGrid);
  }
}

TEST_CASE("learning curve is bitwise reproducible across job counts") {
  const Dataset target = noisy_target(0.85, 4);
  const auto a = direct_learning_curve(target, {10, 20, 30}, 6, small_search(), 99, 1);
  const auto b = direct_learning_curve(target, {10, 20, 30}, 6, small_search(), 99, 4);
  const auto c = direct_learning_curve(target, {10, 20, 30}, 6, small_search(), 100, 1);
  REQUIRE(a.points.size() == b.points.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].mean_rmse == b.points[i].mean_rmse);
    CHECK(a.points[i].std_rmse == b.points[i].std_rmse);
    any_diff = any_diff || a.points[i].mean_rmse != c.points[i].mean_rmse;
  }
  CHECK(any_diff);
}

TEST_CASE("noiseless identity target gives a non-increasing curve within one std") {
  const Dataset target = generate_synthetic_target(grid8(), {1.75, 0.7}, SyntheticTargetConfig::identity());
  const auto curve = direct_learning_curve(target, {10, 20, 30, 40}, 10, small_search(), 5, 1);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].mean_rmse <= curve.points[i - 1].mean_rmse + curve.points[i - 1].std_rmse);
  }
}

TEST_CASE("plateau detection") {
  const Baseline b = find_n_direct(curve_of({0.20, 0.10, 0.095, 0.0949, 0.0948}));
  CHECK(b.plateau_found);
  CHECK(b.n_direct == 30);
  CHECK(b.mean_rmse == 0.095);

  std::vector<double> steady{0.2};
  for (int i = 0; i < 6; ++i) steady.push_back(steady.back() * 0.9);
  const Baseline none = find_n_direct(curve_of(steady));
  CHECK_FALSE(none.plateau_found);
  CHECK(none.n_direct == 70);
  CHECK(none.mean_rmse == steady.back());

  // A worsening step counts as a sub-tolerance improvement.
  CHECK(find_n_direct(curve_of({0.1, 0.11, 0.12})).n_direct == 10);
  CHECK(find_n_direct(curve_of({0.2, 0.1, 0.099, 0.05, 0.0499, 0.0498})).n_direct == 40);

  try {
    find_n_direct(curve_of({0.2, 0.1}));
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooShort);
  }
}

TEST_CASE("default sub-grid list") {
  const std::vector<SubgridSize> expected{{2, 2}, {2, 3}, {3, 3}, {3, 4}};
  CHECK(default_subgrid_sizes(3, 4) == expected);
  const std::vector<SubgridSize> narrow{{2, 2}, {3, 3}};
  CHECK(default_subgrid_sizes(4, 3) == std::vector<SubgridSize>{{2, 2}, {2, 3}, {3, 3}});
  CHECK(default_subgrid_sizes(3, 3).size() == 3);
  (void)narrow;
}

TEST_CASE("reduction percentages reproduce the published table") {
  CHECK(std::round(sample_reduction_pct(150, 42)) == 72);
  CHECK(std::round(sample_reduction_pct(150, 66)) == 56);
  CHECK(std::round(sample_reduction_pct(150, 36)) == 76);
  CHECK(std::round(rmse_reduction_pct(0.104, 0.081)) == 22);
  CHECK(std::round(rmse_reduction_pct(0.056, 0.047)) == 16);
  CHECK(std::round(rmse_reduction_pct(0.059, 0.045)) == 24);
  CHECK(rmse_reduction_pct(0.104, 0.081) == doctest::Approx(22.115).epsilon(1e-4));
}

TEST_CASE("n_t selection picks the smallest qualifying cell") {
  const BenchmarkReport r = select_n_t(table_sweep(), 0.7);
  CHECK(r.achieved);
  CHECK(r.cell.n_t == 42);
  CHECK(r.cell.n_s == 6);
  CHECK(r.cell.n_f == 7);
  CHECK(r.sample_reduction_pct == doctest::Approx(72.0));
  CHECK(r.rmse_reduction_pct == doctest::Approx(22.115).epsilon(1e-4));
  CHECK(r.h == 0.7);

  TransferSweepResult tie = table_sweep();
  tie.cells.push_back({7, 6, 42, 0.080, 0.004, 30, {}});
  tie.cells.push_back({5, 9, 42, 0.090, 0.004, 30, {}});
  const BenchmarkReport t = select_n_t(tie, 0.7);
  CHECK(t.cell.n_s == 5);

  TransferSweepResult miss = table_sweep();
  miss.baseline.mean_rmse = 0.05;
  const BenchmarkReport m = select_n_t(miss, 0.7);
  CHECK_FALSE(m.achieved);
  CHECK(m.cell.n_t == 66);
  CHECK(m.rmse_reduction_pct < 0.0);

  CHECK_THROWS_AS(select_n_t(TransferSweepResult{}, 0.7), Error);
}

TEST_CASE("report json carries both reduction columns") {
  const nlohmann::json j = select_n_t(table_sweep(), 0.7);
  CHECK(j.at("n_direct") == 150);
  CHECK(j.at("n_t").at("total") == 42);
  CHECK(j.at("n_t").at("n_s") == 6);
  CHECK(j.at("n_t").at("n_f") == 7);
  CHECK(j.at("status") == "Achieved");
  CHECK(j.at("rmse_t_mm").at("mean").get<double>() == 0.081);
  CHECK(j.at("sample_reduction_pct").get<double>() == doctest::Approx(72.0));
}

TEST_CASE("single-cell sweep") {
  const double h = 0.85;
  const Dataset target = noisy_target(h, 2);
  const Dataset pool = generate_source_grid(grid8(), {1.75, h});
  SweepConfig cfg;
  cfg.subgrid_sizes = {{3, 3}};
  cfg.eval_reps = 3;
  cfg.n_iterations = 5;
  cfg.search = small_search();
  const Baseline baseline{20, 0.05, 0.01, true};
  const TransferSweepResult r = transfer_sweep(pool, target, baseline, cfg, 7, 1);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].n_s == 3);
  CHECK(r.cells[0].n_f == 3);
  CHECK(r.cells[0].n_t <= 9);
  CHECK(r.cells[0].n_t > 0);
  CHECK(r.cells[0].n_repetitions + 0 <= 3);
  CHECK(std::isfinite(r.cells[0].mean_rmse));
  CHECK(r.test_size == 20);
  CHECK(r.disjoint_splits_checked == 3);
}

TEST_CASE("sweep orders cells by actual target count and can stop early") {
  const double h = 0.7;
  const Dataset target = noisy_target(h, 2);
  const Dataset pool = generate_source_grid(grid8(), {1.75, h});
  SweepConfig cfg;
  cfg.subgrid_sizes = {{4, 4}, {2, 2}, {3, 3}};
  cfg.eval_reps = 2;
  cfg.n_iterations = 3;
  cfg.search = small_search();
  cfg.stop_at_first_qualifying = false;
  const TransferSweepResult r = transfer_sweep(pool, target, {20, 1e-9, 0.0, true}, cfg, 3, 1);
  REQUIRE(r.cells.size() == 3);
  for (std::size_t i = 1; i < r.cells.size(); ++i) CHECK(r.cells[i - 1].n_t <= r.cells[i].n_t);

  cfg.stop_at_first_qualifying = true;
  const TransferSweepResult first = transfer_sweep(pool, target, {20, 1e9, 0.0, true}, cfg, 3, 1);
  CHECK(first.cells.size() == 1);
}

TEST_CASE("sweep needs enough off-grid test samples") {
  const double h = 1.2;
  const Dataset target = noisy_target(h, 2);
  const Dataset pool = generate_source_grid(grid8(), {1.75, h});
  SweepConfig cfg;
  cfg.subgrid_sizes = {{2, 2}};
  cfg.eval_reps = 2;
  cfg.search = small_search();
  cfg.test_size = target.size();
  try {
    transfer_sweep(pool, target, {20, 0.05, 0.0, true}, cfg, 1, 1);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientData);
  }
  CHECK_THROWS_AS(transfer_sweep(Dataset{}, target, {20, 0.05, 0.0, true}, cfg, 1, 1), Error);
}

TEST_CASE("identity fixture: the smallest sub-grid inherits the source accuracy") {
  const double h = 0.7;
  const Dataset target = generate_synthetic_target(grid8(), {1.75, h}, SyntheticTargetConfig::identity());
  const Dataset pool = generate_source_grid(grid8(), {1.75, h});
  SweepConfig cfg;
  cfg.subgrid_sizes = {{2, 2}};
  cfg.eval_reps = 3;
  cfg.search.k_folds = 3;
  const TransferSweepResult r = transfer_sweep(pool, target, {30, 0.05, 0.0, true}, cfg, 1, 1);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].n_repetitions == 3);
  const Eigen::VectorXd y = target.targets();
  const double spread = std::sqrt((y.array() - y.mean()).square().mean());
  CHECK(r.cells[0].mean_rmse < 0.05 * spread);
}

TEST_CASE("benchmark is reproducible and writes consistent tables") {
  const double h = 1.2;
  const Dataset target = noisy_target(h, 6);
  const Dataset pool = generate_source_grid(grid8(), {1.75, h});
  BenchmarkConfig cfg;
  cfg.n_grid = {10, 15, 20};
  cfg.reps = 4;
  cfg.search = small_search();
  cfg.sweep.subgrid_sizes = {{2, 2}, {3, 3}};
  cfg.sweep.eval_reps = 3;
  cfg.sweep.n_iterations = 4;
  const BenchmarkResult a = run_benchmark(pool, target, cfg, 21, 1);
  const BenchmarkResult b = run_benchmark(pool, target, cfg, 21, 4);

  std::ostringstream ca, cb, sa, sb;
  write_curve_csv(ca, a.curve);
  write_curve_csv(cb, b.curve);
  write_sweep_csv(sa, a.sweep);
  write_sweep_csv(sb, b.sweep);
  CHECK(ca.str() == cb.str());
  CHECK(sa.str() == sb.str());
  CHECK(nlohmann::json(a.report).dump() == nlohmann::json(b.report).dump());

  CHECK(ca.str().rfind("n_train,mean_rmse_mm,std_rmse_mm,n_repetitions,c,gamma,epsilon\n", 0) == 0);
  CHECK(sa.str().rfind("n_s,n_f,n_t,mean_rmse_t_mm,std_rmse_t_mm,n_repetitions,n_direct,rmse_direct_mm", 0) == 0);
  const std::string curve_csv = ca.str();
  CHECK(std::count(curve_csv.begin(), curve_csv.end(), '\n') == 4);
  CHECK(a.curve.disjoint_splits_checked == 12);
  CHECK(a.sweep.disjoint_splits_checked == 3 * a.sweep.cells.size());
  CHECK(a.report.h == h);
  CHECK(a.report.baseline.n_direct == a.sweep.baseline.n_direct);
}

TEST_CASE("benchmark config json round trip") {
  BenchmarkConfig cfg;
  cfg.n_grid = {10, 20, 30};
  cfg.reps = 7;
  cfg.rel_tol = 0.02;
  cfg.search = small_search();
  cfg.sweep.subgrid_sizes = {{2, 3}};
  cfg.sweep.eval_reps = 5;
  cfg.sweep.loss = Loss::Square;
  const nlohmann::json j = cfg;
  const BenchmarkConfig back = j.get<BenchmarkConfig>();
  CHECK(back.n_grid == cfg.n_grid);
  CHECK(back.reps == 7);
  CHECK(back.rel_tol == 0.02);
  CHECK(back.search.grid.size() == 4);
  CHECK(back.search.k_folds == 3);
  CHECK(back.sweep.subgrid_sizes == cfg.sweep.subgrid_sizes);
  CHECK(back.sweep.eval_reps == 5);
  CHECK(back.sweep.loss == Loss::Square);
  CHECK(nlohmann::json(back).dump() == j.dump());
}
