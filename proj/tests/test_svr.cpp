#include "doctest.h"

#include <cmath>

#include "mfl/kernel.hpp"
#include "mfl/random.hpp"
#include "mfl/svr.hpp"
#include "qp_oracle.hpp"

using namespace mfl;

namespace {

struct Instance {
  Dataset data;
  std::vector<double> weights;
  SvrParams params;
};

Instance random_instance(Rng& rng, std::size_t n, bool random_weights) {
  Instance inst;
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 150.0 + 580.0 * (0.5 + 0.5 * std::tanh(standard_normal(rng)));
    const double s = 350.0 + 375.0 * (0.5 + 0.5 * std::tanh(standard_normal(rng)));
    const double w = 1.0 + 0.5 * std::sin(f / 120.0) + 0.3 * standard_normal(rng);
    samples.push_back({f, s, 0.7, std::max(w, 0.0)});
    inst.weights.push_back(random_weights ? 0.2 + std::abs(standard_normal(rng)) : 1.0);
  }
  inst.data = Dataset(std::move(samples));
  const double cs[] = {0.3, 1.0, 5.0};
  const double gs[] = {0.3, 1.0, 3.0};
  const double es[] = {0.0, 0.01, 0.1};
  inst.params = {cs[rng() % 3], es[rng() % 3], gs[rng() % 3]};
  return inst;
}

std::vector<oracle::Point> to_points(const Dataset& d) {
  std::vector<oracle::Point> pts;
  for (const Sample& s : d) pts.push_back({s.f, s.s, s.w});
  return pts;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd full_coefficients(const SvrModel& m, std::size_t n) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < m.support_indices.size(); ++k) {
    beta(static_cast<Eigen::Index>(m.support_indices[k])) = m.coefficients(static_cast<Eigen::Index>(k));
  }
  return beta;
}

SolverOptions tight() {
  SolverOptions o;
  o.tol = 1e-10;
  o.max_iterations = 1000000;
  return o;
}

}  // namespace

TEST_CASE("rbf kernel values") {
  Eigen::Vector2d x(0.3, -1.2), z(1.3, -1.2);
  CHECK(rbf_kernel(x, x, 2.5) == 1.0);
  CHECK(rbf_kernel(x, z, 1.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  Rng rng = make_rng(11);
  for (int k = 0; k < 100; ++k) {
    Eigen::Vector2d a(standard_normal(rng), standard_normal(rng));
    Eigen::Vector2d b(standard_normal(rng), standard_normal(rng));
    const double v = rbf_kernel(a, b, 0.7);
    CHECK(v == rbf_kernel(b, a, 0.7));
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("Gram matrices are symmetric positive semidefinite") {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 49);
    FeatureMatrix x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) x.row(i) << standard_normal(rng), standard_normal(rng);
    const Eigen::MatrixXd k = gram_matrix(x, 0.1 + std::abs(standard_normal(rng)));
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd jittered = k + 1e-10 * Eigen::MatrixXd::Identity(n, n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jittered);
    REQUIRE(ldlt.info() == Eigen::Success);
    CHECK(ldlt.vectorD().minCoeff() > 0.0);
  }
}

TEST_CASE("constant targets give a constant model") {
  std::vector<Sample> samples;
  for (int i = 0; i < 8; ++i) samples.push_back({200.0 + 30.0 * i, 400.0 + 17.0 * (i % 3), 0.85, 1.37});
  const Dataset d(std::move(samples));
  const SvrModel m = fit_svr(d, {10.0, 0.01, 1.0});
  CHECK(m.coefficients.size() == 0);
  CHECK(m.bias == doctest::Approx(1.37).epsilon(1e-14));
  CHECK(m.predict(321.0, 654.0) == doctest::Approx(1.37).epsilon(1e-14));
  CHECK(dual_objective(m, d) == 0.0);
}

TEST_CASE("six-point instance matches the QP oracle") {
  const Dataset d({{153, 350, 0.7, 1.10},
                   {300, 400, 0.7, 1.90},
                   {450, 725, 0.7, 1.55},
                   {600, 500, 0.7, 2.80},
                   {729, 600, 0.7, 2.95},
                   {500, 350, 0.7, 3.40}});
  const SvrParams params{2.0, 0.05, 0.8};
  const std::vector<double> w(6, 1.0);
  const oracle::Solution ref = oracle::solve(to_points(d), w, params.c, params.epsilon, params.gamma);
  const SvrModel m = fit_weighted_svr(d, as_vector(w), params, tight());

  CHECK(dual_objective(m, d) == doctest::Approx(ref.objective).epsilon(1e-6));
  const Scaler sc = fit_scaler(d);
  for (const Sample& s : d) {
    const Eigen::Vector2d z = sc.apply(s.f, s.s);
    CHECK(std::abs(m.predict(s.f, s.s) - ref.predict(z(0), z(1))) < 1e-6);
  }
}

TEST_CASE("randomized oracle equivalence on small instances") {
  Rng rng = make_rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 7);
    const Instance inst = random_instance(rng, n, trial % 2 == 1);
    const oracle::Solution ref =
        oracle::solve(to_points(inst.data), inst.weights, inst.params.c, inst.params.epsilon, inst.params.gamma);
    const SvrModel m = fit_weighted_svr(inst.data, as_vector(inst.weights), inst.params, tight());
    const double obj = dual_objective(m, inst.data);
    CAPTURE(trial);
    CHECK(std::abs(obj - ref.objective) <= 1e-6 * std::max(1.0, std::abs(ref.objective)));
    const Scaler sc = fit_scaler(inst.data);
    for (const Sample& s : inst.data) {
      const Eigen::Vector2d z = sc.apply(s.f, s.s);
      CHECK(std::abs(m.predict(s.f, s.s) - ref.predict(z(0), z(1))) < 1e-5);
    }
  }
}

TEST_CASE("dual feasibility at convergence") {
  Rng rng = make_rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng() % 40);
    const Instance inst = random_instance(rng, n, true);
    const SvrModel m = fit_weighted_svr(inst.data, as_vector(inst.weights), inst.params);
    const Eigen::VectorXd beta = full_coefficients(m, n);
    const Eigen::VectorXd w = as_vector(inst.weights);
    const Eigen::VectorXd box = inst.params.c * static_cast<double>(n) * (w / w.sum());
    for (Eigen::Index i = 0; i < beta.size(); ++i) CHECK(std::abs(beta(i)) <= box(i));
    CHECK(std::abs(beta.sum()) <= 1e-8 * inst.params.c * static_cast<double>(n));
    CHECK(m.max_violation <= 1e-3);
  }
}

TEST_CASE("dual objective increases monotonically along the solver path") {
  Rng rng = make_rng(5);
  const Instance inst = random_instance(rng, 40, true);
  SolverOptions o;
  o.record_objective = true;
  const SvrModel m = fit_weighted_svr(inst.data, as_vector(inst.weights), inst.params, o);
  REQUIRE(m.objective_trace.size() == m.iterations);
  REQUIRE(m.iterations > 1);
  for (std::size_t k = 1; k < m.objective_trace.size(); ++k) {
    CHECK(m.objective_trace[k] >= m.objective_trace[k - 1] - 1e-12 * std::abs(m.objective_trace[k - 1]));
  }
  CHECK(m.objective_trace.back() == doctest::Approx(dual_objective(m, inst.data)).epsilon(1e-9));
}

TEST_CASE("weights are scale free") {
  Rng rng = make_rng(8);
  const Instance inst = random_instance(rng, 25, true);
  const Eigen::VectorXd w = as_vector(inst.weights);
  const SvrModel a = fit_weighted_svr(inst.data, w, inst.params);
  const SvrModel b = fit_weighted_svr(inst.data, 2.0 * w, inst.params);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.bias == b.bias);
  CHECK(a.support_indices == b.support_indices);
  const SvrModel c = fit_weighted_svr(inst.data, 3.7 * w, inst.params, tight());
  const SvrModel d = fit_weighted_svr(inst.data, w, inst.params, tight());
  CHECK(std::abs(c.predict(400, 500) - d.predict(400, 500)) < 1e-8);
}

TEST_CASE("prediction is continuous") {
  Rng rng = make_rng(13);
  const Instance inst = random_instance(rng, 30, false);
  const SvrModel m = fit_svr(inst.data, inst.params);
  for (const Sample& s : inst.data) {
    const double df = 1e-6 * m.scaler.std_f;
    const double ds = 1e-6 * m.scaler.std_s;
    CHECK(std::abs(m.predict(s.f + df, s.s + ds) - m.predict(s.f, s.s)) < 1e-4);
  }
}

TEST_CASE("fit errors") {
  const Dataset d({{1, 1, 1, 1}, {2, 2, 1, 2}, {3, 1, 1, 0.5}});
  CHECK_THROWS_AS(fit_weighted_svr(d, Eigen::VectorXd::Ones(2), {}), Error);
  CHECK_THROWS_AS(fit_svr(Dataset({{1, 1, 1, 1}}), {}), Error);
  CHECK_THROWS_AS(fit_svr(d, {0.0, 0.1, 1.0}), Error);
  CHECK_THROWS_AS(fit_svr(d, {1.0, -0.1, 1.0}), Error);

  Rng rng = make_rng(21);
  const Instance inst = random_instance(rng, 30, false);
  SolverOptions capped;
  capped.max_iterations = 1;
  capped.tol = 1e-12;
  try {
    fit_svr(inst.data, {100.0, 0.0, 3.0}, capped);
    FAIL("expected DidNotConverge");
  } catch (const DidNotConverge& e) {
    CHECK(e.code() == Errc::DidNotConverge);
    CHECK(e.iterations() == 1);
    CHECK(e.max_violation() > 1e-12);
    CHECK(e.model().coefficients.size() > 0);
  }
}

TEST_CASE("model json round trip") {
  Rng rng = make_rng(31);
  const Instance inst = random_instance(rng, 20, true);
  const SvrModel m = fit_weighted_svr(inst.data, as_vector(inst.weights), inst.params);
  const nlohmann::json j = m;
  const SvrModel back = nlohmann::json::parse(j.dump()).get<SvrModel>();
  for (const Sample& s : inst.data) CHECK(std::abs(back.predict(s.f, s.s) - m.predict(s.f, s.s)) <= 1e-12);
}

TEST_CASE("grid search edge cases") {
  std::vector<Sample> samples;
  for (int i = 0; i < 12; ++i) samples.push_back({200.0 + 25.0 * i, 400.0 + 10.0 * (i % 4), 0.7, 2.5});
  const Dataset constant(std::move(samples));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(12);
  const auto grid = default_param_grid();
  CHECK(grid.size() == 48);
  const GridSearchResult r = grid_search_cv_detailed(constant, w, grid, 5, 3);
  CHECK(r.best_index == 0);
  CHECK(r.best == grid.front());
  for (double v : r.mean_rmse) CHECK(v == r.mean_rmse.front());

  const std::vector<SvrParams> single{{3.0, 0.02, 0.5}};
  CHECK(grid_search_cv(constant, w, single, 2, 1) == single.front());
  CHECK_THROWS_AS(grid_search_cv(constant, w, {}, 5, 1), Error);
  CHECK_THROWS_AS(grid_search_cv(constant.subset(std::vector<std::size_t>{0, 1, 2}), Eigen::VectorXd::Ones(3), grid, 5, 1), Error);
}

TEST_CASE("grid search recovers the kernel width of an RBF-generated surface") {
  // Targets are an RBF expansion with width 1 in standardized coordinates.
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) samples.push_back({100.0 + 10.0 * i, 300.0 + 20.0 * j, 0.7, 0.0});
  }
  const Dataset raw(samples);
  const Scaler sc = fit_scaler(raw);
  const Eigen::Vector2d centers[] = {{-1.0, -0.5}, {0.8, 0.9}, {0.2, -1.2}};
  const double amps[] = {1.5, -0.8, 0.6};
  for (Sample& s : samples) {
    const Eigen::Vector2d z = sc.apply(s.f, s.s);
    double y = 2.0;
    for (int c = 0; c < 3; ++c) y += amps[c] * rbf_kernel(z, centers[c], 1.0);
    s.w = y;
  }
  const Dataset d(std::move(samples));
  const std::vector<double> gammas{0.01, 0.1, 1.0, 10.0};
  const auto grid = make_param_grid({10.0, 100.0}, gammas, {0.001});
  const GridSearchResult r = grid_search_cv_detailed(d, Eigen::VectorXd::Ones(100), grid, 5, 17);
  std::size_t argmin = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (r.mean_rmse[g] < r.mean_rmse[argmin]) argmin = g;
  }
  CHECK(r.best_index == argmin);
  CHECK(r.best.gamma >= 0.1);
  CHECK(r.best.gamma <= 10.0);
}
