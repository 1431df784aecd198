#include "mfl/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfl/kernel.hpp"
#include "mfl/random.hpp"

namespace mfl {

void SvrParams::validate() const {
  if (!(c > 0.0) || !(gamma > 0.0) || !(epsilon >= 0.0) || !std::isfinite(c) || !std::isfinite(gamma) ||
      !std::isfinite(epsilon)) {
    throw Error(Errc::InvalidParams, "SVR params need c > 0, gamma > 0, epsilon >= 0 (got c=" + std::to_string(c) +
                                         ", gamma=" + std::to_string(gamma) + ", epsilon=" + std::to_string(epsilon) +
                                         ")");
  }
}

double SvrModel::predict(double f, double s) const {
  const Eigen::Vector2d x = scaler.apply(f, s);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    sum += coefficients(i) * rbf_kernel(support_vectors.row(i).transpose(), x, params.gamma);
  }
  return target_scale * sum + bias;
}

Eigen::VectorXd SvrModel::predict_raw(const FeatureMatrix& raw) const {
  Eigen::VectorXd out(raw.rows());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) out(r) = predict(raw(r, 0), raw(r, 1));
  return out;
}

Eigen::VectorXd SvrModel::predict(const Dataset& data) const { return predict_raw(data.features()); }

DidNotConverge::DidNotConverge(SvrModel model, std::size_t iterations, double max_violation)
    : Error(Errc::DidNotConverge, "SMO stopped after " + std::to_string(iterations) +
                                      " iterations with max KKT violation " + std::to_string(max_violation)),
      model_(std::move(model)),
      iterations_(iterations),
      max_violation_(max_violation) {}

SvrProblem::SvrProblem(const Dataset& train, double gamma) : gamma_(gamma) {
  if (train.size() < 2) throw Error(Errc::TooFewSamples, "SVR needs at least 2 training samples");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(Errc::InvalidParams, "gamma must be positive");
  scaler_ = fit_scaler(train);
  scaled_ = scaler_.apply(train.features());
  const Eigen::VectorXd y = train.targets();
  target_mean_ = y.mean();
  const double sd = std::sqrt((y.array() - target_mean_).square().mean());
  target_scale_ = sd > 0.0 ? sd : 1.0;
  targets_ = (y.array() - target_mean_) / target_scale_;
  if (train.size() <= kDenseGramLimit) gram_ = gram_matrix(scaled_, gamma_);
}

Eigen::VectorXd SvrProblem::kernel_column(std::size_t i) const {
  const auto col = static_cast<Eigen::Index>(i);
  if (gram_) return gram_->col(col);
  Eigen::VectorXd k(scaled_.rows());
  for (Eigen::Index r = 0; r < scaled_.rows(); ++r) k(r) = rbf_kernel(scaled_.row(r), scaled_.row(col), gamma_);
  return k;
}

namespace {

// SMO on the 2N-variable form of the epsilon-SVR dual:
//   min 1/2 a'Qa + p'a   s.t. y'a = 0, 0 <= a_k <= C_k
// with a = (alpha, alpha*), y = (+1.., -1..), p = (eps - t, eps + t) and
// Q_kl = y_k y_l K(k mod N, l mod N). The first working index is the
// maximal violator; the second maximizes the second-order gain among
// violating partners.
class SmoSolver {
 public:
  SmoSolver(const SvrProblem& problem, const Eigen::VectorXd& box, double epsilon, const SolverOptions& options)
      : problem_(problem), n_(problem.size()), options_(options) {
    const auto l = static_cast<Eigen::Index>(2 * n_);
    alpha_ = Eigen::VectorXd::Zero(l);
    upper_.resize(l);
    sign_.resize(l);
    grad_.resize(l);
    linear_.resize(l);
    const Eigen::VectorXd& t = problem.targets();
    for (std::size_t i = 0; i < n_; ++i) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(i + n_);
      upper_(a) = upper_(b) = box(a);
      sign_(a) = 1.0;
      sign_(b) = -1.0;
      linear_(a) = epsilon - t(a);
      linear_(b) = epsilon + t(a);
    }
    grad_ = linear_;
  }

  // Clips a previous solution into the current box, removes the surplus on
  // the heavier side of the equality constraint in index order, then
  // rebuilds the gradient.
  void warm_start(const Eigen::VectorXd& previous) {
    const auto n = static_cast<Eigen::Index>(n_);
    if (previous.size() != 2 * n) throw Error(Errc::LengthMismatch, "warm start does not match the problem size");
    alpha_ = previous.cwiseMax(0.0).cwiseMin(upper_);
    double surplus = alpha_.head(n).sum() - alpha_.tail(n).sum();
    const Eigen::Index offset = surplus > 0.0 ? 0 : n;
    surplus = std::abs(surplus);
    for (Eigen::Index k = offset; k < offset + n && surplus > 0.0; ++k) {
      const double take = std::min(alpha_(k), surplus);
      alpha_(k) -= take;
      surplus -= take;
    }
    const Eigen::VectorXd beta = coefficients();
    Eigen::VectorXd kb = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd storage;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (beta(k) == 0.0) continue;
      const double* col = kernel_column(k, storage);
      for (Eigen::Index t = 0; t < n; ++t) kb(t) += beta(k) * col[t];
    }
    grad_.head(n) = linear_.head(n) + kb;
    grad_.tail(n) = linear_.tail(n) - kb;
  }

  Eigen::VectorXd dual() const { return alpha_; }

  void run() {
    while (iterations_ < options_.max_iterations) {
      std::size_t i = 0;
      std::size_t j = 0;
      if (!select_working_set(i, j)) {
        converged_ = true;
        break;
      }
      update_pair(i, j);
      ++iterations_;
      if (options_.record_objective) trace_.push_back(-primal_value());
    }
    if (!converged_) {
      std::size_t i = 0;
      std::size_t j = 0;
      converged_ = !select_working_set(i, j);
    }
  }

  bool converged() const noexcept { return converged_; }
  std::size_t iterations() const noexcept { return iterations_; }
  double violation() const noexcept { return violation_; }
  std::vector<double> take_trace() { return std::move(trace_); }

  Eigen::VectorXd coefficients() const {
    const auto n = static_cast<Eigen::Index>(n_);
    return alpha_.head(n) - alpha_.tail(n);
  }

  // rho such that f(x) = sum beta_i K(x_i, x) - rho on centered targets.
  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (Eigen::Index k = 0; k < alpha_.size(); ++k) {
      const double yg = sign_(k) * grad_(k);
      if (at_upper(k)) {
        if (sign_(k) < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (at_lower(k)) {
        if (sign_(k) > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    if (n_free > 0) return sum_free / static_cast<double>(n_free);
    return (ub + lb) / 2.0;
  }

 private:
  bool at_upper(Eigen::Index k) const { return alpha_(k) >= upper_(k); }
  bool at_lower(Eigen::Index k) const { return alpha_(k) <= 0.0; }

  // Kernel column of the sample behind variable k, without copying when the
  // Gram matrix is dense.
  const double* kernel_column(Eigen::Index k, Eigen::VectorXd& storage) const {
    const auto sample = static_cast<Eigen::Index>(static_cast<std::size_t>(k) % n_);
    if (const Eigen::MatrixXd* gram = problem_.dense_gram()) return gram->col(sample).data();
    storage = problem_.kernel_column(static_cast<std::size_t>(sample));
    return storage.data();
  }

  // Q_kt = y_k y_t K(k mod N, t mod N).
  double q(const double* kcol, Eigen::Index k, Eigen::Index t) const {
    return sign_(k) * sign_(t) * kcol[static_cast<std::size_t>(t) % n_];
  }

  bool select_working_set(std::size_t& out_i, std::size_t& out_j) {
    constexpr double kTau = 1e-12;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index gmax_idx = -1;
    for (Eigen::Index t = 0; t < alpha_.size(); ++t) {
      if (sign_(t) > 0) {
        if (!at_upper(t) && -grad_(t) >= gmax) {
          gmax = -grad_(t);
          gmax_idx = t;
        }
      } else if (!at_lower(t) && grad_(t) >= gmax) {
        gmax = grad_(t);
        gmax_idx = t;
      }
    }
    if (gmax_idx < 0) {
      violation_ = 0.0;
      return false;
    }
    ki_ptr_ = kernel_column(gmax_idx, ki_);
    ki_idx_ = gmax_idx;
    const double* ki = ki_ptr_;
    Eigen::Index gmin_idx = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < alpha_.size(); ++t) {
      if (sign_(t) > 0) {
        if (!at_lower(t)) {
          const double diff = gmax + grad_(t);
          gmax2 = std::max(gmax2, grad_(t));
          if (diff > 0.0) {
            double quad = 2.0 - 2.0 * q(ki, gmax_idx, t);
            if (quad <= 0.0) quad = kTau;
            const double gain = -(diff * diff) / quad;
            if (gain <= best) {
              gmin_idx = t;
              best = gain;
            }
          }
        }
      } else if (!at_upper(t)) {
        const double diff = gmax - grad_(t);
        gmax2 = std::max(gmax2, -grad_(t));
        if (diff > 0.0) {
          double quad = 2.0 + 2.0 * q(ki, gmax_idx, t);
          if (quad <= 0.0) quad = kTau;
          const double gain = -(diff * diff) / quad;
          if (gain <= best) {
            gmin_idx = t;
            best = gain;
          }
        }
      }
    }
    violation_ = gmax + gmax2;
    if (!std::isfinite(violation_)) violation_ = 0.0;
    if (violation_ <= options_.tol || gmin_idx < 0) return false;
    out_i = static_cast<std::size_t>(gmax_idx);
    out_j = static_cast<std::size_t>(gmin_idx);
    return true;
  }

  void update_pair(std::size_t ui, std::size_t uj) {
    constexpr double kTau = 1e-12;
    const auto i = static_cast<Eigen::Index>(ui);
    const auto j = static_cast<Eigen::Index>(uj);
    const double* ki = ki_idx_ == i ? ki_ptr_ : kernel_column(i, ki_);
    const double* kj = kernel_column(j, kj_);
    const double ci = upper_(i);
    const double cj = upper_(j);
    const double old_i = alpha_(i);
    const double old_j = alpha_(j);
    double ai = old_i;
    double aj = old_j;

    if (sign_(i) != sign_(j)) {
      double quad = 2.0 + 2.0 * q(ki, i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_(i) - grad_(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) {
          ai = ci;
          aj = ci - diff;
        }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * q(ki, i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_(i) - grad_(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) {
          ai = ci;
          aj = sum - ci;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) {
          aj = cj;
          ai = sum - cj;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    // Clipping above can leave a rounding residue outside the box.
    ai = std::clamp(ai, 0.0, ci);
    aj = std::clamp(aj, 0.0, cj);
    alpha_(i) = ai;
    alpha_(j) = aj;
    const double di = sign_(i) * (ai - old_i);
    const double dj = sign_(j) * (aj - old_j);
    const auto n = static_cast<Eigen::Index>(n_);
    for (Eigen::Index t = 0; t < n; ++t) {
      const double u = di * ki[t] + dj * kj[t];
      grad_(t) += u;
      grad_(t + n) -= u;
    }
  }

  // 1/2 a'Qa + p'a = 1/2 a'(G + p).
  double primal_value() const { return 0.5 * alpha_.dot(grad_ + linear_); }

  const SvrProblem& problem_;
  std::size_t n_;
  SolverOptions options_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd upper_;
  Eigen::VectorXd sign_;
  Eigen::VectorXd grad_;
  Eigen::VectorXd linear_;
  Eigen::VectorXd ki_;
  Eigen::VectorXd kj_;
  const double* ki_ptr_ = nullptr;
  Eigen::Index ki_idx_ = -1;
  std::size_t iterations_ = 0;
  double violation_ = 0.0;
  bool converged_ = false;
  std::vector<double> trace_;
};

}  // namespace

SvrModel SvrProblem::fit(const Eigen::VectorXd& weights, const SvrParams& params, const SolverOptions& options,
                         const Eigen::VectorXd* warm_start) const {
  params.validate();
  if (params.gamma != gamma_) {
    throw Error(Errc::InvalidParams, "problem was prepared for gamma=" + std::to_string(gamma_));
  }
  if (!(options.tol > 0.0)) throw Error(Errc::InvalidParams, "solver tolerance must be positive");
  if (static_cast<std::size_t>(weights.size()) != size()) {
    throw Error(Errc::WeightMismatch, std::to_string(weights.size()) + " weights for " + std::to_string(size()) +
                                          " samples");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw Error(Errc::WeightMismatch, "weights must be finite and non-negative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(Errc::WeightMismatch, "weights sum to zero");

  const Eigen::VectorXd box = params.c * static_cast<double>(size()) * (weights / total);
  SmoSolver solver(*this, box, params.epsilon, options);
  if (warm_start != nullptr) solver.warm_start(*warm_start);
  solver.run();

  const Eigen::VectorXd beta = solver.coefficients();
  SvrModel model;
  model.params = params;
  model.scaler = scaler_;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (beta(i) != 0.0) model.support_indices.push_back(static_cast<std::size_t>(i));
  }
  const auto n_sv = static_cast<Eigen::Index>(model.support_indices.size());
  model.support_vectors.resize(n_sv, 2);
  model.coefficients.resize(n_sv);
  for (Eigen::Index k = 0; k < n_sv; ++k) {
    const auto row = static_cast<Eigen::Index>(model.support_indices[static_cast<std::size_t>(k)]);
    model.support_vectors.row(k) = scaled_.row(row);
    model.coefficients(k) = beta(row);
  }
  model.target_scale = target_scale_;
  model.bias = target_mean_ - target_scale_ * solver.rho();
  model.iterations = solver.iterations();
  model.max_violation = solver.violation();
  model.objective_trace = solver.take_trace();
  model.dual = solver.dual();
  if (!solver.converged()) throw DidNotConverge(std::move(model), solver.iterations(), solver.violation());
  return model;
}

Eigen::VectorXd SvrProblem::fitted(const SvrModel& model) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size()), model.bias);
  for (std::size_t k = 0; k < model.support_indices.size(); ++k) {
    out += model.target_scale * model.coefficients(static_cast<Eigen::Index>(k)) * kernel_column(model.support_indices[k]);
  }
  return out;
}

SvrModel fit_weighted_svr(const Dataset& train, const Eigen::VectorXd& weights, const SvrParams& params,
                          const SolverOptions& options) {
  params.validate();
  if (static_cast<std::size_t>(weights.size()) != train.size()) {
    throw Error(Errc::WeightMismatch, std::to_string(weights.size()) + " weights for " +
                                          std::to_string(train.size()) + " samples");
  }
  return SvrProblem(train, params.gamma).fit(weights, params, options);
}

SvrModel fit_svr(const Dataset& train, const SvrParams& params, const SolverOptions& options) {
  return fit_weighted_svr(train, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(train.size())), params, options);
}

double dual_objective(const SvrModel& model, const Dataset& train) {
  const auto n_sv = static_cast<Eigen::Index>(model.support_indices.size());
  if (n_sv == 0) return 0.0;
  Eigen::VectorXd y(n_sv);
  for (Eigen::Index k = 0; k < n_sv; ++k) y(k) = train[model.support_indices[static_cast<std::size_t>(k)]].w / model.target_scale;
  const Eigen::MatrixXd k = gram_matrix(model.support_vectors, model.params.gamma);
  const Eigen::VectorXd& b = model.coefficients;
  return -0.5 * b.dot(k * b) - model.params.epsilon * b.cwiseAbs().sum() + y.dot(b);
}

std::vector<SvrParams> make_param_grid(const std::vector<double>& cs, const std::vector<double>& gammas,
                                       const std::vector<double>& epsilons) {
  std::vector<SvrParams> grid;
  for (double c : cs) {
    for (double gamma : gammas) {
      for (double epsilon : epsilons) grid.push_back({c, epsilon, gamma});
    }
  }
  return grid;
}

std::vector<SvrParams> default_param_grid() {
  return make_param_grid({0.1, 1.0, 10.0, 100.0}, {0.01, 0.1, 1.0, 10.0}, {0.001, 0.01, 0.05});
}

GridSearchResult grid_search_cv_detailed(const Dataset& train, const Eigen::VectorXd& weights,
                                         const std::vector<SvrParams>& grid, std::size_t k_folds,
                                         std::uint64_t seed, const SolverOptions& options) {
  if (grid.empty()) throw Error(Errc::EmptyGrid, "hyperparameter grid is empty");
  if (k_folds < 2 || train.size() < k_folds) {
    throw Error(Errc::TooFewSamples, std::to_string(train.size()) + " samples cannot form " +
                                         std::to_string(k_folds) + " folds");
  }
  if (static_cast<std::size_t>(weights.size()) != train.size()) {
    throw Error(Errc::WeightMismatch, "weights do not align with the training set");
  }
  for (const SvrParams& p : grid) p.validate();

  Rng rng = make_rng(seed);
  const std::vector<std::size_t> order = permutation(train.size(), rng);
  std::vector<std::size_t> fold_of(train.size());
  for (std::size_t r = 0; r < order.size(); ++r) fold_of[order[r]] = r % k_folds;

  // Distinct gammas, so each fold's Gram matrix is built once per gamma.
  std::vector<double> gammas;
  for (const SvrParams& p : grid) {
    if (std::find(gammas.begin(), gammas.end(), p.gamma) == gammas.end()) gammas.push_back(p.gamma);
  }

  std::vector<double> sum_rmse(grid.size(), 0.0);
  for (std::size_t fold = 0; fold < k_folds; ++fold) {
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < train.size(); ++i) (fold_of[i] == fold ? val_idx : fit_idx).push_back(i);
    const Dataset fit_set = train.subset(fit_idx);
    const Dataset val_set = train.subset(val_idx);
    Eigen::VectorXd fit_w(static_cast<Eigen::Index>(fit_idx.size()));
    for (std::size_t k = 0; k < fit_idx.size(); ++k) fit_w(static_cast<Eigen::Index>(k)) = weights(static_cast<Eigen::Index>(fit_idx[k]));
    if (!(fit_w.sum() > 0.0)) fit_w.setOnes();
    const Eigen::VectorXd val_y = val_set.targets();
    const FeatureMatrix val_x = val_set.features();

    for (double gamma : gammas) {
      const SvrProblem problem(fit_set, gamma);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (grid[g].gamma != gamma || !std::isfinite(sum_rmse[g])) continue;
        try {
          const SvrModel model = problem.fit(fit_w, grid[g], options);
          sum_rmse[g] += rmse(model.predict_raw(val_x), val_y);
        } catch (const DidNotConverge&) {
          sum_rmse[g] = std::numeric_limits<double>::infinity();
        }
      }
    }
  }

  GridSearchResult result;
  result.mean_rmse.resize(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.mean_rmse[g] = sum_rmse[g] / static_cast<double>(k_folds);
    if (result.mean_rmse[g] < best) {
      best = result.mean_rmse[g];
      result.best_index = g;
    }
  }
  result.best = grid[result.best_index];
  return result;
}

SvrParams grid_search_cv(const Dataset& train, const Eigen::VectorXd& weights, const std::vector<SvrParams>& grid,
                         std::size_t k_folds, std::uint64_t seed, const SolverOptions& options) {
  return grid_search_cv_detailed(train, weights, grid, k_folds, seed, options).best;
}

void to_json(nlohmann::json& j, const SvrParams& params) {
  j = nlohmann::json{{"c", params.c}, {"epsilon", params.epsilon}, {"gamma", params.gamma}};
}

void from_json(const nlohmann::json& j, SvrParams& params) {
  params.c = j.at("c").get<double>();
  params.epsilon = j.at("epsilon").get<double>();
  params.gamma = j.at("gamma").get<double>();
}

void to_json(nlohmann::json& j, const Scaler& scaler) {
  j = nlohmann::json{
      {"mean_f", scaler.mean_f}, {"mean_s", scaler.mean_s}, {"std_f", scaler.std_f}, {"std_s", scaler.std_s}};
}

void from_json(const nlohmann::json& j, Scaler& scaler) {
  scaler.mean_f = j.at("mean_f").get<double>();
  scaler.mean_s = j.at("mean_s").get<double>();
  scaler.std_f = j.at("std_f").get<double>();
  scaler.std_s = j.at("std_s").get<double>();
}

void to_json(nlohmann::json& j, const SvrModel& model) {
  nlohmann::json svs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < model.support_vectors.rows(); ++k) {
    svs.push_back({model.support_vectors(k, 0), model.support_vectors(k, 1)});
  }
  j = nlohmann::json{{"params", model.params},
                     {"scaler", model.scaler},
                     {"support_vectors", std::move(svs)},
                     {"coefficients", std::vector<double>(model.coefficients.data(),
                                                          model.coefficients.data() + model.coefficients.size())},
                     {"support_indices", model.support_indices},
                     {"target_scale", model.target_scale},
                     {"bias", model.bias}};
}

void from_json(const nlohmann::json& j, SvrModel& model) {
  model = SvrModel{};
  model.params = j.at("params").get<SvrParams>();
  model.params.validate();
  model.scaler = j.at("scaler").get<Scaler>();
  const auto& svs = j.at("support_vectors");
  const auto coef = j.at("coefficients").get<std::vector<double>>();
  if (svs.size() != coef.size()) {
    throw Error(Errc::Schema, "support_vectors and coefficients differ in length");
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(svs.size()), 2);
  model.coefficients.resize(static_cast<Eigen::Index>(coef.size()));
  for (std::size_t k = 0; k < coef.size(); ++k) {
    const auto& sv = svs.at(k);
    if (!sv.is_array() || sv.size() != 2) throw Error(Errc::Schema, "support vector must be a pair");
    model.support_vectors(static_cast<Eigen::Index>(k), 0) = sv.at(0).get<double>();
    model.support_vectors(static_cast<Eigen::Index>(k), 1) = sv.at(1).get<double>();
    model.coefficients(static_cast<Eigen::Index>(k)) = coef[k];
  }
  if (j.contains("support_indices")) model.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
  model.target_scale = j.value("target_scale", 1.0);
  if (!(model.target_scale > 0.0)) throw Error(Errc::Schema, "target_scale must be positive");
  model.bias = j.at("bias").get<double>();
}

}  // namespace mfl
