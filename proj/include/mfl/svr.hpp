#ifndef MFL_SVR_HPP
#define MFL_SVR_HPP

#include <Eigen/Dense>
#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfl/dataset.hpp"
#include "mfl/error.hpp"

namespace mfl {

/// epsilon-SVR hyperparameters. `epsilon` is in standardized-target units and
/// `gamma` acts on standardized features.
struct SvrParams {
  double c = 1.0;
  double epsilon = 0.01;
  double gamma = 1.0;

  /// Throws InvalidParams unless c > 0, gamma > 0, epsilon >= 0.
  void validate() const;

  friend bool operator==(const SvrParams&, const SvrParams&) = default;
};

struct SolverOptions {
  double tol = 1e-3;                     // max KKT violation at exit
  std::size_t max_iterations = 100000;
  bool record_objective = false;         // fills SvrModel::objective_trace
};

struct SvrModel {
  SvrParams params;
  Scaler scaler;
  FeatureMatrix support_vectors;         // scaled features
  Eigen::VectorXd coefficients;          // alpha_i - alpha_i^*, scaled-target units
  std::vector<std::size_t> support_indices;  // rows of the training set
  double target_scale = 1.0;             // mm per scaled-target unit
  double bias = 0.0;                     // mm

  // Solver diagnostics; not part of the serialized model.
  std::size_t iterations = 0;
  double max_violation = 0.0;
  std::vector<double> objective_trace;
  Eigen::VectorXd dual;                  // full (alpha, alpha*) for warm starts

  double predict(double f, double s) const;
  Eigen::VectorXd predict(const Dataset& data) const;
  Eigen::VectorXd predict_raw(const FeatureMatrix& raw) const;
};

/// The solver hit its iteration cap. The partially optimized model is kept
/// for diagnostics.
class DidNotConverge : public Error {
 public:
  DidNotConverge(SvrModel model, std::size_t iterations, double max_violation);

  const SvrModel& model() const noexcept { return model_; }
  std::size_t iterations() const noexcept { return iterations_; }
  double max_violation() const noexcept { return max_violation_; }

 private:
  SvrModel model_;
  std::size_t iterations_;
  double max_violation_;
};

/// A training set prepared for repeated fits at one gamma: the scaler,
/// standardized features, centered targets and (for N <= kDenseGramLimit)
/// the dense Gram matrix are computed once and shared by every fit. The
/// boosting loop reuses one problem across all of its iterations.
class SvrProblem {
 public:
  static constexpr std::size_t kDenseGramLimit = 2000;

  SvrProblem(const Dataset& train, double gamma);

  std::size_t size() const noexcept { return static_cast<std::size_t>(targets_.size()); }
  double gamma() const noexcept { return gamma_; }
  const Scaler& scaler() const noexcept { return scaler_; }
  const Eigen::VectorXd& targets() const noexcept { return targets_; }
  bool has_dense_gram() const noexcept { return gram_.has_value(); }
  const Eigen::MatrixXd* dense_gram() const noexcept { return gram_ ? &*gram_ : nullptr; }

  /// Weights are normalized internally; the per-sample box is
  /// C_i = c * w_i * N. params.gamma must equal gamma(). A warm start is a
  /// previous model's `dual` on this problem; it is clipped to the new box
  /// and made feasible before solving.
  SvrModel fit(const Eigen::VectorXd& weights, const SvrParams& params, const SolverOptions& options = {},
               const Eigen::VectorXd* warm_start = nullptr) const;

  /// Model predictions on the training rows.
  Eigen::VectorXd fitted(const SvrModel& model) const;

  /// Kernel column for training row i.
  Eigen::VectorXd kernel_column(std::size_t i) const;

 private:
  double gamma_;
  Scaler scaler_;
  FeatureMatrix scaled_;
  Eigen::VectorXd targets_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  std::optional<Eigen::MatrixXd> gram_;
};

SvrModel fit_weighted_svr(const Dataset& train, const Eigen::VectorXd& weights, const SvrParams& params,
                          const SolverOptions& options = {});

/// Uniform weights.
SvrModel fit_svr(const Dataset& train, const SvrParams& params, const SolverOptions& options = {});

/// Dual objective -1/2 b'Kb - eps*sum|b| + y'b at the model's coefficients
/// (b = coefficients, y = standardized targets). `train` must be the set the model was fitted on.
double dual_objective(const SvrModel& model, const Dataset& train);

/// c x gamma x epsilon in that nesting order (epsilon varies fastest).
std::vector<SvrParams> make_param_grid(const std::vector<double>& cs, const std::vector<double>& gammas,
                                       const std::vector<double>& epsilons);
std::vector<SvrParams> default_param_grid();

struct GridSearchResult {
  SvrParams best;
  std::size_t best_index = 0;
  std::vector<double> mean_rmse;  // per grid point, +inf when a fold failed to converge
};

/// Lowest mean k-fold CV RMSE over the grid; the first grid point wins ties.
GridSearchResult grid_search_cv_detailed(const Dataset& train, const Eigen::VectorXd& weights,
                                         const std::vector<SvrParams>& grid, std::size_t k_folds,
                                         std::uint64_t seed, const SolverOptions& options = {});

SvrParams grid_search_cv(const Dataset& train, const Eigen::VectorXd& weights, const std::vector<SvrParams>& grid,
                         std::size_t k_folds, std::uint64_t seed, const SolverOptions& options = {});

void to_json(nlohmann::json& j, const SvrParams& params);
void from_json(const nlohmann::json& j, SvrParams& params);
void to_json(nlohmann::json& j, const Scaler& scaler);
void from_json(const nlohmann::json& j, Scaler& scaler);
void to_json(nlohmann::json& j, const SvrModel& model);
void from_json(const nlohmann::json& j, SvrModel& model);

}  // namespace mfl

#endif  // MFL_SVR_HPP
