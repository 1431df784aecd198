#ifndef MFL_TRANSFER_HPP
#define MFL_TRANSFER_HPP

#include <Eigen/Dense>

#include "json.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfl/dataset.hpp"
#include "mfl/svr.hpp"

namespace mfl {

enum class Loss { Linear, Square, Exponential };

std::string to_string(Loss loss);
Loss parse_loss(const std::string& name);

struct TransferConfig {
  std::size_t n_iterations = 30;
  Loss loss = Loss::Linear;
  SvrParams svr_params;
  double tol = 1e-3;
  std::size_t max_iterations = 100000;
};

// beta_t stored for an iteration that fits every instance exactly.
inline constexpr double kPerfectFitBeta = 1e-10;

/// TrAdaBoost.R2 ensemble. models[t] was fitted in iteration t with the
/// instance weights weight_trace[t].
struct TransferEnsemble {
  TransferConfig config;
  std::vector<SvrModel> models;
  std::vector<double> beta_t;
  double beta_source = 1.0;
  std::size_t n_source = 0;
  std::size_t n_target = 0;

  // Diagnostics; not serialized.
  std::vector<Eigen::VectorXd> weight_trace;
  Eigen::VectorXd final_weights;
  bool perfect_fit = false;
  bool stopped_early = false;

  double predict(double f, double s) const;
  Eigen::VectorXd predict(const Dataset& data) const;
};

struct AdjustedErrors {
  Eigen::VectorXd errors;    // in [0, 1]
  bool perfect_fit = false;  // max residual was zero
};

/// Residuals normalized by their maximum, then mapped through the loss.
AdjustedErrors adjust_residuals(const Eigen::VectorXd& residuals, Loss loss);
AdjustedErrors adjusted_errors(const SvrModel& model, const Dataset& data, Loss loss);

/// 1 / (1 + sqrt(2 ln(n_source) / n_iterations)).
double source_discount(std::size_t n_source, std::size_t n_iterations);

struct BoostStep {
  bool stop = false;       // target error rate reached 0.5
  double error_rate = 0.0; // target-weighted mean adjusted error
  double beta_t = 0.0;
  Eigen::VectorXd weights; // renormalized; unchanged input when stop is set
};

/// One reweighting step: source instances are discounted by
/// beta_source^e, target instances are boosted by beta_t^-e, then all
/// weights are renormalized. Throws AllTargetWeightZero.
BoostStep boost_step(const Eigen::VectorXd& weights, const Eigen::VectorXd& errors, std::span<const Origin> origins,
                     double beta_source);

/// Thrown when the first boosting iteration already has target error rate
/// >= 0.5. Carries that iteration's model, fitted with uniform weights.
class EnsembleEmpty : public Error {
 public:
  EnsembleEmpty(SvrModel first_model, double error_rate);

  const SvrModel& first_model() const noexcept { return first_model_; }
  double error_rate() const noexcept { return error_rate_; }

 private:
  SvrModel first_model_;
  double error_rate_;
};

/// Single-stage TrAdaBoost.R2 with fixed SVR hyperparameters. Throws
/// EnsembleEmpty when the first iteration already has error rate >= 0.5.
TransferEnsemble fit_tradaboost_r2(const Dataset& source, const Dataset& target, const TransferConfig& config);

/// Weighted median over the later half of the ensemble (models ceil(T/2)..T,
/// 1-indexed) with member weights ln(1 / beta_t).
double weighted_median_predict(const TransferEnsemble& ensemble, double f, double s);

/// Smallest value whose cumulative (ascending) weight reaches half the total.
double weighted_median(std::span<const double> values, std::span<const double> weights);

void to_json(nlohmann::json& j, const TransferConfig& config);
void from_json(const nlohmann::json& j, TransferConfig& config);
void to_json(nlohmann::json& j, const TransferEnsemble& ensemble);
void from_json(const nlohmann::json& j, TransferEnsemble& ensemble);

}  // namespace mfl

#endif  // MFL_TRANSFER_HPP
