#include "mfl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfl {

std::string to_string(Loss loss) {
  switch (loss) {
    case Loss::Linear: return "linear";
    case Loss::Square: return "square";
    case Loss::Exponential: return "exponential";
  }
  return "linear";
}

Loss parse_loss(const std::string& name) {
  if (name == "linear") return Loss::Linear;
  if (name == "square") return Loss::Square;
  if (name == "exponential") return Loss::Exponential;
  throw Error(Errc::InvalidConfig, "unknown loss '" + name + "' (linear|square|exponential)");
}

AdjustedErrors adjust_residuals(const Eigen::VectorXd& residuals, Loss loss) {
  if (residuals.size() == 0) throw Error(Errc::Empty, "no residuals to adjust");
  AdjustedErrors out;
  const double d = residuals.cwiseAbs().maxCoeff();
  if (!(d > 0.0)) {
    out.errors = Eigen::VectorXd::Zero(residuals.size());
    out.perfect_fit = true;
    return out;
  }
  const Eigen::ArrayXd r = residuals.cwiseAbs().array() / d;
  switch (loss) {
    case Loss::Linear: out.errors = r.matrix(); break;
    case Loss::Square: out.errors = r.square().matrix(); break;
    case Loss::Exponential: out.errors = (1.0 - (-r).exp()).matrix(); break;
  }
  return out;
}

AdjustedErrors adjusted_errors(const SvrModel& model, const Dataset& data, Loss loss) {
  if (data.empty()) throw Error(Errc::Empty, "adjusted errors of an empty dataset");
  return adjust_residuals(data.targets() - model.predict(data), loss);
}

double source_discount(std::size_t n_source, std::size_t n_iterations) {
  if (n_source == 0 || n_iterations == 0) {
    throw Error(Errc::InvalidParams, "source discount needs n_source >= 1 and n_iterations >= 1");
  }
  return 1.0 / (1.0 + std::sqrt(2.0 * std::log(static_cast<double>(n_source)) / static_cast<double>(n_iterations)));
}

BoostStep boost_step(const Eigen::VectorXd& weights, const Eigen::VectorXd& errors, std::span<const Origin> origins,
                     double beta_source) {
  const auto n = weights.size();
  if (errors.size() != n || static_cast<Eigen::Index>(origins.size()) != n) {
    throw Error(Errc::LengthMismatch, "weights, errors and origin flags must align");
  }
  double target_weight = 0.0;
  double weighted_error = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (origins[static_cast<std::size_t>(i)] == Origin::Target) {
      target_weight += weights(i);
      weighted_error += weights(i) * errors(i);
    }
  }
  if (!(target_weight > 0.0)) throw Error(Errc::AllTargetWeightZero, "no target weight left to boost");

  BoostStep step;
  step.error_rate = weighted_error / target_weight;
  if (step.error_rate >= 0.5) {
    step.stop = true;
    step.weights = weights;
    return step;
  }
  step.beta_t = std::max(step.error_rate / (1.0 - step.error_rate), kPerfectFitBeta);
  step.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double factor = origins[static_cast<std::size_t>(i)] == Origin::Source ? std::pow(beta_source, errors(i))
                                                                 : std::pow(step.beta_t, -errors(i));
    step.weights(i) = weights(i) * factor;
  }
  step.weights /= step.weights.sum();
  return step;
}

EnsembleEmpty::EnsembleEmpty(SvrModel first_model, double error_rate)
    : Error(Errc::EnsembleEmpty, "first boosting iteration already had target error rate " +
                                     std::to_string(error_rate) + " >= 0.5"),
      first_model_(std::move(first_model)),
      error_rate_(error_rate) {}

TransferEnsemble fit_tradaboost_r2(const Dataset& source, const Dataset& target, const TransferConfig& config) {
  if (source.empty() || target.empty()) throw Error(Errc::EmptyDataset, "transfer needs source and target samples");
  if (config.n_iterations < 1) throw Error(Errc::InvalidConfig, "n_iterations must be >= 1");
  const auto hs = source.common_h();
  const auto ht = target.common_h();
  if (!hs || !ht || *hs != *ht) {
    throw Error(Errc::InvalidConfig, "source and target must share a single nozzle-to-platen distance");
  }

  const Dataset joint = concat(source.with_origin(Origin::Source), target.with_origin(Origin::Target));
  const std::size_t n = joint.size();
  std::vector<Origin> origin;
  origin.reserve(n);
  for (const Sample& sample : joint) origin.push_back(sample.origin);

  TransferEnsemble ensemble;
  ensemble.config = config;
  ensemble.n_source = source.size();
  ensemble.n_target = target.size();
  ensemble.beta_source = source_discount(source.size(), config.n_iterations);

  const SvrProblem problem(joint, config.svr_params.gamma);
  SolverOptions options;
  options.tol = config.tol;
  options.max_iterations = config.max_iterations;
  const Eigen::VectorXd truth = joint.targets();

  Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  Eigen::VectorXd dual;
  for (std::size_t t = 0; t < config.n_iterations; ++t) {
    // Consecutive iterations differ only in the box, so each solve starts
    // from the previous solution.
    SvrModel model = problem.fit(weights, config.svr_params, options, t > 0 ? &dual : nullptr);
    dual = model.dual;
    const AdjustedErrors adjusted = adjust_residuals(truth - problem.fitted(model), config.loss);
    if (adjusted.perfect_fit) {
      ensemble.weight_trace.push_back(weights);
      ensemble.models.push_back(std::move(model));
      ensemble.beta_t.push_back(kPerfectFitBeta);
      ensemble.perfect_fit = true;
      break;
    }
    BoostStep step = boost_step(weights, adjusted.errors, origin, ensemble.beta_source);
    if (step.stop) {
      if (ensemble.models.empty()) throw EnsembleEmpty(std::move(model), step.error_rate);
      ensemble.stopped_early = true;
      break;
    }
    ensemble.weight_trace.push_back(weights);
    ensemble.models.push_back(std::move(model));
    ensemble.beta_t.push_back(step.beta_t);
    weights = std::move(step.weights);
  }
  ensemble.final_weights = weights;
  return ensemble;
}

double weighted_median(std::span<const double> values, std::span<const double> weights) {
  if (values.empty() || values.size() != weights.size()) {
    throw Error(Errc::LengthMismatch, "weighted median needs matching non-empty inputs");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double total = 0.0;
  for (double w : weights) total += w;
  const double half = 0.5 * total;
  double cumulative = 0.0;
  for (std::size_t k : order) {
    cumulative += weights[k];
    if (cumulative >= half) return values[k];
  }
  return values[order.back()];
}

double weighted_median_predict(const TransferEnsemble& ensemble, double f, double s) {
  const std::size_t count = ensemble.models.size();
  if (count == 0) throw Error(Errc::EnsembleEmpty, "cannot predict with an empty ensemble");
  const std::size_t first = (count + 1) / 2 - 1;  // ceil(T/2), 0-indexed
  std::vector<double> values;
  std::vector<double> weights;
  for (std::size_t t = first; t < count; ++t) {
    values.push_back(ensemble.models[t].predict(f, s));
    weights.push_back(std::log(1.0 / ensemble.beta_t[t]));
  }
  return weighted_median(values, weights);
}

double TransferEnsemble::predict(double f, double s) const { return weighted_median_predict(*this, f, s); }

Eigen::VectorXd TransferEnsemble::predict(const Dataset& data) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) out(static_cast<Eigen::Index>(i)) = predict(data[i].f, data[i].s);
  return out;
}

void to_json(nlohmann::json& j, const TransferConfig& config) {
  j = nlohmann::json{{"n_iterations", config.n_iterations},
                     {"loss", to_string(config.loss)},
                     {"svr_params", config.svr_params},
                     {"tol", config.tol},
                     {"max_iterations", config.max_iterations}};
}

void from_json(const nlohmann::json& j, TransferConfig& config) {
  config.n_iterations = j.at("n_iterations").get<std::size_t>();
  config.loss = parse_loss(j.at("loss").get<std::string>());
  config.svr_params = j.at("svr_params").get<SvrParams>();
  config.tol = j.at("tol").get<double>();
  config.max_iterations = j.value("max_iterations", config.max_iterations);
}

void to_json(nlohmann::json& j, const TransferEnsemble& ensemble) {
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t t = 0; t < ensemble.models.size(); ++t) {
    nlohmann::json record = ensemble.models[t];
    record["beta_t"] = ensemble.beta_t[t];
    models.push_back(std::move(record));
  }
  j = nlohmann::json{{"config", ensemble.config},
                     {"beta_source", ensemble.beta_source},
                     {"n_source", ensemble.n_source},
                     {"n_target", ensemble.n_target},
                     {"models", std::move(models)}};
}

void from_json(const nlohmann::json& j, TransferEnsemble& ensemble) {
  ensemble = TransferEnsemble{};
  ensemble.config = j.at("config").get<TransferConfig>();
  ensemble.beta_source = j.at("beta_source").get<double>();
  ensemble.n_source = j.at("n_source").get<std::size_t>();
  ensemble.n_target = j.at("n_target").get<std::size_t>();
  for (const auto& record : j.at("models")) {
    ensemble.models.push_back(record.get<SvrModel>());
    const double beta = record.at("beta_t").get<double>();
    if (!(beta > 0.0 && beta < 1.0)) throw Error(Errc::Schema, "beta_t must lie in (0, 1)");
    ensemble.beta_t.push_back(beta);
  }
  if (ensemble.models.empty()) throw Error(Errc::EnsembleEmpty, "serialized ensemble has no models");
}

}  // namespace mfl
