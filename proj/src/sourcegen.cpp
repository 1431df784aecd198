#include "mfl/sourcegen.hpp"

#include <cmath>
#include <string>

#include "mfl/random.hpp"

namespace mfl {

namespace {

std::vector<double> levels(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
  out.back() = hi;
  return out;
}

}  // namespace

void GridSpec::validate() const {
  const bool ok = std::isfinite(f_min) && std::isfinite(f_max) && std::isfinite(s_min) && std::isfinite(s_max) &&
                  f_min > 0.0 && s_min > 0.0 && f_min < f_max && s_min < s_max && n_f >= 2 && n_s >= 2;
  if (!ok) {
    throw Error(Errc::InvalidRange, "grid needs 0 < min < max for F and S and at least 2 levels each (F " +
                                        std::to_string(f_min) + ".." + std::to_string(f_max) + " x" +
                                        std::to_string(n_f) + ", S " + std::to_string(s_min) + ".." +
                                        std::to_string(s_max) + " x" + std::to_string(n_s) + ")");
  }
}

std::vector<double> GridSpec::f_levels() const { return levels(f_min, f_max, n_f); }
std::vector<double> GridSpec::s_levels() const { return levels(s_min, s_max, n_s); }

GridSpec default_source_pool_grid() {
  GridSpec grid;
  grid.n_s = 13;
  return grid;
}

void SyntheticTargetConfig::validate() const {
  if (!(p > 0.0 && p <= 1.0) || !(noise_std >= 0.0) || !(band_min < band_max) || !std::isfinite(alpha) ||
      !std::isfinite(offset)) {
    throw Error(Errc::InvalidRange, "synthetic target needs 0 < p <= 1, noise_std >= 0 and band_min < band_max");
  }
}

SyntheticTargetConfig SyntheticTargetConfig::identity() { return SyntheticTargetConfig{}; }

SyntheticTargetConfig SyntheticTargetConfig::fixture_for(double h, std::uint64_t seed) {
  struct Row {
    double h, alpha, p;
  };
  constexpr Row rows[] = {{0.7, 1.1, 0.55}, {0.85, 1.05, 0.7}, {1.2, 1.0, 0.85}};
  const Row* nearest = &rows[0];
  for (const Row& row : rows) {
    if (std::abs(row.h - h) < std::abs(nearest->h - h)) nearest = &row;
  }
  SyntheticTargetConfig cfg;
  cfg.alpha = nearest->alpha;
  cfg.p = nearest->p;
  cfg.offset = 0.1 * h;
  cfg.noise_std = 0.02;
  cfg.band_min = 0.5;
  cfg.band_max = 4.0;
  cfg.seed = seed;
  return cfg;
}

double source_width(double f, double s, const SourceModelConfig& cfg) {
  if (!(f > 0.0) || !(s > 0.0) || !(cfg.h > 0.0) || !(cfg.filament_diameter > 0.0)) {
    throw Error(Errc::NonPositiveInput, "source model needs positive F, S, h and filament diameter");
  }
  return f * cfg.area() / (s * cfg.h);
}

double synthetic_truth(double f, double s, const SourceModelConfig& src, const SyntheticTargetConfig& syn) {
  return syn.alpha * std::pow(source_width(f, s, src), syn.p) + syn.offset;
}

bool is_stable(double f, double s, const SourceModelConfig& src, const SyntheticTargetConfig& syn) {
  const double ratio = source_width(f, s, src) / src.h;
  return ratio > syn.band_min && ratio < syn.band_max;
}

Dataset generate_source_grid(const GridSpec& grid, const SourceModelConfig& cfg) {
  grid.validate();
  std::vector<Sample> samples;
  samples.reserve(grid.n_f * grid.n_s);
  for (double f : grid.f_levels()) {
    for (double s : grid.s_levels()) samples.push_back({f, s, cfg.h, source_width(f, s, cfg), Origin::Source});
  }
  return Dataset(std::move(samples));
}

Dataset generate_synthetic_target(const GridSpec& grid, const SourceModelConfig& src,
                                  const SyntheticTargetConfig& syn) {
  grid.validate();
  syn.validate();
  const auto fs = grid.f_levels();
  const auto ss = grid.s_levels();
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = 0; j < ss.size(); ++j) {
      if (!is_stable(fs[i], ss[j], src, syn)) continue;
      double w = synthetic_truth(fs[i], ss[j], src, syn);
      if (syn.noise_std > 0.0) {
        Rng rng = make_rng(syn.seed, {static_cast<std::uint64_t>(i * ss.size() + j)});
        w += syn.noise_std * standard_normal(rng);
      }
      samples.push_back({fs[i], ss[j], src.h, std::max(w, 0.0), Origin::Target});
    }
  }
  return Dataset(std::move(samples));
}

void to_json(nlohmann::json& j, const GridSpec& grid) {
  j = nlohmann::json{{"f_min", grid.f_min}, {"f_max", grid.f_max}, {"s_min", grid.s_min},
                     {"s_max", grid.s_max}, {"n_f", grid.n_f},     {"n_s", grid.n_s}};
}

void from_json(const nlohmann::json& j, GridSpec& grid) {
  grid.f_min = j.value("f_min", grid.f_min);
  grid.f_max = j.value("f_max", grid.f_max);
  grid.s_min = j.value("s_min", grid.s_min);
  grid.s_max = j.value("s_max", grid.s_max);
  grid.n_f = j.value("n_f", grid.n_f);
  grid.n_s = j.value("n_s", grid.n_s);
}

void to_json(nlohmann::json& j, const SyntheticTargetConfig& cfg) {
  j = nlohmann::json{{"alpha", cfg.alpha},         {"p", cfg.p},
                     {"offset", cfg.offset},       {"noise_std", cfg.noise_std},
                     {"band_min", cfg.band_min},   {"band_max", std::isinf(cfg.band_max) ? nlohmann::json(nullptr) : nlohmann::json(cfg.band_max)},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, SyntheticTargetConfig& cfg) {
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.p = j.value("p", cfg.p);
  cfg.offset = j.value("offset", cfg.offset);
  cfg.noise_std = j.value("noise_std", cfg.noise_std);
  cfg.band_min = j.value("band_min", cfg.band_min);
  if (j.contains("band_max")) {
    cfg.band_max = j.at("band_max").is_null() ? std::numeric_limits<double>::infinity() : j.at("band_max").get<double>();
  }
  cfg.seed = j.value("seed", cfg.seed);
}

}  // namespace mfl
