#ifndef MFL_SOURCEGEN_HPP
#define MFL_SOURCEGEN_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "json.hpp"

#include "mfl/dataset.hpp"

namespace mfl {

/// Mass-conservation line-width model W = F * A / (S * h).
struct SourceModelConfig {
  double filament_diameter = 1.75;  // mm
  double h = 0.7;                   // mm

  double area() const noexcept { return std::numbers::pi * filament_diameter * filament_diameter / 4.0; }
};

/// Equidistant (F, S) design; levels are min + i * (max - min) / (n - 1).
struct GridSpec {
  double f_min = 153.0;
  double f_max = 729.0;
  double s_min = 350.0;
  double s_max = 725.0;
  std::size_t n_f = 16;
  std::size_t n_s = 16;

  /// Throws InvalidRange.
  void validate() const;
  std::vector<double> f_levels() const;
  std::vector<double> s_levels() const;
};

/// Default source pool: 16 F levels x 13 S levels over the same ranges.
GridSpec default_source_pool_grid();

/// Ground-truth stand-in: alpha * W_source^p + offset plus Gaussian noise,
/// restricted to cells whose W_source / h lies strictly inside the band.
struct SyntheticTargetConfig {
  double alpha = 1.0;
  double p = 1.0;
  double offset = 0.0;     // mm
  double noise_std = 0.0;  // mm
  double band_min = 0.0;   // on W_source / h
  double band_max = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  /// Throws InvalidRange.
  void validate() const;

  /// Identity distortion, no noise, no mask.
  static SyntheticTargetConfig identity();
  /// Built-in nonlinear fixture; stronger curvature at small h. The nearest
  /// of h = 0.7, 0.85, 1.2 mm supplies alpha and p.
  static SyntheticTargetConfig fixture_for(double h, std::uint64_t seed = 0);
};

/// Throws NonPositiveInput.
double source_width(double f, double s, const SourceModelConfig& cfg);

double synthetic_truth(double f, double s, const SourceModelConfig& src, const SyntheticTargetConfig& syn);

bool is_stable(double f, double s, const SourceModelConfig& src, const SyntheticTargetConfig& syn);

Dataset generate_source_grid(const GridSpec& grid, const SourceModelConfig& cfg);

/// Noise for cell (i_f, i_s) comes from the stream keyed by its row-major
/// index, so the output does not depend on generation order.
Dataset generate_synthetic_target(const GridSpec& grid, const SourceModelConfig& src,
                                  const SyntheticTargetConfig& syn);

void to_json(nlohmann::json& j, const GridSpec& grid);
void from_json(const nlohmann::json& j, GridSpec& grid);
void to_json(nlohmann::json& j, const SyntheticTargetConfig& cfg);
void from_json(const nlohmann::json& j, SyntheticTargetConfig& cfg);

}  // namespace mfl

#endif  // MFL_SOURCEGEN_HPP
