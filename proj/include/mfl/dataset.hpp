#ifndef MFL_DATASET_HPP
#define MFL_DATASET_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mfl/error.hpp"

namespace mfl {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

enum class Origin { Source, Target };

/// One process observation: feed rate `f` and stage speed `s` in mm/min,
/// nozzle-to-platen distance `h` and line width `w` in mm.
struct Sample {
  double f = 0.0;
  double s = 0.0;
  double h = 0.0;
  double w = 0.0;
  Origin origin = Origin::Target;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Throws Errc::NonPositiveValue unless f, s, h > 0 and w >= 0 (all finite).
void validate(const Sample& sample);

/// Immutable, index-addressable list of samples.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Sample> samples);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const noexcept { return samples_.cbegin(); }
  auto end() const noexcept { return samples_.cend(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  /// Raw (f, s) rows.
  FeatureMatrix features() const;
  /// Line widths.
  Eigen::VectorXd targets() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset with_origin(Origin origin) const;

  /// The shared h if every sample carries the same value.
  std::optional<double> common_h() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Sample> samples_;
};

Dataset concat(const Dataset& first, const Dataset& second);

// CSV with the exact header `F_mm_per_min,S_mm_per_min,h_mm,W_mm`.
inline constexpr const char* kCsvHeader = "F_mm_per_min,S_mm_per_min,h_mm,W_mm";

Dataset load_csv(const std::filesystem::path& path, Origin origin = Origin::Target);
Dataset parse_csv(std::istream& in, Origin origin = Origin::Target);
/// Like parse_csv, but the W column may be omitted (W is then 0).
Dataset parse_feature_csv(std::istream& in);
Dataset load_feature_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::filesystem::path& path, const Dataset& data);

/// Standardization of the two features. A zero spread is stored as 1.0 so
/// a constant feature maps to 0 instead of dividing by zero.
struct Scaler {
  double mean_f = 0.0;
  double mean_s = 0.0;
  double std_f = 1.0;
  double std_s = 1.0;

  Eigen::Vector2d apply(double f, double s) const noexcept {
    return {(f - mean_f) / std_f, (s - mean_s) / std_s};
  }

  template <typename Derived>
  FeatureMatrix apply(const Eigen::MatrixBase<Derived>& raw) const {
    static_assert(Derived::ColsAtCompileTime == 2 || Derived::ColsAtCompileTime == Eigen::Dynamic);
    FeatureMatrix scaled(raw.rows(), 2);
    scaled.col(0) = (raw.col(0).array() - mean_f) / std_f;
    scaled.col(1) = (raw.col(1).array() - mean_s) / std_s;
    return scaled;
  }

  Eigen::Vector2d invert(const Eigen::Vector2d& scaled) const noexcept {
    return {scaled(0) * std_f + mean_f, scaled(1) * std_s + mean_s};
  }

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Population mean and standard deviation of f and s. Throws EmptyDataset.
Scaler fit_scaler(const Dataset& data);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;  // ascending, into the input
  std::vector<std::size_t> test_indices;   // ascending, into the input
};

/// Seeded random partition with |train| = n_train. Throws InvalidSize unless
/// 0 < n_train < |data|.
Split random_split(const Dataset& data, std::size_t n_train, std::uint64_t seed);

/// round(linspace(0, levels - 1, k)), rounding halves away from zero.
std::vector<std::size_t> equidistant_level_indices(std::size_t levels, std::size_t k);

/// Distinct sorted feature levels of a grid-structured dataset.
struct GridLevels {
  std::vector<double> f;
  std::vector<double> s;
};

/// Throws NotAGrid when two samples share an (f, s) cell or fewer than half
/// of the implied cells are occupied.
GridLevels grid_levels(const Dataset& data);

/// Samples lying on n_s equidistant S levels crossed with n_f equidistant F
/// levels; missing cells are skipped. Input order is preserved.
Dataset subgrid_select(const Dataset& data, std::size_t n_s, std::size_t n_f);
std::vector<std::size_t> subgrid_indices(const Dataset& data, std::size_t n_s, std::size_t n_f);

/// Root mean square of predictions - truths. Throws Empty or LengthMismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rmse(const Eigen::MatrixBase<DerivedA>& predictions,
                               const Eigen::MatrixBase<DerivedB>& truths) {
  if (predictions.size() != truths.size()) {
    throw Error(Errc::LengthMismatch, "rmse: " + std::to_string(predictions.size()) + " predictions vs " +
                                          std::to_string(truths.size()) + " truths");
  }
  if (predictions.size() == 0) throw Error(Errc::Empty, "rmse of zero residuals");
  using std::sqrt;
  const auto n = static_cast<typename DerivedA::Scalar>(predictions.size());
  return sqrt((predictions.derived().array() - truths.derived().array()).square().sum() / n);
}

}  // namespace mfl

#endif  // MFL_DATASET_HPP
