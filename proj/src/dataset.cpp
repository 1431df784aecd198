#include "mfl/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "mfl/random.hpp"

namespace mfl {

namespace {

constexpr std::array<std::string_view, 4> kColumns = {"F_mm_per_min", "S_mm_per_min", "h_mm", "W_mm"};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view strip_eol(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(value);
}

}  // namespace

void validate(const Sample& sample) {
  const auto bad = [](double v) { return !std::isfinite(v) || v <= 0.0; };
  if (bad(sample.f) || bad(sample.s) || bad(sample.h) || !std::isfinite(sample.w) || sample.w < 0.0) {
    std::ostringstream msg;
    msg << "sample (f=" << sample.f << ", s=" << sample.s << ", h=" << sample.h << ", w=" << sample.w
        << ") violates f, s, h > 0 and w >= 0";
    throw Error(Errc::NonPositiveValue, msg.str());
  }
}

Dataset::Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  for (const Sample& sample : samples_) validate(sample);
}

FeatureMatrix Dataset::features() const {
  FeatureMatrix x(static_cast<Eigen::Index>(samples_.size()), 2);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = samples_[i].f;
    x(static_cast<Eigen::Index>(i), 1) = samples_[i].s;
  }
  return x;
}

Eigen::VectorXd Dataset::targets() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) y(static_cast<Eigen::Index>(i)) = samples_[i].w;
  return y;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(samples_.at(i));
  Dataset out;
  out.samples_ = std::move(picked);
  return out;
}

Dataset Dataset::with_origin(Origin origin) const {
  Dataset out = *this;
  for (Sample& sample : out.samples_) sample.origin = origin;
  return out;
}

std::optional<double> Dataset::common_h() const {
  if (samples_.empty()) return std::nullopt;
  const double h = samples_.front().h;
  for (const Sample& sample : samples_) {
    if (sample.h != h) return std::nullopt;
  }
  return h;
}

Dataset concat(const Dataset& first, const Dataset& second) {
  std::vector<Sample> all(first.begin(), first.end());
  all.insert(all.end(), second.begin(), second.end());
  return Dataset(std::move(all));
}

namespace {

// With `w_optional`, a header of only the three feature columns is accepted
// and W is read as 0.
Dataset parse_rows(std::istream& in, Origin origin, bool w_optional) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "empty CSV, expected header " + std::string(kCsvHeader));
  std::string_view header = strip_eol(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto names = split_commas(header);
  const std::size_t columns = w_optional && names.size() == kColumns.size() - 1 ? kColumns.size() - 1 : kColumns.size();
  for (std::size_t c = 0; c < columns; ++c) {
    if (c >= names.size() || names[c] != kColumns[c]) {
      throw CsvError(Errc::MissingColumn, 0, std::string(kColumns[c]),
                     "header must be exactly " + std::string(kCsvHeader));
    }
  }
  if (names.size() != columns) {
    throw CsvError(Errc::Schema, 0, std::string(names[columns]), "unexpected extra column");
  }

  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string_view text = strip_eol(line);
    if (text.empty()) continue;
    ++row;
    const auto cells = split_commas(text);
    if (cells.size() > columns) {
      throw CsvError(Errc::Schema, row, "", "row " + std::to_string(row) + " has too many cells");
    }
    std::array<double, 4> values{};
    for (std::size_t c = 0; c < columns; ++c) {
      if (c >= cells.size() || !parse_double(cells[c], values[c])) {
        throw CsvError(Errc::NonNumericCell, row, std::string(kColumns[c]),
                       "row " + std::to_string(row) + ", column " + std::string(kColumns[c]) + ": '" +
                           std::string(c < cells.size() ? cells[c] : "") + "' is not a number");
      }
      const bool ok = c == 3 ? values[c] >= 0.0 : values[c] > 0.0;
      if (!ok) {
        throw CsvError(Errc::NonPositiveValue, row, std::string(kColumns[c]),
                       "row " + std::to_string(row) + ", column " + std::string(kColumns[c]) + " must be " +
                           (c == 3 ? "non-negative" : "positive"));
      }
    }
    samples.push_back({values[0], values[1], values[2], values[3], origin});
  }
  return Dataset(std::move(samples));
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

Dataset parse_csv(std::istream& in, Origin origin) { return parse_rows(in, origin, false); }

Dataset parse_feature_csv(std::istream& in) { return parse_rows(in, Origin::Target, true); }

Dataset load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_feature_csv(in);
}

Dataset load_csv(const std::filesystem::path& path, Origin origin) {
  std::ifstream in = open_input(path);
  return parse_csv(in, origin);
}

void write_csv(std::ostream& out, const Dataset& data) {
  std::ostringstream buffer;
  buffer.precision(17);
  buffer << kCsvHeader << '\n';
  for (const Sample& sample : data) {
    buffer << sample.f << ',' << sample.s << ',' << sample.h << ',' << sample.w << '\n';
  }
  out << buffer.str();
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  write_csv(out, data);
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

Scaler fit_scaler(const Dataset& data) {
  if (data.empty()) throw Error(Errc::EmptyDataset, "cannot fit a scaler on zero samples");
  const FeatureMatrix x = data.features();
  const Eigen::RowVector2d mean = x.colwise().mean();
  const Eigen::RowVector2d var = (x.rowwise() - mean).array().square().colwise().mean();
  Scaler scaler;
  scaler.mean_f = mean(0);
  scaler.mean_s = mean(1);
  scaler.std_f = var(0) > 0.0 ? std::sqrt(var(0)) : 1.0;
  scaler.std_s = var(1) > 0.0 ? std::sqrt(var(1)) : 1.0;
  return scaler;
}

Split random_split(const Dataset& data, std::size_t n_train, std::uint64_t seed) {
  if (n_train == 0 || n_train >= data.size()) {
    throw Error(Errc::InvalidSize, "n_train=" + std::to_string(n_train) + " must lie in (0, " +
                                       std::to_string(data.size()) + ")");
  }
  Rng rng = make_rng(seed);
  Split split;
  split.train_indices = sample_indices(data.size(), n_train, rng);
  split.test_indices.reserve(data.size() - n_train);
  std::size_t next = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (next < split.train_indices.size() && split.train_indices[next] == i) {
      ++next;
    } else {
      split.test_indices.push_back(i);
    }
  }
  split.train = data.subset(split.train_indices);
  split.test = data.subset(split.test_indices);
  return split;
}

std::vector<std::size_t> equidistant_level_indices(std::size_t levels, std::size_t k) {
  if (k < 1 || k > levels) {
    throw Error(Errc::TooFewLevels, "cannot pick " + std::to_string(k) + " of " + std::to_string(levels) + " levels");
  }
  std::vector<std::size_t> idx(k);
  if (k == 1) return idx;
  const double span = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < k; ++i) {
    idx[i] = static_cast<std::size_t>(std::round(span * static_cast<double>(i) / static_cast<double>(k - 1)));
  }
  return idx;
}

GridLevels grid_levels(const Dataset& data) {
  GridLevels levels;
  for (const Sample& sample : data) {
    levels.f.push_back(sample.f);
    levels.s.push_back(sample.s);
  }
  for (auto* v : {&levels.f, &levels.s}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  std::vector<std::pair<double, double>> cells;
  cells.reserve(data.size());
  for (const Sample& sample : data) cells.emplace_back(sample.f, sample.s);
  std::sort(cells.begin(), cells.end());
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) {
    throw Error(Errc::NotAGrid, "two samples share the same (F, S) cell");
  }
  if (2 * data.size() < levels.f.size() * levels.s.size()) {
    throw Error(Errc::NotAGrid, std::to_string(data.size()) + " samples occupy fewer than half of a " +
                                    std::to_string(levels.f.size()) + "x" + std::to_string(levels.s.size()) +
                                    " grid");
  }
  return levels;
}

std::vector<std::size_t> subgrid_indices(const Dataset& data, std::size_t n_s, std::size_t n_f) {
  const GridLevels levels = grid_levels(data);
  if (n_s < 2 || n_f < 2 || n_s > levels.s.size() || n_f > levels.f.size()) {
    throw Error(Errc::TooFewLevels, "requested " + std::to_string(n_s) + " S x " + std::to_string(n_f) +
                                        " F levels from a " + std::to_string(levels.s.size()) + " x " +
                                        std::to_string(levels.f.size()) + " grid");
  }
  std::vector<double> keep_s;
  std::vector<double> keep_f;
  for (std::size_t i : equidistant_level_indices(levels.s.size(), n_s)) keep_s.push_back(levels.s[i]);
  for (std::size_t i : equidistant_level_indices(levels.f.size(), n_f)) keep_f.push_back(levels.f[i]);

  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::binary_search(keep_s.begin(), keep_s.end(), data[i].s) &&
        std::binary_search(keep_f.begin(), keep_f.end(), data[i].f)) {
      picked.push_back(i);
    }
  }
  return picked;
}

Dataset subgrid_select(const Dataset& data, std::size_t n_s, std::size_t n_f) {
  const auto idx = subgrid_indices(data, n_s, n_f);
  return data.subset(idx);
}

}  // namespace mfl
