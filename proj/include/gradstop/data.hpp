#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gradstop/core.hpp"
#include "gradstop/error.hpp"

namespace gradstop {

using Labels = std::vector<std::uint8_t>;  // 0 = inlier, 1 = outlier

/// Features-only view handed to training code. It deliberately has no path
/// back to the labels.
class TrainingView {
 public:
  explicit TrainingView(const Mat64& features) : features_(&features) {}
  const Mat64& features() const noexcept { return *features_; }
  std::size_t size() const noexcept { return features_->rows(); }
  std::size_t dim() const noexcept { return features_->cols(); }

 private:
  const Mat64* features_;
};

/// Features plus ground truth, for metrics and theory probes only.
class EvaluationView {
 public:
  EvaluationView(const Mat64& features, const Labels& labels)
      : features_(&features), labels_(&labels) {}
  const Mat64& features() const noexcept { return *features_; }
  std::span<const std::uint8_t> labels() const noexcept { return *labels_; }
  std::size_t size() const noexcept { return features_->rows(); }

  std::size_t count_outliers() const {
    std::size_t n = 0;
    for (auto l : *labels_) n += l;
    return n;
  }

 private:
  const Mat64* features_;
  const Labels* labels_;
};

class Dataset {
 public:
  Dataset(Mat64 features, std::optional<Labels> labels, std::string name)
      : features_(std::move(features)), labels_(std::move(labels)), name_(std::move(name)) {
    if (features_.rows() < 2) throw DataError("dataset needs at least 2 rows");
    if (features_.cols() < 1) throw DataError("dataset needs at least 1 feature");
    if (!all_finite(features_.values())) throw DataError("dataset contains non-finite values");
    if (labels_ && labels_->size() != features_.rows()) {
      throw DataError("label count " + std::to_string(labels_->size()) + " != row count " +
                      std::to_string(features_.rows()));
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  bool has_labels() const noexcept { return labels_.has_value(); }

  TrainingView training_view() const { return TrainingView(features_); }

  EvaluationView evaluation_view() const {
    if (!labels_) throw DataError("dataset '" + name_ + "' has no labels");
    return EvaluationView(features_, *labels_);
  }

  /// Contamination rate, when labels exist.
  std::optional<double> contamination() const {
    if (!labels_) return std::nullopt;
    return static_cast<double>(evaluation_view().count_outliers()) / static_cast<double>(size());
  }

  /// Row subset in the given order; labels follow their rows.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::optional<Labels> sub;
    if (labels_) {
      sub.emplace();
      sub->reserve(indices.size());
      for (auto i : indices) sub->push_back((*labels_)[i]);
    }
    return Dataset(features_.select_rows(indices), std::move(sub), name_);
  }

  Dataset with_features(Mat64 features) const { return Dataset(std::move(features), labels_, name_); }

 private:
  Mat64 features_;
  std::optional<Labels> labels_;
  std::string name_;
};

struct EvalBatch {
  std::vector<std::size_t> indices;
  Mat64 features;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  std::istringstream in(cell);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a comma-separated file with a header row. The named label column, if
/// any, is removed from the features and must hold only 0 or 1.
inline Dataset load_csv(const std::string& path,
                        const std::optional<std::string>& label_column = std::nullopt) {
  std::ifstream file(path);
  if (!file) throw MissingFileError(path);

  std::string line;
  if (!std::getline(file, line)) throw DataError("empty file: " + path);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  std::optional<std::size_t> label_idx;
  if (label_column) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == *label_column) label_idx = c;
    }
    if (!label_idx) throw DataError("label column '" + *label_column + "' not in header of " + path);
  }
  const std::size_t n_features = header.size() - (label_idx ? 1 : 0);
  if (n_features == 0) throw DataError("no feature columns in " + path);

  Vec64 values;
  Labels labels;
  std::size_t row = 0;
  while (std::getline(file, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = detail::trim(cells[c]);
      if (label_idx && c == *label_idx) {
        if (cell == "0" || cell == "0.0") {
          labels.push_back(0);
        } else if (cell == "1" || cell == "1.0") {
          labels.push_back(1);
        } else {
          throw LabelError(row, cell);
        }
        continue;
      }
      auto v = detail::parse_double(cell);
      if (!v) throw ParseError(row, c + 1, cell);
      values.push_back(*v);
    }
  }

  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.rfind('.'); dot != std::string::npos) name = name.substr(0, dot);

  std::optional<Labels> maybe_labels;
  if (label_idx) maybe_labels = std::move(labels);
  return Dataset(Mat64(row, n_features, std::move(values)), std::move(maybe_labels), name);
}

/// Per-feature z-scoring with the population standard deviation (divide by n).
/// Constant features become all zeros.
inline Dataset standardize(const Dataset& ds) {
  const Mat64& x = ds.training_view().features();
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Mat64 out(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    // Relative cutoff: a column that is constant up to rounding stays flat.
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    for (std::size_t r = 0; r < n; ++r) out(r, c) = constant ? 0.0 : (x(r, c) - mean) / sd;
  }
  return ds.with_features(std::move(out));
}

/// Uniform row sample without replacement when the dataset exceeds max_n.
/// Selected rows keep their original relative order.
inline Dataset downsample(const Dataset& ds, std::size_t max_n, Rng& rng) {
  if (max_n < 2) throw ShapeError("downsample: max_n must be at least 2");
  if (ds.size() <= max_n) return ds;
  auto idx = rng.sample_without_replacement(ds.size(), max_n);
  std::sort(idx.begin(), idx.end());
  return ds.subset(idx);
}

/// Draws the fixed evaluation batch used by GradSample for a whole run.
inline EvalBatch sample_eval_batch(const TrainingView& view, std::size_t n_eval, Rng& rng) {
  if (n_eval == 0) throw ShapeError("sample_eval_batch: n_eval must be positive");
  if (n_eval > view.size()) {
    throw ShapeError("sample_eval_batch: n_eval " + std::to_string(n_eval) + " exceeds dataset size " +
                     std::to_string(view.size()));
  }
  EvalBatch batch;
  batch.indices = rng.sample_without_replacement(view.size(), n_eval);
  batch.features = view.features().select_rows(batch.indices);
  return batch;
}

enum class Scenario { BlobUniform, BlobFarGaussian, ToxicInverted };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::BlobUniform: return "blob_uniform";
    case Scenario::BlobFarGaussian: return "blob_far_gaussian";
    case Scenario::ToxicInverted: return "toxic_inverted";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "blob_uniform") return Scenario::BlobUniform;
  if (s == "blob_far_gaussian") return Scenario::BlobFarGaussian;
  if (s == "toxic_inverted") return Scenario::ToxicInverted;
  throw ConfigError("unknown synthetic scenario '" + std::string(s) + "'");
}

/// Labeled synthetic data.
///
///   blob_uniform       inliers N(0, inlier_std^2 I); outliers uniform in [-outlier_box, outlier_box]^d
///   blob_far_gaussian  inliers as above; outliers N(c, outlier_std^2 I) with |c| = outlier_distance
///                      along a random direction
///   toxic_inverted     inliers N(0, s^2 I) with a per-point scale s ~ U[inlier_scale_lo, inlier_scale_hi];
///                      outliers a tight cluster N(c, outlier_std^2 I), |c| = outlier_distance, sitting
///                      inside the inlier cloud so that they are the easy points to reconstruct
struct SyntheticConfig {
  std::size_t n_inlier = 990;
  std::size_t n_outlier = 10;
  std::size_t dim = 10;
  Scenario scenario = Scenario::BlobUniform;
  double inlier_std = 1.0;
  double outlier_box = 5.0;
  double outlier_distance = 4.0;
  double outlier_std = 0.1;
  double inlier_scale_lo = 0.3;
  double inlier_scale_hi = 1.5;

  double contamination() const {
    return static_cast<double>(n_outlier) / static_cast<double>(n_inlier + n_outlier);
  }

  void validate() const {
    if (n_outlier < 1) throw ConfigError("synthetic: n_outlier must be at least 1");
    if (n_outlier > n_inlier) throw ConfigError("synthetic: n_outlier must not exceed n_inlier");
    if (dim < 1) throw ConfigError("synthetic: dim must be at least 1");
    if (!(inlier_std > 0) || !(outlier_box > 0) || !(outlier_distance >= 0) || !(outlier_std >= 0)) {
      throw ConfigError("synthetic: spread parameters must be positive");
    }
    if (!(inlier_scale_lo > 0) || !(inlier_scale_hi >= inlier_scale_lo)) {
      throw ConfigError("synthetic: need 0 < inlier_scale_lo <= inlier_scale_hi");
    }
  }
};

/// Rows are shuffled so that class membership is not encoded in row order.
inline Dataset gen_synthetic(const SyntheticConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = cfg.n_inlier + cfg.n_outlier;
  const std::size_t d = cfg.dim;
  Mat64 x(n, d);
  Labels labels(n, 0);

  for (std::size_t r = 0; r < cfg.n_inlier; ++r) {
    const double scale = cfg.scenario == Scenario::ToxicInverted
                             ? rng.uniform(cfg.inlier_scale_lo, cfg.inlier_scale_hi)
                             : cfg.inlier_std;
    for (std::size_t c = 0; c < d; ++c) x(r, c) = scale * rng.normal();
  }

  Vec64 center(d, 0.0);
  if (cfg.scenario != Scenario::BlobUniform) {
    for (auto& v : center) v = rng.normal();
    const double len = norm(center);
    for (auto& v : center) v *= cfg.outlier_distance / len;
  }
  for (std::size_t r = cfg.n_inlier; r < n; ++r) {
    labels[r] = 1;
    for (std::size_t c = 0; c < d; ++c) {
      x(r, c) = cfg.scenario == Scenario::BlobUniform
                    ? rng.uniform(-cfg.outlier_box, cfg.outlier_box)
                    : center[c] + cfg.outlier_std * rng.normal();
    }
  }

  auto order = rng.sample_without_replacement(n, n);
  Dataset ordered(std::move(x), std::move(labels), to_string(cfg.scenario));
  return ordered.subset(order);
}

}  // namespace gradstop
