#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slotcast/binary_io.hpp"

namespace slotcast::gbrt {

struct Config {
  double learning_rate = 0.07;
  std::int64_t iterations = 300;
  std::int64_t max_leaves = 31;
  std::int64_t min_samples_leaf = 20;
  double l2 = 0.0;
  std::int64_t max_bins = 255;
  // Rows sampled (seeded) when computing quantile bin edges.
  std::int64_t binning_sample = 100000;
  std::uint64_t seed = 42;

  // Throws InvalidConfig.
  void validate() const;
  friend bool operator==(const Config&, const Config&) = default;
};

inline constexpr std::uint8_t kMissingBin = 255;

// Per-feature quantile bin edges. bin(x) = number of edges strictly below x,
// so bin(x) <= b  <=>  x <= edges[b]. NaN maps to kMissingBin.
class BinMapper {
 public:
  static BinMapper fit(const Eigen::MatrixXd& x, const Config& config);

  std::uint8_t bin(std::size_t feature, double value) const;
  const std::vector<double>& edges(std::size_t feature) const { return edges_[feature]; }
  std::size_t n_bins(std::size_t feature) const { return edges_[feature].size() + 1; }
  std::size_t n_features() const { return edges_.size(); }

 private:
  std::vector<std::vector<double>> edges_;
};

// Column-major binned copy of a feature matrix.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bins;

  static BinnedMatrix from(const BinMapper& mapper, const Eigen::MatrixXd& x);
  std::span<const std::uint8_t> column(std::size_t f) const { return {bins.data() + f * rows, rows}; }
};

struct HistogramBin {
  double grad_sum = 0.0;
  std::uint32_t count = 0;
};

inline constexpr std::size_t kHistogramWidth = 256;

// Residual sums and counts per (feature, bin) over the given rows; layout is
// feature-major with kHistogramWidth slots per feature.
std::vector<HistogramBin> build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                                          std::span<const double> residuals);

struct Node {
  // -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint8_t bin = 0;
  bool missing_left = false;
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Leaf output in log space, before shrinkage.
  double value = 0.0;
  // Variance-reduction gain of the split (0 for leaves).
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<Node> nodes;

  double predict(std::span<const double> row) const;
  std::size_t leaf_count() const;
};

struct FitTrace {
  // Training MSE before the first tree (index 0) and after every iteration.
  std::vector<double> train_mse;
  // When set, both children of every split are also histogrammed directly and
  // compared against the parent (slow; meant for small fixtures).
  bool check_histograms = false;
  double max_histogram_discrepancy = 0.0;
  std::int64_t histogram_count_mismatches = 0;
  std::int64_t splits_checked = 0;
};

// Boosted regression trees: prediction(x) = baseline + learning_rate * sum(tree(x)).
class Forest {
 public:
  // Squared-error boosting on `targets`. Throws TooFewSamples when there are
  // fewer than 2 * min_samples_leaf rows, NonFiniteTarget on NaN/Inf targets,
  // DimensionMismatch when row counts differ.
  static Forest fit(const Eigen::MatrixXd& features, std::span<const double> targets, const Config& config,
                    FitTrace* trace = nullptr);

  // Throws DimensionMismatch when the column count differs from training.
  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const;
  double predict_row(std::span<const double> row) const;

  double baseline() const { return baseline_; }
  double learning_rate() const { return config_.learning_rate; }
  const Config& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

  void write(io::ByteWriter& out) const;
  static Forest read(io::ByteReader& in);

  // A zero-iteration forest predicting `baseline` everywhere.
  static Forest constant(double baseline, std::size_t n_features, const Config& config);

 private:
  double baseline_ = 0.0;
  std::size_t n_features_ = 0;
  Config config_;
  std::vector<Tree> trees_;
};

}  // namespace slotcast::gbrt
