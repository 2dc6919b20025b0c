#include "slotcast/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "slotcast/error.hpp"

namespace slotcast::gbrt {

namespace {

struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  std::int32_t feature = -1;
  std::uint8_t bin = 0;
  double threshold = 0.0;
  bool missing_left = false;
  std::uint32_t left_count = 0;
};

// A leaf under construction: owns rows [begin, end) of the shared index array.
struct Frontier {
  std::int32_t node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double grad_sum = 0.0;
  std::vector<HistogramBin> hist;
  SplitCandidate split;
};

double leaf_objective(double g, double n, double l2) { return g * g / (n + l2); }

SplitCandidate find_split(const std::vector<HistogramBin>& hist, const BinMapper& mapper, double grad_sum,
                          std::uint32_t count, double sse, const Config& config) {
  SplitCandidate best;
  const double l2 = config.l2;
  const auto min_leaf = static_cast<std::uint32_t>(config.min_samples_leaf);
  const double parent = leaf_objective(grad_sum, count, l2);
  // Gains below this are floating-point noise on a (near-)pure node.
  const double min_gain = 1e-12 * sse;

  auto consider = [&](std::size_t f, std::uint8_t b, double threshold, double gl, std::uint32_t nl,
                      bool missing_left) {
    const std::uint32_t nr = count - nl;
    if (nl < min_leaf || nr < min_leaf) return;
    const double gain = leaf_objective(gl, nl, l2) + leaf_objective(grad_sum - gl, nr, l2) - parent;
    if (gain > min_gain && gain > 0.0 && (!best.valid || gain > best.gain)) {
      best = {true, gain, static_cast<std::int32_t>(f), b, threshold, missing_left, nl};
    }
  };

  for (std::size_t f = 0; f < mapper.n_features(); ++f) {
    const HistogramBin* h = hist.data() + f * kHistogramWidth;
    const HistogramBin& missing = h[kMissingBin];
    const std::size_t nb = mapper.n_bins(f);
    const auto& edges = mapper.edges(f);
    double gl = 0.0;
    std::uint32_t nl = 0;
    for (std::size_t b = 0; b + 1 < nb; ++b) {
      gl += h[b].grad_sum;
      nl += h[b].count;
      const auto bin = static_cast<std::uint8_t>(b);
      consider(f, bin, edges[b], gl, nl, false);
      if (missing.count > 0) consider(f, bin, edges[b], gl + missing.grad_sum, nl + missing.count, true);
    }
    if (missing.count > 0) {
      // Every non-missing value left, missing values right.
      gl += h[nb - 1].grad_sum;
      nl += h[nb - 1].count;
      consider(f, static_cast<std::uint8_t>(nb - 1), std::numeric_limits<double>::infinity(), gl, nl, false);
    }
  }
  return best;
}

bool goes_left(std::uint8_t bin, const SplitCandidate& s) {
  return bin == kMissingBin ? s.missing_left : bin <= s.bin;
}

double histogram_discrepancy(const std::vector<HistogramBin>& parent, const std::vector<HistogramBin>& left,
                             const std::vector<HistogramBin>& right, std::int64_t& count_mismatches) {
  double worst = 0.0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    worst = std::max(worst, std::abs(left[i].grad_sum + right[i].grad_sum - parent[i].grad_sum));
    if (left[i].count + right[i].count != parent[i].count) ++count_mismatches;
  }
  return worst;
}

void write_config(io::ByteWriter& out, const Config& c) {
  out.f64(c.learning_rate);
  out.i64(c.iterations);
  out.i64(c.max_leaves);
  out.i64(c.min_samples_leaf);
  out.f64(c.l2);
  out.i64(c.max_bins);
  out.i64(c.binning_sample);
  out.u64(c.seed);
}

Config read_config(io::ByteReader& in) {
  Config c;
  c.learning_rate = in.f64();
  c.iterations = in.i64();
  c.max_leaves = in.i64();
  c.min_samples_leaf = in.i64();
  c.l2 = in.f64();
  c.max_bins = in.i64();
  c.binning_sample = in.i64();
  c.seed = in.u64();
  return c;
}

}  // namespace

void Config::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (iterations < 0) fail("iterations must be >= 0");
  if (max_leaves < 2) fail("max_leaves must be >= 2");
  if (min_samples_leaf < 1) fail("min_samples_leaf must be >= 1");
  if (!(l2 >= 0.0)) fail("l2 must be >= 0");
  if (max_bins < 2 || max_bins > 255) fail("max_bins must be in [2, 255]");
  if (binning_sample < 1) fail("binning_sample must be >= 1");
}

BinMapper BinMapper::fit(const Eigen::MatrixXd& x, const Config& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), 0);
  if (n > static_cast<std::size_t>(config.binning_sample)) {
    std::mt19937_64 rng(config.seed);
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(static_cast<std::size_t>(config.binning_sample));
    std::sort(sample.begin(), sample.end());
  }

  const auto max_bins = static_cast<std::size_t>(config.max_bins);
  BinMapper mapper;
  mapper.edges_.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> values;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    values.clear();
    for (const auto r : sample) {
      const double v = x(static_cast<Eigen::Index>(r), f);
      if (!std::isnan(v)) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    auto& edges = mapper.edges_[static_cast<std::size_t>(f)];
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() <= max_bins) {
      for (std::size_t i = 1; i < distinct.size(); ++i) {
        edges.push_back(distinct[i - 1] + (distinct[i] - distinct[i - 1]) / 2.0);
      }
    } else {
      const double last = static_cast<double>(values.size() - 1);
      for (std::size_t i = 1; i < max_bins; ++i) {
        const double pos = last * static_cast<double>(i) / static_cast<double>(max_bins);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double q = values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
        if (edges.empty() || q > edges.back()) edges.push_back(q);
      }
      // The top edge must leave at least one value above it.
      while (!edges.empty() && edges.back() >= values.back()) edges.pop_back();
    }
  }
  return mapper;
}

std::uint8_t BinMapper::bin(std::size_t feature, double value) const {
  if (std::isnan(value)) return kMissingBin;
  const auto& e = edges_[feature];
  return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

BinnedMatrix BinnedMatrix::from(const BinMapper& mapper, const Eigen::MatrixXd& x) {
  BinnedMatrix b;
  b.rows = static_cast<std::size_t>(x.rows());
  b.cols = static_cast<std::size_t>(x.cols());
  b.bins.resize(b.rows * b.cols);
  for (std::size_t f = 0; f < b.cols; ++f) {
    for (std::size_t r = 0; r < b.rows; ++r) {
      b.bins[f * b.rows + r] = mapper.bin(f, x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)));
    }
  }
  return b;
}

std::vector<HistogramBin> build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                                          std::span<const double> residuals) {
  std::vector<HistogramBin> hist(binned.cols * kHistogramWidth);
  for (std::size_t f = 0; f < binned.cols; ++f) {
    HistogramBin* h = hist.data() + f * kHistogramWidth;
    const std::uint8_t* col = binned.bins.data() + f * binned.rows;
    for (const auto r : rows) {
      HistogramBin& slot = h[col[r]];
      slot.grad_sum += residuals[r];
      ++slot.count;
    }
  }
  return hist;
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const Node& n = nodes[i];
    const double x = row[static_cast<std::size_t>(n.feature)];
    const bool left = std::isnan(x) ? n.missing_left : x <= n.threshold;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

Forest Forest::constant(double baseline, std::size_t n_features, const Config& config) {
  Forest f;
  f.baseline_ = baseline;
  f.n_features_ = n_features;
  f.config_ = config;
  f.config_.iterations = 0;
  return f;
}

Forest Forest::fit(const Eigen::MatrixXd& features, std::span<const double> targets, const Config& config,
                   FitTrace* trace) {
  config.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n != targets.size()) throw Error(ErrorKind::DimensionMismatch, "feature rows and targets differ in length");
  if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw Error(ErrorKind::TooFewSamples, "need at least " + std::to_string(2 * config.min_samples_leaf) +
                                              " rows, got " + std::to_string(n));
  }
  for (const double y : targets) {
    if (!std::isfinite(y)) throw Error(ErrorKind::NonFiniteTarget, "targets must be finite");
  }

  Forest forest;
  forest.config_ = config;
  forest.n_features_ = static_cast<std::size_t>(features.cols());
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  if (*lo == *hi) {
    forest.baseline_ = *lo;
  } else {
    double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
    double correction = 0.0;
    for (const double y : targets) correction += y - mean;
    forest.baseline_ = mean + correction / static_cast<double>(n);
  }

  const BinMapper mapper = BinMapper::fit(features, config);
  const BinnedMatrix binned = BinnedMatrix::from(mapper, features);

  std::vector<double> pred(n, forest.baseline_);
  std::vector<double> residual(n);
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (targets[i] - pred[i]) * (targets[i] - pred[i]);
    return s / static_cast<double>(n);
  };
  if (trace) trace->train_mse.push_back(mse());

  std::vector<std::uint32_t> index(n);
  const auto max_leaves = static_cast<std::size_t>(config.max_leaves);
  forest.trees_.reserve(static_cast<std::size_t>(config.iterations));

  for (std::int64_t iter = 0; iter < config.iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - pred[i];
    std::iota(index.begin(), index.end(), 0u);

    auto span_of = [&](const Frontier& f) {
      return std::span<const std::uint32_t>(index.data() + f.begin, f.end - f.begin);
    };
    auto evaluate = [&](Frontier& f) {
      double sse = 0.0;
      f.grad_sum = 0.0;
      for (const auto r : span_of(f)) {
        f.grad_sum += residual[r];
        sse += residual[r] * residual[r];
      }
      f.split = find_split(f.hist, mapper, f.grad_sum, static_cast<std::uint32_t>(f.end - f.begin), sse, config);
      if (!f.split.valid) f.hist = {};
    };

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Frontier> open;
    {
      Frontier root{0, 0, n, 0.0, build_histogram(binned, index, residual), {}};
      evaluate(root);
      open.push_back(std::move(root));
    }

    std::size_t leaves = 1;
    while (leaves < max_leaves) {
      // Best gain first; ties go to the earliest-created node.
      auto best = open.end();
      for (auto it = open.begin(); it != open.end(); ++it) {
        if (it->split.valid && (best == open.end() || it->split.gain > best->split.gain)) best = it;
      }
      if (best == open.end()) break;
      Frontier parent = std::move(*best);
      open.erase(best);

      const SplitCandidate& s = parent.split;
      const std::uint8_t* col = binned.bins.data() + static_cast<std::size_t>(s.feature) * n;
      std::stable_partition(index.begin() + static_cast<std::ptrdiff_t>(parent.begin),
                            index.begin() + static_cast<std::ptrdiff_t>(parent.end),
                            [&](std::uint32_t r) { return goes_left(col[r], s); });
      const std::size_t mid = parent.begin + s.left_count;

      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      Node& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = s.feature;
      node.threshold = s.threshold;
      node.bin = s.bin;
      node.gain = s.gain;
      node.left = left_id;
      node.right = left_id + 1;
      const bool saw_missing = parent.hist[static_cast<std::size_t>(s.feature) * kHistogramWidth + kMissingBin].count > 0;
      node.missing_left = saw_missing ? s.missing_left : (mid - parent.begin) >= (parent.end - mid);

      Frontier left{left_id, parent.begin, mid, 0.0, {}, {}};
      Frontier right{left_id + 1, mid, parent.end, 0.0, {}, {}};
      Frontier& small = (mid - parent.begin) <= (parent.end - mid) ? left : right;
      Frontier& large = &small == &left ? right : left;
      if (trace && trace->check_histograms) {
        const auto direct_left = build_histogram(binned, span_of(left), residual);
        const auto direct_right = build_histogram(binned, span_of(right), residual);
        trace->max_histogram_discrepancy =
            std::max(trace->max_histogram_discrepancy,
                     histogram_discrepancy(parent.hist, direct_left, direct_right, trace->histogram_count_mismatches));
        ++trace->splits_checked;
      }
      // Subtraction trick: only the smaller child is histogrammed directly.
      small.hist = build_histogram(binned, span_of(small), residual);
      large.hist = std::move(parent.hist);
      for (std::size_t i = 0; i < large.hist.size(); ++i) {
        large.hist[i].grad_sum -= small.hist[i].grad_sum;
        large.hist[i].count -= small.hist[i].count;
      }
      evaluate(left);
      evaluate(right);
      open.push_back(std::move(left));
      open.push_back(std::move(right));
      std::sort(open.begin(), open.end(), [](const Frontier& a, const Frontier& b) { return a.node < b.node; });
      ++leaves;
    }

    for (const Frontier& f : open) {
      const double value = f.grad_sum / (static_cast<double>(f.end - f.begin) + config.l2);
      tree.nodes[static_cast<std::size_t>(f.node)].value = value;
      for (const auto r : span_of(f)) pred[r] += config.learning_rate * value;
    }
    forest.trees_.push_back(std::move(tree));
    if (trace) trace->train_mse.push_back(mse());
  }
  return forest;
}

double Forest::predict_row(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(n_features_) + " features, got " +
                                                  std::to_string(row.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(row);
  return baseline_ + config_.learning_rate * sum;
}

Eigen::VectorXd Forest::predict(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != n_features_) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(n_features_) + " features, got " +
                                                  std::to_string(features.cols()));
  }
  Eigen::VectorXd out(features.rows());
  std::vector<double> row(n_features_);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < n_features_; ++c) row[c] = features(r, static_cast<Eigen::Index>(c));
    out(r) = predict_row(row);
  }
  return out;
}

void Forest::write(io::ByteWriter& out) const {
  write_config(out, config_);
  out.f64(baseline_);
  out.u64(n_features_);
  out.u64(trees_.size());
  for (const auto& t : trees_) {
    out.u64(t.nodes.size());
    for (const auto& node : t.nodes) {
      out.u32(static_cast<std::uint32_t>(node.feature));
      out.f64(node.threshold);
      out.u8(node.bin);
      out.u8(node.missing_left ? 1 : 0);
      out.u32(static_cast<std::uint32_t>(node.left));
      out.u32(static_cast<std::uint32_t>(node.right));
      out.f64(node.value);
      out.f64(node.gain);
    }
  }
}

Forest Forest::read(io::ByteReader& in) {
  constexpr std::size_t kNodeBytes = 4 + 8 + 1 + 1 + 4 + 4 + 8 + 8;
  Forest f;
  f.config_ = read_config(in);
  f.baseline_ = in.f64();
  f.n_features_ = static_cast<std::size_t>(in.u64());
  const std::size_t n_trees = in.count(8);
  f.trees_.resize(n_trees);
  for (auto& t : f.trees_) {
    t.nodes.resize(in.count(kNodeBytes));
    for (auto& node : t.nodes) {
      node.feature = static_cast<std::int32_t>(in.u32());
      node.threshold = in.f64();
      node.bin = in.u8();
      node.missing_left = in.u8() != 0;
      node.left = static_cast<std::int32_t>(in.u32());
      node.right = static_cast<std::int32_t>(in.u32());
      node.value = in.f64();
      node.gain = in.f64();
    }
    // Structural validation so a corrupt payload cannot send predict() out of bounds.
    const auto size = static_cast<std::int32_t>(t.nodes.size());
    if (size == 0) throw Error(ErrorKind::CorruptBundle, "empty tree");
    for (std::int32_t i = 0; i < size; ++i) {
      const Node& node = t.nodes[static_cast<std::size_t>(i)];
      if (node.is_leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= f.n_features_ || node.left <= i || node.right <= i ||
          node.left >= size || node.right >= size) {
        throw Error(ErrorKind::CorruptBundle, "malformed tree node");
      }
    }
  }
  return f;
}

}  // namespace slotcast::gbrt
