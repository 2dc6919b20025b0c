#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "slotcast/error.hpp"
#include "slotcast/gbrt.hpp"

namespace slotcast::gbrt {
namespace {

struct Fixture {
  Eigen::MatrixXd x;
  std::vector<double> y;
};

Fixture nonlinear(std::uint64_t seed, int n, int d, double missing_rate = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::bernoulli_distribution miss(missing_rate);
  Fixture f{Eigen::MatrixXd(n, d), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) f.x(i, j) = u(rng);
    f.y[static_cast<std::size_t>(i)] =
        std::sin(f.x(i, 0)) + (d > 1 ? f.x(i, 1) * f.x(i, 1) : 0.0) + (f.x(i, 0) > 0.5 ? 2.0 : 0.0) + noise(rng);
    for (int j = 0; j < d; ++j) {
      if (miss(rng)) f.x(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return f;
}

Config small_config() {
  Config c;
  c.iterations = 50;
  c.min_samples_leaf = 5;
  c.max_leaves = 15;
  c.learning_rate = 0.1;
  return c;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::InvalidConfig;
}

TEST(Gbrt, ConstantTargetPredictsConstantExactly) {
  auto f = nonlinear(1, 200, 3);
  std::fill(f.y.begin(), f.y.end(), 4.25);
  const auto forest = Forest::fit(f.x, f.y, small_config());
  EXPECT_EQ(forest.baseline(), 4.25);
  const auto p = forest.predict(f.x);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_EQ(p(i), 4.25);
  const auto probe = nonlinear(2, 50, 3);
  const auto q = forest.predict(probe.x);
  for (Eigen::Index i = 0; i < q.size(); ++i) EXPECT_EQ(q(i), 4.25);
}

TEST(Gbrt, LearnsLinearFunction) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1000;
  Eigen::MatrixXd x(n, 1);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    y[static_cast<std::size_t>(i)] = 3.0 * x(i, 0);
  }
  Config c;
  c.iterations = 300;
  c.learning_rate = 0.1;
  c.min_samples_leaf = 5;
  const auto forest = Forest::fit(x, y, c);
  const auto p = forest.predict(x);
  double ss_res = 0.0, ss_tot = 0.0, mean = 1.5;
  for (int i = 0; i < n; ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    ss_res += (yi - p(i)) * (yi - p(i));
    ss_tot += (yi - mean) * (yi - mean);
    EXPECT_NEAR(p(i), yi, 0.05) << "x=" << x(i, 0);
  }
  EXPECT_GE(1.0 - ss_res / ss_tot, 0.99);
}

TEST(Gbrt, TrainingMseNonIncreasing) {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = nonlinear(seed, 500, 4, 0.1);
    FitTrace trace;
    Forest::fit(f.x, f.y, small_config(), &trace);
    ASSERT_EQ(trace.train_mse.size(), 51u);
    for (std::size_t i = 1; i < trace.train_mse.size(); ++i) {
      EXPECT_LE(trace.train_mse[i], trace.train_mse[i - 1] * (1.0 + 1e-12)) << "iteration " << i;
    }
    EXPECT_LT(trace.train_mse.back(), 0.2 * trace.train_mse.front());
  }
}

TEST(Gbrt, HistogramSubtractionMatchesDirect) {
  const auto f = nonlinear(7, 400, 5, 0.15);
  FitTrace trace;
  trace.check_histograms = true;
  Forest::fit(f.x, f.y, small_config(), &trace);
  EXPECT_GT(trace.splits_checked, 0);
  EXPECT_EQ(trace.histogram_count_mismatches, 0);
  EXPECT_LE(trace.max_histogram_discrepancy, 1e-9);
}

TEST(Gbrt, BuildHistogramAgreesWithNaiveSums) {
  const auto f = nonlinear(8, 120, 3, 0.2);
  const auto mapper = BinMapper::fit(f.x, small_config());
  const auto binned = BinnedMatrix::from(mapper, f.x);
  std::vector<std::uint32_t> rows;
  for (std::uint32_t i = 0; i < 120; i += 3) rows.push_back(i);
  const auto hist = build_histogram(binned, rows, f.y);
  for (std::size_t feat = 0; feat < 3; ++feat) {
    std::vector<double> sums(kHistogramWidth, 0.0);
    std::vector<std::uint32_t> counts(kHistogramWidth, 0);
    for (const auto r : rows) {
      const auto b = mapper.bin(feat, f.x(r, static_cast<Eigen::Index>(feat)));
      sums[b] += f.y[r];
      ++counts[b];
    }
    for (std::size_t b = 0; b < kHistogramWidth; ++b) {
      EXPECT_NEAR(hist[feat * kHistogramWidth + b].grad_sum, sums[b], 1e-12);
      EXPECT_EQ(hist[feat * kHistogramWidth + b].count, counts[b]);
    }
  }
}

TEST(Gbrt, BinMapperRespectsEdges) {
  const auto f = nonlinear(9, 300, 2, 0.1);
  Config c = small_config();
  c.max_bins = 16;
  const auto mapper = BinMapper::fit(f.x, c);
  for (std::size_t feat = 0; feat < 2; ++feat) {
    const auto& e = mapper.edges(feat);
    EXPECT_LE(mapper.n_bins(feat), 16u);
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i - 1], e[i]);
    for (Eigen::Index r = 0; r < f.x.rows(); ++r) {
      const double v = f.x(r, static_cast<Eigen::Index>(feat));
      const auto b = mapper.bin(feat, v);
      if (std::isnan(v)) {
        EXPECT_EQ(b, kMissingBin);
        continue;
      }
      if (b < e.size()) {
        EXPECT_LE(v, e[b]);
      }
      if (b > 0) {
        EXPECT_GT(v, e[b - 1u]);
      }
    }
  }
}

TEST(Gbrt, SameSeedGivesByteIdenticalForest) {
  const auto f = nonlinear(10, 300, 4, 0.05);
  Config c = small_config();
  c.binning_sample = 100;  // exercise the seeded sample
  io::ByteWriter a, b;
  Forest::fit(f.x, f.y, c).write(a);
  Forest::fit(f.x, f.y, c).write(b);
  EXPECT_EQ(a.data(), b.data());
}

TEST(Gbrt, SerializationRoundTripIsBitExact) {
  const auto f = nonlinear(11, 300, 4, 0.1);
  const auto forest = Forest::fit(f.x, f.y, small_config());
  io::ByteWriter w;
  forest.write(w);
  io::ByteReader r(w.data());
  const auto back = Forest::read(r);
  EXPECT_TRUE(r.done());
  EXPECT_EQ(back.config(), forest.config());
  const auto probe = nonlinear(12, 100, 4, 0.2);
  const auto p1 = forest.predict(probe.x);
  const auto p2 = back.predict(probe.x);
  for (Eigen::Index i = 0; i < p1.size(); ++i) EXPECT_EQ(p1(i), p2(i));
}

TEST(Gbrt, PredictionsStayWithinTargetRange) {
  for (const std::uint64_t seed : {13u, 14u, 15u}) {
    const auto f = nonlinear(seed, 400, 3, 0.1);
    const auto [lo, hi] = std::minmax_element(f.y.begin(), f.y.end());
    const auto forest = Forest::fit(f.x, f.y, small_config());
    const auto probe = nonlinear(seed + 100, 400, 3, 0.3);
    for (const auto* m : {&f.x, &probe.x}) {
      const auto p = forest.predict(*m);
      EXPECT_GE(p.minCoeff(), *lo);
      EXPECT_LE(p.maxCoeff(), *hi);
    }
  }
}

TEST(Gbrt, MissingValuesFollowLearnedDirection) {
  // y depends only on whether x0 is missing.
  const int n = 200;
  Eigen::MatrixXd x(n, 1);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    const bool miss = i % 4 == 0;
    x(i, 0) = miss ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(i);
    y[static_cast<std::size_t>(i)] = miss ? 10.0 : 0.0;
  }
  Config c = small_config();
  c.learning_rate = 0.5;
  const auto forest = Forest::fit(x, y, c);
  Eigen::MatrixXd probe(2, 1);
  probe << std::numeric_limits<double>::quiet_NaN(), 37.0;
  const auto p = forest.predict(probe);
  EXPECT_NEAR(p(0), 10.0, 1e-3);
  EXPECT_NEAR(p(1), 0.0, 1e-3);
}

TEST(Gbrt, UnseenMissingGoesToLargerChild) {
  const int n = 100;
  Eigen::MatrixXd x(n, 1);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = i;
    y[static_cast<std::size_t>(i)] = i < 70 ? 1.0 : 5.0;
  }
  Config c = small_config();
  c.iterations = 1;
  c.max_leaves = 2;
  const auto forest = Forest::fit(x, y, c);
  const auto& root = forest.trees().front().nodes.front();
  ASSERT_FALSE(root.is_leaf());
  EXPECT_TRUE(root.missing_left);
  Eigen::MatrixXd nan_row(1, 1);
  nan_row << std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd left_row(1, 1);
  left_row << 0.0;
  EXPECT_EQ(forest.predict(nan_row)(0), forest.predict(left_row)(0));
}

TEST(Gbrt, LeafCountAndMinSamplesRespected) {
  const auto f = nonlinear(16, 500, 4);
  Config c = small_config();
  c.max_leaves = 7;
  c.min_samples_leaf = 30;
  const auto forest = Forest::fit(f.x, f.y, c);
  for (const auto& t : forest.trees()) {
    EXPECT_LE(t.leaf_count(), 7u);
    std::vector<int> hits(t.nodes.size(), 0);
    for (Eigen::Index r = 0; r < f.x.rows(); ++r) {
      std::size_t node = 0;
      while (!t.nodes[node].is_leaf()) {
        const auto& nd = t.nodes[node];
        node = static_cast<std::size_t>(f.x(r, nd.feature) <= nd.threshold ? nd.left : nd.right);
      }
      ++hits[node];
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      if (t.nodes[i].is_leaf()) {
        EXPECT_GE(hits[i], 30);
      }
    }
  }
}

TEST(Gbrt, ZeroIterationsAndConstantForestPredictBaseline) {
  const auto f = nonlinear(17, 100, 2);
  Config c = small_config();
  c.iterations = 0;
  const auto forest = Forest::fit(f.x, f.y, c);
  double mean = 0.0;
  for (const double v : f.y) mean += v;
  mean /= 100.0;
  EXPECT_NEAR(forest.baseline(), mean, 1e-12);
  EXPECT_TRUE(forest.trees().empty());
  const auto p = forest.predict(f.x);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_EQ(p(i), forest.baseline());
  const auto k = Forest::constant(-1.5, 2, c);
  EXPECT_EQ(k.predict(f.x).maxCoeff(), -1.5);
  EXPECT_EQ(k.predict(f.x).minCoeff(), -1.5);
}

TEST(Gbrt, Errors) {
  const auto f = nonlinear(18, 30, 2);
  Config c = small_config();
  c.min_samples_leaf = 16;
  EXPECT_EQ(kind_of([&] { Forest::fit(f.x, f.y, c); }), ErrorKind::TooFewSamples);
  c.min_samples_leaf = 15;
  EXPECT_NO_THROW(Forest::fit(f.x, f.y, c));

  auto bad = f.y;
  bad[3] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(kind_of([&] { Forest::fit(f.x, bad, small_config()); }), ErrorKind::NonFiniteTarget);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { Forest::fit(f.x, bad, small_config()); }), ErrorKind::NonFiniteTarget);

  std::vector<double> short_y(f.y.begin(), f.y.end() - 1);
  EXPECT_EQ(kind_of([&] { Forest::fit(f.x, short_y, small_config()); }), ErrorKind::DimensionMismatch);

  const auto forest = Forest::fit(f.x, f.y, small_config());
  Eigen::MatrixXd wide(1, 3);
  wide.setZero();
  EXPECT_EQ(kind_of([&] { forest.predict(wide); }), ErrorKind::DimensionMismatch);

  for (auto mutate : std::vector<std::function<void(Config&)>>{
           [](Config& k) { k.learning_rate = 0.0; }, [](Config& k) { k.iterations = -1; },
           [](Config& k) { k.max_leaves = 1; }, [](Config& k) { k.min_samples_leaf = 0; },
           [](Config& k) { k.l2 = -1.0; }, [](Config& k) { k.max_bins = 256; },
           [](Config& k) { k.max_bins = 1; }, [](Config& k) { k.binning_sample = 0; }}) {
    Config k = small_config();
    mutate(k);
    EXPECT_EQ(kind_of([&] { k.validate(); }), ErrorKind::InvalidConfig);
  }
}

TEST(Gbrt, TruncatedForestIsCorrupt) {
  const auto f = nonlinear(19, 100, 2);
  io::ByteWriter w;
  Forest::fit(f.x, f.y, small_config()).write(w);
  auto bytes = w.data();
  bytes.resize(bytes.size() / 2);
  io::ByteReader r(bytes);
  EXPECT_EQ(kind_of([&] { Forest::read(r); }), ErrorKind::CorruptBundle);
}

}  // namespace
}  // namespace slotcast::gbrt
