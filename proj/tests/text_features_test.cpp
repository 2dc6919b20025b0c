#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "slotcast/error.hpp"
#include "slotcast/sql_analyzer.hpp"
#include "slotcast/svd.hpp"
#include "slotcast/synth.hpp"
#include "slotcast/tfidf.hpp"
#include "support/naive_oracles.hpp"

namespace slotcast::text {
namespace {

std::vector<sql::CleanedQuery> corpus(const std::vector<std::string>& docs) {
  std::vector<sql::CleanedQuery> out;
  for (const auto& d : docs) out.push_back(sql::clean_query(d));
  return out;
}

std::vector<double> dense(const SparseVector& v) {
  std::vector<double> out(v.dim, 0.0);
  for (const auto& [i, x] : v.entries) out[i] = x;
  return out;
}

TEST(FitText, TwoDocumentCorpus) {
  const auto state = fit_text(corpus({"A B", "B C"}), TfidfConfig{1, 50000});
  const std::vector<std::string> expected = {"A", "A B", "B", "B C", "C"};
  EXPECT_EQ(state.terms, expected);
  const auto b = state.index_of("B");
  ASSERT_GE(b, 0);
  EXPECT_EQ(state.doc_freq[static_cast<std::size_t>(b)], 2);
  EXPECT_DOUBLE_EQ(state.idf[static_cast<std::size_t>(b)], 1.0);
  EXPECT_NEAR(state.idf[static_cast<std::size_t>(state.index_of("A"))], std::log(3.0 / 2.0) + 1.0, 1e-15);
}

TEST(FitText, SingleDocumentIdfIsOne) {
  const auto state = fit_text(corpus({"SELECT a FROM t"}), TfidfConfig{1, 50000});
  ASSERT_FALSE(state.terms.empty());
  for (const double v : state.idf) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(FitText, RepeatedTermCountsOnceForDf) {
  const auto docs = corpus({"A A", "A"});
  const auto state = fit_text(docs, TfidfConfig{1, 50000});
  EXPECT_EQ(state.doc_freq[static_cast<std::size_t>(state.index_of("A"))], 2);
  const auto v0 = transform_text(state, docs[0]);
  const auto v1 = transform_text(state, docs[1]);
  EXPECT_NE(dense(v0), dense(v1));  // "A A" also carries the bigram
}

TEST(FitText, MinDfAndCap) {
  const auto docs = corpus({"A B C", "A B", "A D", "E"});
  const auto s2 = fit_text(docs, TfidfConfig{2, 50000});
  EXPECT_EQ(s2.terms, (std::vector<std::string>{"A", "A B", "B"}));
  const auto capped = fit_text(docs, TfidfConfig{1, 2});
  // df: A=3, A B=2, B=2 -> keep A and the lexicographically first df-2 term.
  EXPECT_EQ(capped.terms, (std::vector<std::string>{"A", "A B"}));
}

TEST(FitText, EmptyCorpusThrows) {
  try {
    fit_text({}, TfidfConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCorpus);
  }
}

TEST(TransformText, ZeroAndUnitVectors) {
  const auto state = fit_text(corpus({"A B", "B C"}), TfidfConfig{1, 50000});
  EXPECT_TRUE(transform_text(state, sql::clean_query("ZZZ")).entries.empty());
  const auto one = transform_text(state, sql::clean_query("C"));
  ASSERT_EQ(one.entries.size(), 1u);
  EXPECT_NEAR(one.entries[0].second, 1.0, 1e-15);
}

TEST(TransformText, HandComputedTwoTermVector) {
  const auto state = fit_text(corpus({"A B", "B C"}), TfidfConfig{1, 50000});
  // "A C": tf 1 each; idf(A) = idf(C) = ln(3/2)+1; equal weights -> 1/sqrt(2) each.
  const auto v = dense(transform_text(state, sql::clean_query("A C")));
  EXPECT_NEAR(v[static_cast<std::size_t>(state.index_of("A"))], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(v[static_cast<std::size_t>(state.index_of("C"))], 1.0 / std::sqrt(2.0), 1e-15);
  // "A B": tf 1 for A, B, "A B"; idf ln1.5+1, 1, ln1.5+1.
  const double ia = std::log(1.5) + 1.0;
  const double norm = std::sqrt(ia * ia + 1.0 + ia * ia);
  const auto w = dense(transform_text(state, sql::clean_query("A B")));
  EXPECT_NEAR(w[static_cast<std::size_t>(state.index_of("A"))], ia / norm, 1e-15);
  EXPECT_NEAR(w[static_cast<std::size_t>(state.index_of("B"))], 1.0 / norm, 1e-15);
  EXPECT_NEAR(w[static_cast<std::size_t>(state.index_of("A B"))], ia / norm, 1e-15);
}

std::vector<std::string> small_sql_corpus(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> docs;
  for (int i = 0; i < n; ++i) {
    sql::OperatorCounts c;
    for (const auto k : sql::kAllOperatorKinds) c[k] = static_cast<std::int64_t>(rng() % 2);
    c[sql::OperatorKind::Subselect] += c[sql::OperatorKind::WithCte];
    c[sql::OperatorKind::Update] += c[sql::OperatorKind::Merge];
    c[sql::OperatorKind::Insert] += c[sql::OperatorKind::Merge];
    docs.push_back(synth::assemble_sql(c, rng()));
  }
  return docs;
}

TEST(TransformText, MatchesNaiveOracle) {
  for (const int min_df : {1, 2, 3}) {
    const auto raw = small_sql_corpus(static_cast<std::uint64_t>(min_df), 20);
    const auto docs = corpus(raw);
    std::vector<std::string> texts;
    for (const auto& d : docs) texts.push_back(d.text);
    const auto state = fit_text(docs, TfidfConfig{min_df, 50000});
    const auto naive = testing::naive_fit_tfidf(texts, min_df);
    ASSERT_EQ(state.terms, naive.vocab);
    for (std::size_t i = 0; i < state.terms.size(); ++i) {
      EXPECT_NEAR(state.idf[i], naive.idf.at(state.terms[i]), 1e-12);
      EXPECT_EQ(state.doc_freq[i], naive.df.at(state.terms[i]));
    }
    for (const auto& d : docs) {
      const auto mine = dense(transform_text(state, d));
      const auto theirs = naive.vectorize(d.text);
      ASSERT_EQ(mine.size(), theirs.size());
      for (std::size_t i = 0; i < mine.size(); ++i) EXPECT_NEAR(mine[i], theirs[i], 1e-10);
    }
  }
}

TEST(TransformText, RowNormsAreZeroOrOne) {
  const auto docs = corpus(small_sql_corpus(4, 30));
  const auto state = fit_text(docs, TfidfConfig{2, 50000});
  for (const auto& d : docs) {
    const double n = transform_text(state, d).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-9);
  }
}

SparseVector sparse_from(const Eigen::RowVectorXd& row) {
  SparseVector v;
  v.dim = static_cast<std::size_t>(row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row(i) != 0.0) v.entries.emplace_back(static_cast<std::uint32_t>(i), row(i));
  }
  return v;
}

std::vector<SparseVector> random_sparse(std::uint64_t seed, int rows, int cols, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SparseVector> out;
  for (int r = 0; r < rows; ++r) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(cols);
    for (int c = 0; c < cols; ++c) {
      if (u(rng) < density) row(c) = u(rng);
    }
    out.push_back(sparse_from(row));
  }
  return out;
}

void expect_orthonormal(const SvdBasis& b) {
  const Eigen::MatrixXd g = b.components * b.components.transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.rows(), g.cols());
  EXPECT_LE((g - eye).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitSvd, RankOneRecovery) {
  Eigen::RowVectorXd dir(6);
  dir << 1, 2, 0, 0, 3, 1;
  std::vector<SparseVector> rows;
  for (const double s : {1.0, 2.0, -0.5, 4.0}) rows.push_back(sparse_from(s * dir));
  const auto b = fit_svd(rows, 6, SvdConfig{3, 10, 4, 42});
  EXPECT_EQ(b.rank(), 1);
  EXPECT_LE(reconstruction_error(b, rows), 1e-8);
  EXPECT_NEAR(std::abs(b.components.row(0).dot(dir.normalized())), 1.0, 1e-10);
}

TEST(FitSvd, FullRankRecovery) {
  std::vector<SparseVector> rows;
  for (int i = 0; i < 5; ++i) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(8);
    r(i) = 1.0 + i;
    rows.push_back(sparse_from(r));
  }
  // A zero sixth row lifts the n - 1 cap to 5.
  rows.push_back(sparse_from(Eigen::RowVectorXd::Zero(8)));
  const auto b = fit_svd(rows, 8, SvdConfig{6, 10, 4, 42});
  EXPECT_EQ(b.rank(), 5);
  EXPECT_LE(reconstruction_error(b, rows), 1e-8);
  expect_orthonormal(b);
}

TEST(FitSvd, ErrorNonIncreasingInK) {
  const auto rows = random_sparse(9, 50, 200, 0.05);
  double last = std::numeric_limits<double>::infinity();
  for (const int k : {1, 2, 5, 10, 20, 30, 49}) {
    const auto b = fit_svd(rows, 200, SvdConfig{k, 10, 4, 42});
    expect_orthonormal(b);
    const double err = reconstruction_error(b, rows);
    EXPECT_LE(err, last + 1e-9) << "k=" << k;
    last = err;
  }
}

TEST(FitSvd, SingularValuesAndExplainedVarianceNonIncreasing) {
  const auto rows = random_sparse(10, 40, 120, 0.08);
  const auto b = fit_svd(rows, 120, SvdConfig{25, 10, 4, 42});
  const auto evr = b.explained_variance_ratio();
  for (Eigen::Index i = 1; i < b.singular_values.size(); ++i) {
    EXPECT_LE(b.singular_values(i), b.singular_values(i - 1));
    EXPECT_LE(evr(i), evr(i - 1) + 1e-15);
  }
  EXPECT_GT(b.singular_values.minCoeff(), 0.0);
  EXPECT_LE(evr.sum(), 1.0 + 1e-12);
}

TEST(FitSvd, SeedDeterminism) {
  const auto rows = random_sparse(11, 30, 80, 0.1);
  const auto a = fit_svd(rows, 80, SvdConfig{10, 10, 4, 7});
  const auto b = fit_svd(rows, 80, SvdConfig{10, 10, 4, 7});
  EXPECT_TRUE(a.components == b.components);
  EXPECT_TRUE(a.singular_values == b.singular_values);
}

TEST(FitSvd, DegenerateInput) {
  const auto rows = random_sparse(12, 1, 10, 0.5);
  try {
    fit_svd(rows, 10, SvdConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
}

TEST(ProjectText, LinearityAndBasisRows) {
  const auto rows = random_sparse(13, 30, 60, 0.1);
  const auto b = fit_svd(rows, 60, SvdConfig{8, 10, 4, 42});
  SparseVector zero;
  zero.dim = 60;
  EXPECT_EQ(project_text(b, zero).norm(), 0.0);
  for (Eigen::Index i = 0; i < b.rank(); ++i) {
    const Eigen::VectorXd p = project_text(b, sparse_from(b.components.row(i)));
    for (Eigen::Index j = 0; j < p.size(); ++j) EXPECT_NEAR(p(j), i == j ? 1.0 : 0.0, 1e-8);
  }
  SparseVector wrong;
  wrong.dim = 61;
  EXPECT_THROW(project_text(b, wrong), Error);
}

TEST(ProjectText, HandComputedProjection) {
  // Two-document corpus: its TF-IDF rows span a 1-D space after the row rule
  // (k' = n - 1 = 1); the projection of each row is its coordinate along the
  // leading right-singular vector, computed here directly with Eigen.
  const auto docs = corpus({"A B", "B C"});
  const auto state = fit_text(docs, TfidfConfig{1, 50000});
  std::vector<SparseVector> rows;
  for (const auto& d : docs) rows.push_back(transform_text(state, d));
  const auto b = fit_svd(rows, state.size(), SvdConfig{5, 10, 4, 42});
  ASSERT_EQ(b.rank(), 1);
  Eigen::MatrixXd a(2, static_cast<Eigen::Index>(state.size()));
  for (int r = 0; r < 2; ++r) {
    const auto d = dense(rows[static_cast<std::size_t>(r)]);
    for (std::size_t c = 0; c < d.size(); ++c) a(r, static_cast<Eigen::Index>(c)) = d[c];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> exact(a, Eigen::ComputeFullV);
  Eigen::VectorXd v0 = exact.matrixV().col(0);
  Eigen::Index arg = 0;
  v0.cwiseAbs().maxCoeff(&arg);
  if (v0(arg) < 0) v0 = -v0;
  for (int r = 0; r < 2; ++r) {
    EXPECT_NEAR(project_text(b, rows[static_cast<std::size_t>(r)])(0), a.row(r).dot(v0), 1e-10);
  }
}

}  // namespace
}  // namespace slotcast::text
