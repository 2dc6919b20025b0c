#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "slotcast/tfidf.hpp"

namespace slotcast::text {

struct SvdConfig {
  std::int64_t components = 512;
  std::int64_t oversampling = 10;
  std::int64_t power_iterations = 4;
  std::uint64_t seed = 42;
};

// Truncated right-singular basis of a TF-IDF matrix.
struct SvdBasis {
  // k x V, orthonormal rows.
  Eigen::MatrixXd components;
  // length k, non-increasing, strictly positive.
  Eigen::VectorXd singular_values;
  // ||A||_F^2 of the fitted matrix, for explained-variance ratios.
  double total_sq_norm = 0.0;
  std::size_t vocab_size = 0;

  std::int64_t rank() const { return components.rows(); }
  Eigen::VectorXd explained_variance_ratio() const;
};

// Randomized range finder with power iterations followed by an exact SVD of the
// projected matrix. Effective rank is min(k, n_rows - 1, vocab) further reduced
// to the numerical rank. Throws DegenerateInput with fewer than 2 rows.
SvdBasis fit_svd(std::span<const SparseVector> rows, std::size_t vocab_size, const SvdConfig& config);

// components * v. Throws DimensionMismatch when v.dim differs from the basis width.
Eigen::VectorXd project_text(const SvdBasis& basis, const SparseVector& v);

// Frobenius norm of A - A V^T V over the given rows.
double reconstruction_error(const SvdBasis& basis, std::span<const SparseVector> rows);

}  // namespace slotcast::text
