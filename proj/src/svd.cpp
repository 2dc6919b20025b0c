#include "slotcast/svd.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "slotcast/error.hpp"

namespace slotcast::text {

namespace {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseRowMatrix to_sparse(std::span<const SparseVector> rows, std::size_t vocab_size) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim != vocab_size) {
      throw Error(ErrorKind::DimensionMismatch, "TF-IDF row width differs from vocabulary size");
    }
    for (const auto& [j, v] : rows[i].entries) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  }
  SparseRowMatrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(vocab_size));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

}  // namespace

Eigen::VectorXd SvdBasis::explained_variance_ratio() const {
  if (total_sq_norm <= 0.0) return Eigen::VectorXd::Zero(singular_values.size());
  return singular_values.array().square() / total_sq_norm;
}

SvdBasis fit_svd(std::span<const SparseVector> rows, std::size_t vocab_size, const SvdConfig& config) {
  if (rows.size() < 2) throw Error(ErrorKind::DegenerateInput, "SVD needs at least 2 rows");
  if (config.components < 1) throw Error(ErrorKind::InvalidConfig, "SVD components must be >= 1");

  const SparseRowMatrix a = to_sparse(rows, vocab_size);
  const auto n = static_cast<std::int64_t>(rows.size());
  const auto v = static_cast<std::int64_t>(vocab_size);

  SvdBasis basis;
  basis.vocab_size = vocab_size;
  basis.total_sq_norm = a.squaredNorm();
  const std::int64_t target = std::min({config.components, n - 1, v});
  if (target <= 0 || basis.total_sq_norm == 0.0) {
    basis.components.resize(0, v);
    basis.singular_values.resize(0);
    return basis;
  }
  const std::int64_t width = std::min(target + std::max<std::int64_t>(config.oversampling, 0), std::min(n, v));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd omega(v, width);
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = gauss(rng);
  }

  Eigen::MatrixXd q = orthonormalize(a * omega);
  for (std::int64_t it = 0; it < config.power_iterations; ++it) {
    const Eigen::MatrixXd z = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * z);
  }

  // B = Q^T A, held transposed (V x width) to avoid a dense V-wide row product.
  const Eigen::MatrixXd bt = a.transpose() * q;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::MatrixXd& right = svd.matrixU();  // right singular vectors of A

  std::int64_t keep = 0;
  const double tol = s.size() > 0 ? s(0) * 1e-10 : 0.0;
  while (keep < target && keep < s.size() && s(keep) > tol) ++keep;

  basis.components = right.leftCols(keep).transpose();
  basis.singular_values = s.head(keep);
  for (Eigen::Index r = 0; r < basis.components.rows(); ++r) {
    Eigen::Index pivot = 0;
    basis.components.row(r).cwiseAbs().maxCoeff(&pivot);
    if (basis.components(r, pivot) < 0.0) basis.components.row(r) *= -1.0;
  }
  return basis;
}

Eigen::VectorXd project_text(const SvdBasis& basis, const SparseVector& v) {
  if (v.dim != basis.vocab_size) {
    throw Error(ErrorKind::DimensionMismatch, "term vector width " + std::to_string(v.dim) +
                                                  " does not match basis width " +
                                                  std::to_string(basis.vocab_size));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.components.rows());
  for (const auto& [j, value] : v.entries) out += value * basis.components.col(j);
  return out;
}

double reconstruction_error(const SvdBasis& basis, std::span<const SparseVector> rows) {
  double err = 0.0;
  for (const auto& row : rows) {
    Eigen::VectorXd dense = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(row.dim));
    for (const auto& [j, value] : row.entries) dense(j) = value;
    const Eigen::VectorXd coeffs = project_text(basis, row);
    const Eigen::VectorXd residual = dense - basis.components.transpose() * coeffs;
    err += residual.squaredNorm();
  }
  return std::sqrt(err);
}

}  // namespace slotcast::text
