#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "r4style/error.hpp"
#include "r4style/solver.hpp"

namespace r4style {

/// Rank-r truncation of an embedding matrix E ≈ U_r Σ_r V_rᵀ.
template <typename Scalar = double>
struct TruncatedSVD {
  MatrixX<Scalar> U;      // k × r
  VectorX<Scalar> sigma;  // r singular values, descending
  MatrixX<Scalar> V;      // d × r
  Eigen::Index rank = 0;
  Scalar discarded_energy = 0;  // Σ_{i>r} σᵢ²
  std::optional<VectorX<Scalar>> mean;  // column means, when fitted with centering

  Eigen::Index input_dim() const { return V.rows(); }

  MatrixX<Scalar> reconstruct() const {
    MatrixX<Scalar> E = U * sigma.asDiagonal() * V.transpose();
    if (mean) E.rowwise() += mean->transpose();
    return E;
  }
};

struct SvdOptions {
  bool center = false;  // subtract column means before decomposing
};

template <typename Scalar = double, typename Derived>
TruncatedSVD<Scalar> truncated_svd(const Eigen::MatrixBase<Derived>& E, Eigen::Index rank, const SvdOptions& opts = {}) {
  const Eigen::Index max_rank = std::min(E.rows(), E.cols());
  if (rank < 1 || rank > max_rank)
    throw ValidationError("svd rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) + "]");
  if (!E.allFinite()) throw ValidationError("embedding matrix contains non-finite values");

  MatrixX<Scalar> A = E.template cast<Scalar>();
  TruncatedSVD<Scalar> out;
  if (opts.center) {
    out.mean = A.colwise().mean().transpose();
    A.rowwise() -= out.mean->transpose();
  }
  Eigen::BDCSVD<MatrixX<Scalar>> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  out.rank = rank;
  out.U = svd.matrixU().leftCols(rank);
  out.sigma = s.head(rank);
  out.V = svd.matrixV().leftCols(rank);
  out.discarded_energy = s.tail(s.size() - rank).squaredNorm();
  return out;
}

/// Coordinates of a d-dimensional embedding in the retained row space: V_rᵀ e.
template <typename Scalar, typename Derived>
VectorX<Scalar> project(const TruncatedSVD<Scalar>& svd, const Eigen::MatrixBase<Derived>& e) {
  if (e.size() != svd.input_dim())
    throw ValidationError("project: embedding has " + std::to_string(e.size()) + " entries, expected " +
                          std::to_string(svd.input_dim()));
  if (svd.mean) return svd.V.transpose() * (e.template cast<Scalar>() - *svd.mean);
  return svd.V.transpose() * e.template cast<Scalar>();
}

/// Row-wise projection of a k' × d batch.
template <typename Scalar, typename Derived>
MatrixX<Scalar> project_rows(const TruncatedSVD<Scalar>& svd, const Eigen::MatrixBase<Derived>& E) {
  if (E.cols() != svd.input_dim()) throw ValidationError("project_rows: embedding width differs from svd input");
  if (svd.mean) return (E.template cast<Scalar>().rowwise() - svd.mean->transpose()) * svd.V;
  return E.template cast<Scalar>() * svd.V;
}

// <prefix>.U.slmx, <prefix>.S.slmx (r × 1), <prefix>.V.slmx, optional
// <prefix>.mean.slmx (d × 1) and the <prefix>.json sidecar.
void save_svd(const TruncatedSVD<double>& svd, const std::string& source_hash, const std::filesystem::path& prefix);
TruncatedSVD<double> load_svd(const std::filesystem::path& prefix);

}  // namespace r4style
