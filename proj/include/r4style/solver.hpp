#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>

#include "r4style/error.hpp"
#include "r4style/parallel.hpp"
#include "r4style/random.hpp"

namespace r4style {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Second moments of a regression problem (X k×m, Y k×n). The estimators below
/// touch the data only through XᵀX, XᵀY and ‖Y‖²_F, so one-hot targets can stay
/// in index form.
template <typename Scalar>
struct CrossMoments {
  MatrixX<Scalar> gram;       // XᵀX
  MatrixX<Scalar> cross;      // XᵀY
  Scalar target_energy = 0;   // ‖Y‖²_F
  Eigen::Index rows = 0;

  Eigen::Index features() const { return gram.rows(); }
  Eigen::Index outputs() const { return cross.cols(); }
};

template <typename DerivedX, typename DerivedY>
CrossMoments<typename DerivedX::Scalar> cross_moments(const Eigen::MatrixBase<DerivedX>& X,
                                                      const Eigen::MatrixBase<DerivedY>& Y) {
  using Scalar = typename DerivedX::Scalar;
  if (X.rows() != Y.rows())
    throw ValidationError("X has " + std::to_string(X.rows()) + " rows but Y has " + std::to_string(Y.rows()));
  CrossMoments<Scalar> cm;
  cm.gram = X.transpose() * X;
  cm.cross = X.transpose() * Y.template cast<Scalar>();
  cm.target_energy = Y.template cast<Scalar>().squaredNorm();
  cm.rows = X.rows();
  return cm;
}

/// Same statistics for a one-hot Y given as target indices, without materializing Y.
template <typename DerivedX>
CrossMoments<typename DerivedX::Scalar> cross_moments(const Eigen::MatrixBase<DerivedX>& X,
                                                      std::span<const std::size_t> targets, std::size_t n) {
  using Scalar = typename DerivedX::Scalar;
  if (static_cast<std::size_t>(X.rows()) != targets.size())
    throw ValidationError("X has " + std::to_string(X.rows()) + " rows but there are " +
                          std::to_string(targets.size()) + " targets");
  CrossMoments<Scalar> cm;
  cm.gram = X.transpose() * X;
  cm.cross = MatrixX<Scalar>::Zero(X.cols(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= n) throw ValidationError("target index " + std::to_string(targets[i]) + " >= n");
    cm.cross.col(static_cast<Eigen::Index>(targets[i])) += X.row(static_cast<Eigen::Index>(i)).transpose();
  }
  cm.target_energy = static_cast<Scalar>(targets.size());
  cm.rows = X.rows();
  return cm;
}

/// ½‖Y − X U Vᵀ‖²_F evaluated from moments.
template <typename Scalar>
Scalar half_residual_energy(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& U, const MatrixX<Scalar>& V) {
  const MatrixX<Scalar> CV = cm.cross * V;
  const Scalar cross_term = (U.array() * CV.array()).sum();
  const Scalar fit_term = ((U.transpose() * cm.gram * U).array() * (V.transpose() * V).array()).sum();
  return Scalar(0.5) * cm.target_energy - cross_term + Scalar(0.5) * fit_term;
}

/// ‖Y − X B‖²_F / (k·n).
template <typename Scalar>
Scalar mean_squared_error(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& B) {
  const Scalar sse = cm.target_energy - Scalar(2) * (B.array() * cm.cross.array()).sum() +
                     (B.array() * (cm.gram * B).array()).sum();
  return sse / static_cast<Scalar>(cm.rows * cm.outputs());
}

template <typename Scalar>
Scalar mean_squared_error(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& U, const MatrixX<Scalar>& V) {
  return Scalar(2) * half_residual_energy(cm, U, V) / static_cast<Scalar>(cm.rows * cm.outputs());
}

namespace detail {

template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> factor_normal_equations(const MatrixX<Scalar>& gram, Scalar ridge) {
  MatrixX<Scalar> A = gram;
  A.diagonal().array() += ridge;
  Eigen::LLT<MatrixX<Scalar>> llt(A);
  const Scalar min_rcond = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(A.rows());
  if (llt.info() != Eigen::Success || !(llt.rcond() > min_rcond))
    throw SingularDesignError("design matrix is singular (XᵀX not invertible); use a ridge penalty lambda > 0");
  return llt;
}

template <typename Scalar>
Scalar orthogonality_error(const MatrixX<Scalar>& V) {
  return (V.transpose() * V - MatrixX<Scalar>::Identity(V.cols(), V.cols())).norm();
}

/// argmax over orthonormal V of tr(Vᵀ M): V = P Qᵀ for the thin SVD M = P Σ Qᵀ.
template <typename Scalar>
MatrixX<Scalar> procrustes(const MatrixX<Scalar>& M) {
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Cyclic block-coordinate descent for
///   min_U ½ tr(Uᵀ G U) − tr(Uᵀ T) + λ Σⱼ ‖Uⱼ‖₂,
/// warm-started from U. Each row update is the exact block minimizer (group soft threshold).
template <typename Scalar>
void group_lasso_rows(const MatrixX<Scalar>& gram, const MatrixX<Scalar>& target, Scalar lambda,
                      MatrixX<Scalar>& U, Scalar tol, int max_sweeps) {
  const Eigen::Index m = gram.rows();
  MatrixX<Scalar> GU = gram * U;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Scalar max_change = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const Scalar gjj = gram(j, j);
      VectorX<Scalar> row_new = VectorX<Scalar>::Zero(U.cols());
      if (gjj > 0) {
        const VectorX<Scalar> s = (target.row(j) - GU.row(j) + gjj * U.row(j)).transpose();
        const Scalar norm = s.norm();
        if (norm > lambda) row_new = (Scalar(1) - lambda / norm) * s / gjj;
      }
      const VectorX<Scalar> delta = row_new - U.row(j).transpose();
      const Scalar change = delta.cwiseAbs().maxCoeff();
      if (change > 0) {
        GU.noalias() += gram.col(j) * delta.transpose();
        U.row(j) = row_new.transpose();
        max_change = std::max(max_change, change);
      }
    }
    if (max_change <= tol) return;
  }
}

}  // namespace detail

/// Exact ridge U step given V: U = (XᵀX + 2λI)⁻¹ XᵀY V.
template <typename Scalar>
MatrixX<Scalar> r4_u_step(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& V, Scalar lambda) {
  return detail::factor_normal_equations(cm.gram, Scalar(2) * lambda).solve(cm.cross * V);
}

/// Exact V step given U: the orthonormal V maximizing tr(Vᵀ YᵀXU).
template <typename Scalar>
MatrixX<Scalar> procrustes_v_step(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& U) {
  return detail::procrustes<Scalar>(cm.cross.transpose() * U);
}

/// Reported after every half step of the alternating scheme.
struct AlternatingStep {
  int iteration = 0;
  bool after_v_step = false;
  double objective = 0;
  double orthogonality_error = 0;  // ‖VᵀV − I‖_F
};

struct AlternatingOptions {
  int max_iters = 200;
  double tol = 1e-8;         // stop when the relative objective decrease falls below this
  double inner_tol = 1e-9;   // group-lasso block coordinate descent, max entry change per sweep
  int inner_max_sweeps = 100000;
  std::function<void(const AlternatingStep&)> observer;
};

/// B = U Vᵀ with VᵀV = I.
template <typename Scalar = double>
struct LowRankModel {
  MatrixX<Scalar> U;  // m × r latent loadings
  MatrixX<Scalar> V;  // n × r, orthonormal columns
  Scalar lambda = 0;
  Eigen::Index rank = 0;
  std::vector<Scalar> objective_trace;  // objective after each full iteration
  int iterations = 0;
  bool converged = false;

  MatrixX<Scalar> coefficients() const { return U * V.transpose(); }
};

template <typename Scalar = double>
using R4Model = LowRankModel<Scalar>;

template <typename Scalar = double>
struct SRRRModel : LowRankModel<Scalar> {
  std::vector<Eigen::Index> zero_rows;  // features whose loading row is exactly zero
};

enum class RowPenalty { kRidge, kGroupLasso };

namespace detail {

template <typename Scalar>
void validate_fit_args(const CrossMoments<Scalar>& cm, Eigen::Index rank, Scalar lambda) {
  const Eigen::Index max_rank = std::min(cm.features(), cm.outputs());
  if (rank < 1 || rank > max_rank)
    throw ValidationError("rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) + "]");
  if (!(lambda >= 0) || !std::isfinite(static_cast<double>(lambda)))
    throw ValidationError("lambda must be finite and >= 0");
}

template <typename Scalar>
Scalar penalized_objective(const CrossMoments<Scalar>& cm, const MatrixX<Scalar>& U, const MatrixX<Scalar>& V,
                           Scalar lambda, RowPenalty penalty) {
  const Scalar pen = penalty == RowPenalty::kRidge ? U.squaredNorm() : U.rowwise().norm().sum();
  return half_residual_energy(cm, U, V) + lambda * pen;
}

template <typename Scalar>
LowRankModel<Scalar> alternate(const CrossMoments<Scalar>& cm, Eigen::Index rank, Scalar lambda, RowPenalty penalty,
                               const AlternatingOptions& opts) {
  validate_fit_args(cm, rank, lambda);
  if (opts.max_iters < 1) throw ValidationError("max_iters must be >= 1");

  LowRankModel<Scalar> model;
  model.lambda = lambda;
  model.rank = rank;

  // V₀: leading right singular vectors of XᵀY.
  {
    Eigen::BDCSVD<MatrixX<Scalar>> svd(cm.cross, Eigen::ComputeThinV);
    model.V = svd.matrixV().leftCols(rank);
  }
  model.U = MatrixX<Scalar>::Zero(cm.features(), rank);

  std::optional<Eigen::LLT<MatrixX<Scalar>>> ridge;
  if (penalty == RowPenalty::kRidge) ridge = factor_normal_equations(cm.gram, Scalar(2) * lambda);

  auto report = [&](int it, bool v_step, Scalar obj) {
    if (!std::isfinite(static_cast<double>(obj)))
      throw NumericalError("objective became non-finite at iteration " + std::to_string(it));
    if (opts.observer)
      opts.observer({it, v_step, static_cast<double>(obj), static_cast<double>(orthogonality_error(model.V))});
  };

  Scalar previous = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    const MatrixX<Scalar> target = cm.cross * model.V;  // XᵀYV
    if (ridge)
      model.U = ridge->solve(target);
    else
      group_lasso_rows(cm.gram, target, lambda, model.U, static_cast<Scalar>(opts.inner_tol), opts.inner_max_sweeps);
    if (opts.observer) report(it, false, penalized_objective(cm, model.U, model.V, lambda, penalty));

    const MatrixX<Scalar> M = cm.cross.transpose() * model.U;  // YᵀXU
    if (M.squaredNorm() > 0) model.V = procrustes(M);

    const Scalar obj = penalized_objective(cm, model.U, model.V, lambda, penalty);
    report(it, true, obj);
    model.objective_trace.push_back(obj);
    model.iterations = it;

    if (it > 1) {
      const Scalar scale = std::max(std::abs(previous), std::numeric_limits<Scalar>::min());
      if ((previous - obj) / scale < static_cast<Scalar>(opts.tol)) {
        model.converged = true;
        break;
      }
    }
    previous = obj;
  }
  return model;
}

}  // namespace detail

/// Unpenalized least squares B = (XᵀX)⁻¹XᵀY. Throws SingularDesignError.
template <typename Scalar>
MatrixX<Scalar> fit_ols(const CrossMoments<Scalar>& cm) {
  return detail::factor_normal_equations(cm.gram, Scalar(0)).solve(cm.cross);
}

template <typename DerivedX, typename DerivedY>
auto fit_ols(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y) {
  return fit_ols(cross_moments(X, Y));
}

/// Reduced-rank ridge regression:
///   min ½‖Y − XUVᵀ‖²_F + λ‖U‖²_F  subject to VᵀV = I_r,
/// by alternating an exact ridge solve for U with an orthogonal Procrustes step for V.
template <typename Scalar>
R4Model<Scalar> fit_r4(const CrossMoments<Scalar>& cm, Eigen::Index rank, Scalar lambda,
                       const AlternatingOptions& opts = {}) {
  return detail::alternate(cm, rank, lambda, RowPenalty::kRidge, opts);
}

template <typename DerivedX, typename DerivedY>
auto fit_r4(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, Eigen::Index rank,
            typename DerivedX::Scalar lambda, const AlternatingOptions& opts = {}) {
  return fit_r4(cross_moments(X, Y), rank, lambda, opts);
}

/// Sparse reduced-rank regression: the ridge term is replaced by the row-wise
/// group lasso λ Σⱼ‖Uⱼ‖₂, solved in the U step by block coordinate descent.
template <typename Scalar>
SRRRModel<Scalar> fit_srrr(const CrossMoments<Scalar>& cm, Eigen::Index rank, Scalar lambda,
                           const AlternatingOptions& opts = {}) {
  SRRRModel<Scalar> model;
  static_cast<LowRankModel<Scalar>&>(model) = detail::alternate(cm, rank, lambda, RowPenalty::kGroupLasso, opts);
  for (Eigen::Index j = 0; j < model.U.rows(); ++j)
    if (model.U.row(j).squaredNorm() == 0) model.zero_rows.push_back(j);
  return model;
}

template <typename DerivedX, typename DerivedY>
auto fit_srrr(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y, Eigen::Index rank,
              typename DerivedX::Scalar lambda, const AlternatingOptions& opts = {}) {
  return fit_srrr(cross_moments(X, Y), rank, lambda, opts);
}

/// Smallest λ for which the first group-lasso U step returns all zero rows.
template <typename Scalar>
Scalar srrr_lambda_max(const CrossMoments<Scalar>& cm, Eigen::Index rank) {
  Eigen::BDCSVD<MatrixX<Scalar>> svd(cm.cross, Eigen::ComputeThinV);
  return (cm.cross * svd.matrixV().leftCols(rank)).rowwise().norm().maxCoeff();
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> predict(const LowRankModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X) {
  if (X.cols() != model.U.rows())
    throw ValidationError("predict: X has " + std::to_string(X.cols()) + " columns, model expects " +
                          std::to_string(model.U.rows()));
  return (X.template cast<Scalar>() * model.U) * model.V.transpose();
}

/// Latent style coordinates z = Uᵀx.
template <typename Scalar, typename Derived>
VectorX<Scalar> latent_liwc(const LowRankModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.U.rows())
    throw ValidationError("latent_liwc: style vector has " + std::to_string(x.size()) + " entries, model expects " +
                          std::to_string(model.U.rows()));
  return model.U.transpose() * x.template cast<Scalar>();
}

/// Row-wise latent coordinates X U for a batch of style vectors.
template <typename Scalar, typename Derived>
MatrixX<Scalar> latent_features(const LowRankModel<Scalar>& model, const Eigen::MatrixBase<Derived>& X) {
  if (X.cols() != model.U.rows()) throw ValidationError("latent_features: column count differs from model");
  return X.template cast<Scalar>() * model.U;
}

struct RowSplit {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Seeded shuffle; the first round(k·test_fraction) shuffled rows (at least one,
/// leaving at least one for training) form the test set. Both lists are sorted.
RowSplit split_rows(Eigen::Index k, double test_fraction, std::uint64_t seed);

struct SweepPoint {
  Eigen::Index rank = 0;
  double train_mse = 0;
  double test_mse = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // ranks strictly increasing
  std::uint64_t split_seed = 0;
  double lambda = 0;
};

struct SweepOptions {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  AlternatingOptions fit;  // observer must be thread safe when threads > 1
  std::size_t threads = 1;
};

/// Fits R4 for each rank on the training moments and scores both splits.
/// Ranks are sorted and deduplicated; each must lie in [1, min(m, n)].
template <typename Scalar>
SweepResult rank_sweep(const CrossMoments<Scalar>& train, const CrossMoments<Scalar>& test,
                       std::span<const Eigen::Index> ranks, Scalar lambda, const SweepOptions& opts) {
  std::vector<Eigen::Index> rs(ranks.begin(), ranks.end());
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  if (rs.empty()) throw ValidationError("rank list is empty");
  const Eigen::Index max_rank = std::min(train.features(), train.outputs());
  for (auto r : rs)
    if (r < 1 || r > max_rank)
      throw ValidationError("rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");

  SweepResult result;
  result.split_seed = opts.seed;
  result.lambda = static_cast<double>(lambda);
  result.points.resize(rs.size());
  parallel_for(rs.size(), opts.threads, [&](std::size_t i) {
    const auto model = fit_r4(train, rs[i], lambda, opts.fit);
    result.points[i] = {rs[i], static_cast<double>(mean_squared_error(train, model.U, model.V)),
                        static_cast<double>(mean_squared_error(test, model.U, model.V))};
  });
  return result;
}

template <typename DerivedX, typename DerivedY>
SweepResult rank_sweep(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y,
                       std::span<const Eigen::Index> ranks, typename DerivedX::Scalar lambda,
                       const SweepOptions& opts) {
  if (X.rows() != Y.rows()) throw ValidationError("X and Y row counts differ");
  const auto split = split_rows(X.rows(), opts.test_fraction, opts.seed);
  return rank_sweep(cross_moments(X(split.train, Eigen::all), Y(split.train, Eigen::all)),
                    cross_moments(X(split.test, Eigen::all), Y(split.test, Eigen::all)), ranks, lambda, opts);
}

template <typename DerivedX>
SweepResult rank_sweep(const Eigen::MatrixBase<DerivedX>& X, std::span<const std::size_t> targets, std::size_t n,
                       std::span<const Eigen::Index> ranks, typename DerivedX::Scalar lambda,
                       const SweepOptions& opts) {
  const auto split = split_rows(X.rows(), opts.test_fraction, opts.seed);
  auto pick = [&](const std::vector<Eigen::Index>& rows) {
    std::vector<std::size_t> t;
    t.reserve(rows.size());
    for (auto r : rows) t.push_back(targets[static_cast<std::size_t>(r)]);
    return t;
  };
  const auto train_t = pick(split.train);
  const auto test_t = pick(split.test);
  return rank_sweep(cross_moments(X(split.train, Eigen::all), train_t, n),
                    cross_moments(X(split.test, Eigen::all), test_t, n), ranks, lambda, opts);
}

/// Elbow pick: smallest rank whose test MSE is within `rel_tol` of the sweep minimum.
Eigen::Index choose_rank(const SweepResult& sweep, double rel_tol = 0.01);

}  // namespace r4style
