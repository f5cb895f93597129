#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fstress/data_ingest.hpp"
#include "fstress/tmfg.hpp"

namespace fstress {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Gaussian model with mean `mu` and sparse precision J supported on the
/// clique-tree edges and the diagonal. Immutable; copies share state and all
/// queries are safe from several threads.
class SparsePrecisionModel {
 public:
  SparsePrecisionModel() = default;

  /// Takes ownership of an assembled precision. Factorizes J and throws
  /// NumericalError when it is not positive definite.
  SparsePrecisionModel(Eigen::VectorXd mu, SparseMatrix precision, double log_det, double ridge_used,
                       std::shared_ptr<const CliqueTree> tree);

  /// Convenience for small hand-built models: sparsity from the nonzeros of
  /// `precision`, log-determinant computed densely.
  static SparsePrecisionModel from_dense(Eigen::VectorXd mu, const Eigen::MatrixXd& precision);
  /// Model whose shape matrix is `covariance` (dense inverse).
  static SparsePrecisionModel from_covariance(Eigen::VectorXd mu, const Eigen::MatrixXd& covariance);

  int size() const;
  const Eigen::VectorXd& mean() const;
  const SparseMatrix& precision() const;
  double log_det() const;
  double ridge_used() const;
  const std::shared_ptr<const CliqueTree>& tree() const;

  /// (x - mu)' J (x - mu) in O(nonzeros).
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Solves J v = b.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b) const;
  /// Columns of the shape matrix J^{-1} for the requested nodes.
  Eigen::MatrixXd covariance_columns(std::span<const int> indices) const;
  /// Full J^{-1}, materialized once on first use (p <= 2000).
  const Eigen::MatrixXd& dense_covariance() const;

  std::string id;  // free-form tag carried into reports

 private:
  struct State;
  std::shared_ptr<const State> state_;
  const State& state() const;
};

struct LogoOptions {
  double ridge = 0.0;
  // On a singular block with ridge 0, retry with 1e-8 * trace(S_C) / 4.
  bool auto_ridge = true;
  // Sample covariance denominator: T - 1 (unbiased) or T (maximum likelihood).
  bool unbiased = true;
};

/// LoGo composition of per-clique and per-separator inverse covariance blocks:
/// J = sum_C embed((S_C + rI)^-1) - sum_S embed((S_S + rI)^-1) and
/// log|J| = sum_S log|S_S + rI| - sum_C log|S_C + rI|.
SparsePrecisionModel estimate_precision(const ReturnsMatrix& returns, const CliqueTree& tree,
                                        const LogoOptions& options = {});

SparsePrecisionModel estimate_precision_from_covariance(const Eigen::VectorXd& mu, const Eigen::MatrixXd& covariance,
                                                        const CliqueTree& tree, const LogoOptions& options = {});

/// Sample covariance with the chosen denominator.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& values, bool unbiased = true);

/// log|J| - (x - mu)' J (x - mu); the Gaussian normalizing constant is omitted.
double gaussian_log_likelihood(const SparsePrecisionModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Same, for every row of `rows`.
Eigen::VectorXd gaussian_log_likelihoods(const SparsePrecisionModel& model, const Eigen::MatrixXd& rows);

/// Dense p x |indices| block of the shape matrix.
Eigen::MatrixXd solve_covariance_columns(const SparsePrecisionModel& model, std::span<const int> indices);

/// {mu:[...], edges:[[i,j,Jij]], diag:[...], logdet, ridge_used}
std::string model_json(const SparsePrecisionModel& model);

}  // namespace fstress
