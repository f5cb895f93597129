#include "fstress/logo.hpp"

#include <cmath>
#include <mutex>

#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "fstress/error.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <std::size_t N>
MatrixXd block_of(const MatrixXd& s, const std::array<int, N>& nodes, double ridge) {
  MatrixXd b(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) b(i, j) = s(nodes[i], nodes[j]);
  }
  b.diagonal().array() += ridge;
  return b;
}

enum class BlockStatus { ok, singular, indefinite };

struct BlockInverse {
  MatrixXd inverse;
  double log_det = 0.0;
  BlockStatus status = BlockStatus::ok;
};

BlockInverse invert_block(const MatrixXd& b) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(b);
  const auto& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  BlockInverse out;
  if (!(top > 0.0) || lambda.minCoeff() < 0.0) {
    out.status = lambda.minCoeff() <= -1e-12 * std::max(top, 1.0) ? BlockStatus::indefinite : BlockStatus::singular;
    return out;
  }
  if (lambda.minCoeff() <= 1e-12 * top) {
    out.status = BlockStatus::singular;
    return out;
  }
  out.inverse = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
  out.log_det = lambda.array().log().sum();
  return out;
}

struct Assembly {
  std::vector<Eigen::Triplet<double>> triplets;
  double log_det = 0.0;
  BlockStatus status = BlockStatus::ok;
};

template <std::size_t N>
void add_block(Assembly& acc, const MatrixXd& s, const std::array<int, N>& nodes, double ridge, double sign) {
  const BlockInverse inv = invert_block(block_of(s, nodes, ridge));
  if (inv.status != BlockStatus::ok) {
    if (acc.status == BlockStatus::ok || inv.status == BlockStatus::indefinite) acc.status = inv.status;
    return;
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) acc.triplets.emplace_back(nodes[i], nodes[j], sign * inv.inverse(i, j));
  }
  // log|J| = sum_sep log|S_S| - sum_cliques log|S_C|
  acc.log_det -= sign * inv.log_det;
}

Assembly assemble(const MatrixXd& s, const CliqueTree& tree, double ridge) {
  Assembly acc;
  for (const auto& c : tree.cliques) add_block(acc, s, c, ridge, 1.0);
  for (const auto& sep : tree.separators) add_block(acc, s, sep, ridge, -1.0);
  return acc;
}

double max_clique_trace(const MatrixXd& s, const CliqueTree& tree) {
  double out = 0.0;
  for (const auto& c : tree.cliques) {
    double tr = 0.0;
    for (int v : c) tr += s(v, v);
    out = std::max(out, tr);
  }
  return out;
}

}  // namespace

struct SparsePrecisionModel::State {
  VectorXd mu;
  SparseMatrix precision;
  double log_det = 0.0;
  double ridge_used = 0.0;
  std::shared_ptr<const CliqueTree> tree;
  Eigen::SimplicialLLT<SparseMatrix> llt;
  mutable std::once_flag dense_once;
  mutable MatrixXd dense;
};

SparsePrecisionModel::SparsePrecisionModel(VectorXd mu, SparseMatrix precision, double log_det, double ridge_used,
                                           std::shared_ptr<const CliqueTree> tree) {
  if (precision.rows() != precision.cols() || precision.rows() != mu.size()) {
    throw ValidationError("precision and mean dimensions disagree");
  }
  auto st = std::make_shared<State>();
  st->mu = std::move(mu);
  st->precision = std::move(precision);
  st->precision.makeCompressed();
  st->log_det = log_det;
  st->ridge_used = ridge_used;
  st->tree = std::move(tree);
  st->llt.compute(st->precision);
  if (st->llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  state_ = std::move(st);
}

SparsePrecisionModel SparsePrecisionModel::from_dense(VectorXd mu, const MatrixXd& precision) {
  Eigen::LDLT<MatrixXd> ldlt(precision);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0.0).any()) {
    throw NumericalError("precision matrix is not positive definite");
  }
  const double log_det = ldlt.vectorD().array().log().sum();
  SparseMatrix sparse = precision.sparseView(0.0, 0.0);
  return SparsePrecisionModel(std::move(mu), std::move(sparse), log_det, 0.0, nullptr);
}

SparsePrecisionModel SparsePrecisionModel::from_covariance(VectorXd mu, const MatrixXd& covariance) {
  Eigen::LLT<MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  MatrixXd j = llt.solve(MatrixXd::Identity(covariance.rows(), covariance.cols()));
  j = 0.5 * (j + j.transpose());
  return from_dense(std::move(mu), j);
}

const SparsePrecisionModel::State& SparsePrecisionModel::state() const {
  if (!state_) throw ValidationError("use of an empty precision model");
  return *state_;
}

int SparsePrecisionModel::size() const { return state_ ? static_cast<int>(state_->mu.size()) : 0; }
const VectorXd& SparsePrecisionModel::mean() const { return state().mu; }
const SparseMatrix& SparsePrecisionModel::precision() const { return state().precision; }
double SparsePrecisionModel::log_det() const { return state().log_det; }
double SparsePrecisionModel::ridge_used() const { return state().ridge_used; }
const std::shared_ptr<const CliqueTree>& SparsePrecisionModel::tree() const { return state().tree; }

double SparsePrecisionModel::quadratic_form(const Eigen::Ref<const VectorXd>& x) const {
  const State& st = state();
  if (x.size() != st.mu.size()) {
    throw ValidationError("vector length " + std::to_string(x.size()) + " does not match model size " +
                          std::to_string(st.mu.size()));
  }
  const VectorXd d = x - st.mu;
  double q = 0.0;
  for (Index k = 0; k < st.precision.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(st.precision, k); it; ++it) q += d[it.row()] * it.value() * d[it.col()];
  }
  return q;
}

VectorXd SparsePrecisionModel::solve(const Eigen::Ref<const VectorXd>& b) const {
  const State& st = state();
  if (b.size() != st.mu.size()) throw ValidationError("right-hand side length does not match model size");
  VectorXd v = st.llt.solve(b);
  if (st.llt.info() != Eigen::Success || !v.allFinite()) throw NumericalError("precision solve failed");
  return v;
}

MatrixXd SparsePrecisionModel::covariance_columns(std::span<const int> indices) const {
  const State& st = state();
  const auto p = static_cast<int>(st.mu.size());
  MatrixXd rhs = MatrixXd::Zero(p, static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= p) throw ValidationError("node index " + std::to_string(indices[k]) + " out of range");
    rhs(indices[k], static_cast<Index>(k)) = 1.0;
  }
  MatrixXd out = st.llt.solve(rhs);
  if (st.llt.info() != Eigen::Success || !out.allFinite()) throw NumericalError("precision solve failed");
  return out;
}

const MatrixXd& SparsePrecisionModel::dense_covariance() const {
  const State& st = state();
  if (st.mu.size() > 2000) throw ValidationError("dense shape matrix is limited to p <= 2000");
  std::call_once(st.dense_once, [&st] {
    MatrixXd omega = st.llt.solve(MatrixXd::Identity(st.mu.size(), st.mu.size()));
    st.dense = 0.5 * (omega + omega.transpose());
  });
  return st.dense;
}

MatrixXd sample_covariance(const MatrixXd& values, bool unbiased) {
  const Index n = values.rows();
  const Index denom = unbiased ? n - 1 : n;
  if (denom < 1) throw ValidationError("sample covariance needs more observations");
  const MatrixXd centered = values.rowwise() - values.colwise().mean();
  MatrixXd s = (centered.transpose() * centered) / static_cast<double>(denom);
  return 0.5 * (s + s.transpose());
}

SparsePrecisionModel estimate_precision_from_covariance(const VectorXd& mu, const MatrixXd& covariance,
                                                        const CliqueTree& tree, const LogoOptions& options) {
  const Index p = covariance.rows();
  if (covariance.cols() != p || mu.size() != p || tree.p != p) {
    throw ValidationError("clique tree, mean and covariance dimensions disagree");
  }
  if (options.ridge < 0.0) throw ValidationError("ridge must be non-negative");
  double ridge = options.ridge;
  Assembly acc = assemble(covariance, tree, ridge);
  if (acc.status == BlockStatus::singular && ridge == 0.0) {
    if (!options.auto_ridge) {
      throw NumericalError("singular clique block in LoGo estimation; supply a positive ridge");
    }
    ridge = 1e-8 * max_clique_trace(covariance, tree) / 4.0;
    acc = assemble(covariance, tree, ridge);
  }
  if (acc.status != BlockStatus::ok) {
    throw NumericalError("clique block of the sample covariance is not positive definite (ridge " +
                         std::to_string(ridge) + ")");
  }
  SparseMatrix j(p, p);
  j.setFromTriplets(acc.triplets.begin(), acc.triplets.end());
  return SparsePrecisionModel(mu, std::move(j), acc.log_det, ridge, std::make_shared<const CliqueTree>(tree));
}

SparsePrecisionModel estimate_precision(const ReturnsMatrix& returns, const CliqueTree& tree,
                                        const LogoOptions& options) {
  if (returns.num_assets() != tree.p) {
    throw ValidationError("clique tree has " + std::to_string(tree.p) + " nodes but returns have " +
                          std::to_string(returns.num_assets()) + " columns");
  }
  if (!returns.values.allFinite()) throw DataError("non-finite value in return matrix");
  const VectorXd mu = returns.values.colwise().mean().transpose();
  return estimate_precision_from_covariance(mu, sample_covariance(returns.values, options.unbiased), tree, options);
}

double gaussian_log_likelihood(const SparsePrecisionModel& model, const Eigen::Ref<const VectorXd>& x) {
  return model.log_det() - model.quadratic_form(x);
}

VectorXd gaussian_log_likelihoods(const SparsePrecisionModel& model, const MatrixXd& rows) {
  if (rows.cols() != model.size()) throw ValidationError("row length does not match model size");
  const MatrixXd d = rows.rowwise() - model.mean().transpose();
  const MatrixXd dj = d * model.precision();
  VectorXd out = (dj.array() * d.array()).rowwise().sum();
  return (model.log_det() - out.array()).matrix();
}

MatrixXd solve_covariance_columns(const SparsePrecisionModel& model, std::span<const int> indices) {
  return model.covariance_columns(indices);
}

std::string model_json(const SparsePrecisionModel& model) {
  nlohmann::json j;
  const VectorXd& mu = model.mean();
  j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  nlohmann::json edges = nlohmann::json::array();
  std::vector<double> diag(static_cast<std::size_t>(model.size()), 0.0);
  const SparseMatrix& prec = model.precision();
  for (Index k = 0; k < prec.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(prec, k); it; ++it) {
      if (it.row() == it.col()) {
        diag[static_cast<std::size_t>(it.row())] = it.value();
      } else if (it.row() < it.col()) {
        edges.push_back({it.row(), it.col(), it.value()});
      }
    }
  }
  j["edges"] = edges;
  j["diag"] = diag;
  j["logdet"] = model.log_det();
  j["ridge_used"] = model.ridge_used();
  return j.dump();
}

}  // namespace fstress
