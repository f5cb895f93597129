#include "fstress/regression.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include "fstress/error.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd zscore(const VectorXd& v) {
  const double mean = v.mean();
  const VectorXd centered = v.array() - mean;
  const double sd = v.size() > 1 ? std::sqrt(centered.squaredNorm() / static_cast<double>(v.size() - 1)) : 0.0;
  return sd > 0.0 ? VectorXd(centered / sd) : centered;
}

nlohmann::json coefficient_rows(const OlsResult& fit) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index k = fit.intercept ? 1 : 0; k < fit.coefficients.size(); ++k) {
    rows.push_back({{"variable", fit.names[static_cast<std::size_t>(k)]},
                    {"value", fit.coefficients[k]},
                    {"p_value", fit.p_values[k]},
                    {"std_error", fit.std_errors[k]},
                    {"t_stat", fit.t_stats[k]}});
  }
  return rows;
}

nlohmann::json fit_json(const OlsResult& fit) {
  nlohmann::json j;
  j["rows"] = coefficient_rows(fit);
  j["r_squared"] = fit.r_squared;
  j["dof"] = fit.dof;
  j["condition_number"] = fit.condition_number;
  if (fit.intercept) {
    j["intercept"] = {{"value", fit.coefficients[0]}, {"p_value", fit.p_values[0]}, {"std_error", fit.std_errors[0]}};
  }
  return j;
}

}  // namespace

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ValidationError("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  // P(|T| > |t|) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)
  const double x = dof / (dof + t * t);
  return boost::math::ibeta(0.5 * dof, 0.5, x);
}

OlsResult ols_fit(const MatrixXd& design, const VectorXd& target, bool intercept, std::vector<std::string> names) {
  const Index n = design.rows();
  if (target.size() != n) throw ValidationError("design and target lengths differ");
  const Index k = design.cols() + (intercept ? 1 : 0);
  if (k == 0) throw ValidationError("regression needs at least one column");
  if (n <= k) {
    throw ValidationError("regression needs more observations (" + std::to_string(n) + ") than coefficients (" +
                          std::to_string(k) + ")");
  }
  if (!design.allFinite() || !target.allFinite()) throw ValidationError("regression input contains non-finite values");

  OlsResult res;
  res.intercept = intercept;
  if (intercept) res.names.emplace_back("intercept");
  for (Index c = 0; c < design.cols(); ++c) {
    res.names.push_back(static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                     : "x" + std::to_string(c + 1));
  }

  MatrixXd x(n, k);
  if (intercept) x.col(0).setOnes();
  x.rightCols(design.cols()) = design;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Index r = qr.rank(); r < k; ++r) cols += (cols.empty() ? "" : ", ") + res.names[static_cast<std::size_t>(perm[r])];
    throw ValidationError("design matrix is rank deficient; collinear columns: " + cols);
  }
  res.coefficients = qr.solve(target);
  res.residuals = target - x * res.coefficients;
  res.dof = static_cast<int>(n - k);

  const MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  const MatrixXd xtx_inv_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const MatrixXd xtx_inv = perm * xtx_inv_perm * perm.transpose();

  const double ssr = res.residuals.squaredNorm();
  const double sigma2 = ssr / res.dof;
  res.std_errors = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();
  res.t_stats.resize(k);
  res.p_values.resize(k);
  for (Index c = 0; c < k; ++c) {
    const double beta = res.coefficients[c];
    const double se = res.std_errors[c];
    if (se > 0.0) {
      res.t_stats[c] = beta / se;
    } else {
      // Exact fit: a zero coefficient carries no evidence, anything else is certain.
      res.t_stats[c] = std::abs(beta) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), beta);
    }
    res.p_values[c] = student_t_two_sided_p(res.t_stats[c], res.dof);
  }

  const double sst = intercept ? (target.array() - target.mean()).matrix().squaredNorm() : target.squaredNorm();
  res.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;

  Eigen::JacobiSVD<MatrixXd> svd(x);
  const auto& sv = svd.singularValues();
  res.condition_number = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  return res;
}

std::pair<SectorRegression, SectorRegression> sector_regression(const SectorProfile& profile,
                                                                const SectorRegressionOptions& options) {
  std::vector<const SectorScore*> rows;
  for (const auto& row : profile.rows) {
    if (std::isfinite(row.impact) && std::isfinite(row.response) && std::isfinite(row.internal_fraction) &&
        std::isfinite(row.log_centrality)) {
      rows.push_back(&row);
    }
  }
  if (static_cast<int>(rows.size()) < options.min_sectors) {
    throw ValidationError("sector regression needs at least " + std::to_string(options.min_sectors) +
                          " complete sectors, got " + std::to_string(rows.size()));
  }
  const auto n = static_cast<Index>(rows.size());
  MatrixXd design(n, 3);
  VectorXd imp(n);
  VectorXd resp(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = *rows[static_cast<std::size_t>(i)];
    design(i, 0) = r.size;
    design(i, 1) = r.internal_fraction;
    design(i, 2) = r.log_centrality;
    imp[i] = r.impact;
    resp[i] = r.response;
  }
  const std::vector<std::string> names{"size", "fraction of links within supersector", "log centrality"};
  MatrixXd design_z(n, 3);
  for (Index c = 0; c < 3; ++c) design_z.col(c) = zscore(design.col(c));

  const auto run = [&](const char* target, const VectorXd& y) {
    SectorRegression reg;
    reg.target = target;
    reg.raw = ols_fit(design, y, options.intercept, names);
    reg.standardized = ols_fit(design_z, zscore(y), options.intercept, names);
    return reg;
  };
  return {run("impact", imp), run("response", resp)};
}

std::string regression_json(const SectorRegression& reg) {
  nlohmann::json j = fit_json(reg.standardized);
  j["target"] = reg.target;
  j["convention"] = "standardized";
  j["raw"] = fit_json(reg.raw);
  return j.dump();
}

}  // namespace fstress
