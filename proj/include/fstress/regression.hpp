#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fstress/stress.hpp"

namespace fstress {

/// Least-squares fit with classical inference. With an intercept the first
/// coefficient is the intercept and `names` starts with "intercept".
struct OlsResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::VectorXd residuals;
  double r_squared = 0.0;
  int dof = 0;  // residual degrees of freedom
  double condition_number = 0.0;
  bool intercept = true;
};

/// Two-sided p-value of a t statistic with `dof` degrees of freedom, through
/// the regularized incomplete beta function.
double student_t_two_sided_p(double t, double dof);

/// Householder QR fit. Throws ValidationError on rank deficiency (naming the
/// collinear columns) or when n does not exceed the coefficient count.
OlsResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, bool intercept = true,
                  std::vector<std::string> names = {});

struct SectorRegression {
  std::string target;  // "impact" or "response"
  OlsResult raw;
  OlsResult standardized;  // regressors and target scaled to zero mean, unit variance
};

struct SectorRegressionOptions {
  bool intercept = true;
  int min_sectors = 6;
};

/// Regresses impact and response on size, internal-link fraction and log centrality.
std::pair<SectorRegression, SectorRegression> sector_regression(const SectorProfile& profile,
                                                                const SectorRegressionOptions& options = {});

/// {target, convention, rows:[{variable, value, p_value, std_error}], r_squared, ...}
std::string regression_json(const SectorRegression& reg);

}  // namespace fstress
