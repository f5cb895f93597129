// Dense reference computations. Nothing here calls into the library's numerics.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Two-pass covariance: means first, then centered cross products, entry by entry.
inline MatrixXd two_pass_covariance(const MatrixXd& x, bool unbiased) {
  const auto n = x.rows();
  const auto p = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index t = 0; t < n; ++t) mean[j] += x(t, j);
    mean[j] /= static_cast<double>(n);
  }
  MatrixXd s(p, p);
  const double denom = unbiased ? static_cast<double>(n - 1) : static_cast<double>(n);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (Eigen::Index t = 0; t < n; ++t) acc += (x(t, i) - mean[i]) * (x(t, j) - mean[j]);
      s(i, j) = s(j, i) = acc / denom;
    }
  }
  return s;
}

inline MatrixXd submatrix(const MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = m(rows[a], cols[b]);
  }
  return out;
}

// Blockwise decomposable-model precision from explicit inverses of every block.
template <class Cliques, class Separators>
MatrixXd dense_logo(const MatrixXd& s, const Cliques& cliques, const Separators& separators) {
  MatrixXd j = MatrixXd::Zero(s.rows(), s.cols());
  const auto add = [&](const auto& nodes, double sign) {
    std::vector<int> idx(nodes.begin(), nodes.end());
    const MatrixXd inv = submatrix(s, idx, idx).inverse();
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) j(idx[a], idx[b]) += sign * inv(a, b);
    }
  };
  for (const auto& c : cliques) add(c, 1.0);
  for (const auto& sep : separators) add(sep, -1.0);
  return j;
}

inline double log_abs_det(const MatrixXd& m) {
  const Eigen::PartialPivLU<MatrixXd> lu(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::log(std::abs(lu.matrixLU()(i, i)));
  return acc;
}

inline std::vector<int> complement(int p, const std::vector<int>& x) {
  std::vector<int> out;
  for (int i = 0; i < p; ++i) {
    if (std::find(x.begin(), x.end(), i) == x.end()) out.push_back(i);
  }
  return out;
}

// E[Y | X = mu_X + shock] - mu_Y from the shape matrix, by an explicit inverse.
inline VectorXd conditional_shift(const MatrixXd& omega, const std::vector<int>& x, const std::vector<int>& y,
                                  const VectorXd& shock) {
  const MatrixXd oxx = submatrix(omega, x, x);
  const MatrixXd oyx = submatrix(omega, y, x);
  return oyx * oxx.inverse() * shock;
}

inline double impact(const MatrixXd& omega, const std::vector<int>& x, const std::vector<int>& y) {
  return conditional_shift(omega, x, y, VectorXd::Ones(static_cast<Eigen::Index>(x.size()))).mean();
}

inline double impact(const MatrixXd& omega, const std::vector<int>& x) {
  return impact(omega, x, complement(static_cast<int>(omega.rows()), x));
}

// Loss on X when its complement suffers the unit shock.
inline double response(const MatrixXd& omega, const std::vector<int>& x) {
  return impact(omega, complement(static_cast<int>(omega.rows()), x), x);
}

// Visits every n-subset of {0..p-1} in lexicographic order.
inline void for_each_combination(int p, int n, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c[i] = i;
  while (true) {
    visit(c);
    int i = n - 1;
    while (i >= 0 && c[i] == p - n + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int k = i + 1; k < n; ++k) c[k] = c[k - 1] + 1;
  }
}

struct BestGroup {
  std::vector<int> group;
  double impact = -1e300;
};

inline BestGroup brute_force_max_impact(const MatrixXd& omega, int n) {
  BestGroup best;
  for_each_combination(static_cast<int>(omega.rows()), n, [&](const std::vector<int>& g) {
    const double v = impact(omega, g);
    if (v > best.impact) best = {g, v};
  });
  return best;
}

// Random correlation matrix from k latent factors plus idiosyncratic noise.
inline MatrixXd random_correlation(int p, int k, std::mt19937_64& rng, double noise = 0.5) {
  std::normal_distribution<double> nd;
  MatrixXd a(p, k);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < k; ++j) a(i, j) = nd(rng);
  }
  MatrixXd c = a * a.transpose();
  std::uniform_real_distribution<double> ud(noise, 2.0 * noise + 0.1);
  for (int i = 0; i < p; ++i) c(i, i) += ud(rng);
  const VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd r = d.asDiagonal() * c * d.asDiagonal();
  for (int i = 0; i < p; ++i) r(i, i) = 1.0;
  return 0.5 * (r + r.transpose());
}

// Gaussian draws with the given covariance.
inline MatrixXd gaussian_sample(const MatrixXd& cov, int n, std::mt19937_64& rng) {
  const MatrixXd l = cov.llt().matrixL();
  std::normal_distribution<double> nd;
  MatrixXd z(n, cov.rows());
  for (int t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < cov.rows(); ++j) z(t, j) = nd(rng);
  }
  return z * l.transpose();
}

}  // namespace oracle
