#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fstress/data_ingest.hpp"
#include "fstress/logo.hpp"
#include "fstress/tmfg.hpp"

namespace fstress {

/// Builds the clique tree for one state's days.
using TreeBuilder = std::function<CliqueTree(const ReturnsMatrix& state_days)>;

/// TMFG on the Pearson correlation of the given days.
TreeBuilder tmfg_tree_builder(TmfgOptions options = {});

struct IccConfig {
  enum class Init { random, contiguous };
  int states = 6;        // K
  double gamma = 100.0;  // switch penalty
  int max_iterations = 100;
  int restarts = 10;
  int min_days = 0;  // 0 selects max(5, p / 4)
  std::uint64_t seed = 0;
  Init init = Init::random;
  // Reuse one clique tree, estimated on all days, for every state.
  bool reuse_global_network = false;
  LogoOptions logo{0.0, true, false};  // maximum-likelihood covariance
};

/// l_{c,t} = log|J_c| - (x_t - mu_c)' J_c (x_t - mu_c) - gamma * [prev != c];
/// no penalty when `prev_state` is empty.
Eigen::VectorXd penalized_likelihood(const std::vector<SparsePrecisionModel>& models,
                                     const Eigen::Ref<const Eigen::VectorXd>& x, std::optional<int> prev_state,
                                     double gamma);

/// Path maximizing sum_t loglik(t, c_t) - gamma * switches. Ties go to the lower state.
std::vector<int> viterbi_assign(const Eigen::MatrixXd& loglik, double gamma);

/// sum_t loglik(t, path_t) - gamma * switches(path).
double path_score(const Eigen::MatrixXd& loglik, const std::vector<int>& path, double gamma);
int count_switches(const std::vector<int>& path);

struct IccIteration {
  double total_likelihood = 0.0;  // penalized objective of (models, labels) at this iteration
  int changed_days = 0;           // labels changed by the following reassignment
  bool reseeded = false;          // a small state was refilled before this fit
};

struct MarketStatePartition {
  std::vector<int> labels;  // 0-based state per day, ordered by mean day index
  std::vector<SparsePrecisionModel> models;
  std::vector<CliqueTree> trees;
  double total_likelihood = 0.0;
  double gamma = 0.0;
  int states = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<int> relabeling;  // relabeling[old] = new
  std::vector<IccIteration> trace;
  std::vector<std::string> events;

  std::vector<int> state_days(int state) const;
  double mean_segment_length() const;
};

MarketStatePartition cluster(const ReturnsMatrix& returns, const TreeBuilder& build_tree, const IccConfig& config);

struct RestartSummary {
  std::uint64_t seed = 0;
  double total_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MultiRestartResult {
  MarketStatePartition best;
  int best_restart = 0;
  std::vector<RestartSummary> restarts;
  std::vector<MarketStatePartition> partitions;
  Eigen::MatrixXd agreement;  // pairwise adjusted Rand index
};

/// Restart 0 uses `config.seed` itself; restart r > 0 uses derive_seed(config.seed, r).
MultiRestartResult multi_restart_cluster(const ReturnsMatrix& returns, const TreeBuilder& build_tree,
                                         const IccConfig& config);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Fraction of days whose label matches the truth under the best one-to-one
/// label mapping (exhaustive over permutations, K <= 8).
double matched_accuracy(const std::vector<int>& labels, const std::vector<int>& truth);

/// `date,state` CSV with 1-based states.
std::string partition_csv(const MarketStatePartition& partition, const std::vector<Date>& dates);

}  // namespace fstress
