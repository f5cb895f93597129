#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fstress/error.hpp"
#include "fstress/icc.hpp"
#include "oracles/dense.hpp"
#include "oracles/stats.hpp"
#include "test_util.hpp"

using namespace fstress;

namespace {

Eigen::MatrixXd random_loglik(int t, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 2.0);
  Eigen::MatrixXd ll(t, k);
  for (int i = 0; i < t; ++i) {
    for (int c = 0; c < k; ++c) ll(i, c) = nd(rng);
  }
  return ll;
}

// Two regimes back to back: calm with mild block structure, then a volatile
// regime with strong and differently arranged blocks.
struct Planted {
  ReturnsMatrix returns;
  std::vector<int> truth;
};

Planted planted_regimes(int p, int days_each, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd calm = oracle::random_correlation(p, 2, rng, 1.0);
  const Eigen::MatrixXd wild = 4.0 * oracle::random_correlation(p, 3, rng, 0.2);
  Eigen::MatrixXd x(2 * days_each, p);
  x.topRows(days_each) = oracle::gaussian_sample(calm, days_each, rng);
  x.bottomRows(days_each) = oracle::gaussian_sample(wild, days_each, rng);
  Planted out;
  out.returns = testutil::make_returns(x, true);
  out.truth.assign(static_cast<std::size_t>(2 * days_each), 0);
  std::fill(out.truth.begin() + days_each, out.truth.end(), 1);
  return out;
}

}  // namespace

TEST(Viterbi, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> g(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + trial % 9;
    const int k = 1 + trial % 3;
    const auto ll = random_loglik(t, k, rng);
    const double gamma = g(rng);
    double want_score = 0.0;
    const auto want = oracle::exhaustive_viterbi(ll, gamma, &want_score);
    const auto got = viterbi_assign(ll, gamma);
    EXPECT_NEAR(path_score(ll, got, gamma), want_score, 1e-12);
    EXPECT_EQ(got, want) << "trial " << trial;
  }
}

TEST(Viterbi, SwitchesNonIncreasingInGamma) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ll = random_loglik(40, 3, rng);
    int prev = std::numeric_limits<int>::max();
    for (double gamma : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0}) {
      const int s = count_switches(viterbi_assign(ll, gamma));
      EXPECT_LE(s, prev) << "gamma " << gamma;
      prev = s;
    }
    EXPECT_EQ(prev, 0);
  }
}

TEST(Viterbi, ZeroGammaIsPointwiseArgmax) {
  std::mt19937_64 rng(3);
  const auto ll = random_loglik(30, 4, rng);
  const auto path = viterbi_assign(ll, 0.0);
  for (int t = 0; t < 30; ++t) {
    Eigen::Index arg;
    ll.row(t).maxCoeff(&arg);
    EXPECT_EQ(path[t], arg);
  }
}

TEST(Viterbi, Validation) {
  EXPECT_TRUE(viterbi_assign(Eigen::MatrixXd(0, 2), 1.0).empty());
  EXPECT_THROW(viterbi_assign(Eigen::MatrixXd::Zero(3, 2), -1.0), ValidationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(viterbi_assign(bad, 1.0), ValidationError);
}

TEST(Icc, PenalizedLikelihood) {
  const auto a = SparsePrecisionModel::from_dense(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const auto b = SparsePrecisionModel::from_dense(Eigen::VectorXd::Ones(2), 2.0 * Eigen::MatrixXd::Identity(2, 2));
  const std::vector<SparsePrecisionModel> models{a, b};
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  const auto free = penalized_likelihood(models, x, std::nullopt, 3.0);
  EXPECT_DOUBLE_EQ(free[0], 0.0);
  EXPECT_NEAR(free[1], 2.0 * std::log(2.0) - 4.0, 1e-14);
  const auto from0 = penalized_likelihood(models, x, 0, 3.0);
  EXPECT_DOUBLE_EQ(from0[0], free[0]);
  EXPECT_DOUBLE_EQ(from0[1], free[1] - 3.0);
  const auto from1 = penalized_likelihood(models, x, 1, 3.0);
  EXPECT_DOUBLE_EQ(from1[0], free[0] - 3.0);
  EXPECT_DOUBLE_EQ(from1[1], free[1]);
}

TEST(Icc, PathScoreAndSwitches) {
  Eigen::MatrixXd ll(3, 2);
  ll << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(count_switches({0, 1, 1}), 1);
  EXPECT_EQ(count_switches({}), 0);
  EXPECT_DOUBLE_EQ(path_score(ll, {0, 1, 0}, 0.5), 1 + 4 + 5 - 1.0);
}

TEST(Icc, RecoversPlantedRegimes) {
  const auto data = planted_regimes(12, 150, 11);
  IccConfig cfg;
  cfg.states = 2;
  cfg.gamma = 10.0;
  cfg.restarts = 3;
  cfg.seed = 5;
  const auto result = multi_restart_cluster(data.returns, tmfg_tree_builder(), cfg);
  EXPECT_GE(matched_accuracy(result.best.labels, data.truth), 0.95);
  EXPECT_EQ(result.restarts.size(), 3u);
  EXPECT_EQ(result.restarts[0].seed, 5u);
  for (const auto& r : result.restarts) EXPECT_LE(r.total_likelihood, result.best.total_likelihood);
  EXPECT_EQ(result.agreement.rows(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(result.agreement(i, i), 1.0);
  EXPECT_LT((result.agreement - result.agreement.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Icc, TraceMonotoneWithoutReseeding) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto data = planted_regimes(10, 120, 100 + seed);
    IccConfig cfg;
    cfg.states = 3;
    cfg.gamma = 5.0;
    cfg.seed = seed;
    const auto part = cluster(data.returns, tmfg_tree_builder(), cfg);
    ASSERT_FALSE(part.trace.empty());
    for (std::size_t i = 1; i < part.trace.size(); ++i) {
      if (part.trace[i].reseeded) continue;
      EXPECT_GE(part.trace[i].total_likelihood,
                part.trace[i - 1].total_likelihood - 1e-8 * std::abs(part.trace[i - 1].total_likelihood))
          << "seed " << seed << " iteration " << i;
    }
    EXPECT_DOUBLE_EQ(part.total_likelihood, part.trace.back().total_likelihood);
  }
}

TEST(Icc, GlobalNetworkReuseIsMonotoneToo) {
  const auto data = planted_regimes(10, 100, 7);
  IccConfig cfg;
  cfg.states = 2;
  cfg.gamma = 10.0;
  cfg.reuse_global_network = true;
  const auto part = cluster(data.returns, tmfg_tree_builder(), cfg);
  for (std::size_t i = 1; i < part.trace.size(); ++i) {
    if (!part.trace[i].reseeded) EXPECT_GE(part.trace[i].total_likelihood, part.trace[i - 1].total_likelihood - 1e-8);
  }
  EXPECT_EQ(part.trees[0].cliques, part.trees[1].cliques);
}

TEST(Icc, StatesOrderedByMeanDay) {
  const auto data = planted_regimes(10, 100, 21);
  IccConfig cfg;
  cfg.states = 3;
  cfg.gamma = 2.0;
  cfg.seed = 9;
  const auto part = cluster(data.returns, tmfg_tree_builder(), cfg);
  double prev = -1.0;
  for (int c = 0; c < 3; ++c) {
    const auto days = part.state_days(c);
    ASSERT_FALSE(days.empty());
    const double mean = std::accumulate(days.begin(), days.end(), 0.0) / static_cast<double>(days.size());
    EXPECT_GT(mean, prev);
    prev = mean;
    EXPECT_EQ(part.models[c].id, "state" + std::to_string(c + 1));
  }
  std::vector<int> seen(part.relabeling);
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
  EXPECT_GT(part.mean_segment_length(), 1.0);
}

TEST(Icc, DeterministicInSeed) {
  const auto data = planted_regimes(8, 80, 31);
  IccConfig cfg;
  cfg.states = 2;
  cfg.gamma = 5.0;
  cfg.seed = 42;
  const auto a = cluster(data.returns, tmfg_tree_builder(), cfg);
  const auto b = cluster(data.returns, tmfg_tree_builder(), cfg);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.total_likelihood, b.total_likelihood);
}

TEST(Icc, ContiguousInitialization) {
  const auto data = planted_regimes(8, 80, 41);
  IccConfig cfg;
  cfg.states = 2;
  cfg.gamma = 20.0;
  cfg.init = IccConfig::Init::contiguous;
  const auto part = cluster(data.returns, tmfg_tree_builder(), cfg);
  EXPECT_GE(matched_accuracy(part.labels, data.truth), 0.95);
}

TEST(Icc, MinimumStateSize) {
  const auto data = planted_regimes(8, 60, 51);
  IccConfig cfg;
  cfg.states = 4;
  cfg.gamma = 0.0;
  cfg.min_days = 10;
  const auto part = cluster(data.returns, tmfg_tree_builder(), cfg);
  // Converged labels are the refilled labels the last models were fitted on.
  ASSERT_TRUE(part.converged);
  for (int c = 0; c < 4; ++c) EXPECT_GE(part.state_days(c).size(), 10u);
  EXPECT_EQ(part.labels.size(), 120u);
}

TEST(Icc, Validation) {
  const auto data = planted_regimes(8, 20, 61);
  IccConfig cfg;
  cfg.states = 5;
  cfg.min_days = 10;
  EXPECT_THROW(cluster(data.returns, tmfg_tree_builder(), cfg), ValidationError);
  cfg.states = 0;
  EXPECT_THROW(cluster(data.returns, tmfg_tree_builder(), cfg), ValidationError);
  cfg.states = 2;
  cfg.gamma = -1.0;
  EXPECT_THROW(cluster(data.returns, tmfg_tree_builder(), cfg), ValidationError);
  cfg.gamma = 1.0;
  cfg.min_days = 3;
  EXPECT_THROW(cluster(data.returns, tmfg_tree_builder(), cfg), ValidationError);
  cfg.min_days = 0;
  cfg.restarts = 0;
  EXPECT_THROW(multi_restart_cluster(data.returns, tmfg_tree_builder(), cfg), ValidationError);
}

TEST(Agreement, AdjustedRandIndex) {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, a), 1.0);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, {2, 2, 0, 0, 1, 1}), 1.0);
  // Hand-computed contingency example.
  EXPECT_NEAR(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}), 0.24242424242424243, 1e-14);
  EXPECT_THROW(adjusted_rand_index({0}, {0, 1}), ValidationError);
}

TEST(Agreement, MatchedAccuracy) {
  EXPECT_DOUBLE_EQ(matched_accuracy({1, 1, 0, 0}, {0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(matched_accuracy({0, 0, 0, 1}, {0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(matched_accuracy({0, 1, 2, 2}, {0, 0, 0, 0}), 0.5);
  EXPECT_THROW(matched_accuracy({0, 1}, {0}), ValidationError);
}

TEST(Icc, PartitionCsv) {
  MarketStatePartition part;
  part.labels = {0, 1, 1};
  const std::vector<Date> dates{parse_date("2021-03-01"), parse_date("2021-03-02"), parse_date("2021-03-03")};
  EXPECT_EQ(partition_csv(part, dates), "date,state\n2021-03-01,1\n2021-03-02,2\n2021-03-03,2\n");
  EXPECT_THROW(partition_csv(part, {dates[0]}), ValidationError);
}
