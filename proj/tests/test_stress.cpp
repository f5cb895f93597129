#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fstress/error.hpp"
#include "fstress/stress.hpp"
#include "oracles/dense.hpp"
#include "test_util.hpp"

using namespace fstress;

namespace {

SparsePrecisionModel bivariate(double rho) {
  Eigen::MatrixXd omega(2, 2);
  omega << 1, rho, rho, 1;
  return SparsePrecisionModel::from_covariance(Eigen::VectorXd::Zero(2), omega);
}

SparsePrecisionModel identity_model(int p) {
  return SparsePrecisionModel::from_dense(Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Identity(p, p));
}

std::vector<int> random_subset(std::mt19937_64& rng, int p, int n) {
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n);
  return all;
}

}  // namespace

TEST(ConditionalMean, IndependentAndBivariate) {
  const auto eye = identity_model(5);
  StressQuery q{{1, 3}, {}, Eigen::Vector2d(2.0, -1.0)};
  EXPECT_EQ(conditional_mean(eye, q).cwiseAbs().maxCoeff(), 0.0);
  const auto m = bivariate(0.3);
  const auto shift = conditional_mean(m, {{0}, {1}, {}});
  ASSERT_EQ(shift.size(), 1);
  EXPECT_NEAR(shift[0], 0.3, 1e-15);
}

TEST(ConditionalMean, MatchesDenseBlockFormula) {
  std::mt19937_64 rng(1);
  const auto fit = testutil::fit_random_model(10, 60, rng);
  const Eigen::MatrixXd omega = Eigen::MatrixXd(fit.model.precision()).inverse();
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = random_subset(rng, 10, 3);
    const auto y = oracle::complement(10, x);
    Eigen::VectorXd shock(3);
    for (int i = 0; i < 3; ++i) shock[i] = nd(rng);
    const auto got = conditional_mean(fit.model, {x, {}, shock});
    const Eigen::VectorXd want = oracle::conditional_shift(omega, x, y, shock) +
                                 Eigen::VectorXd(fit.model.mean()(y));
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ConditionalMean, RejectsBadQueries) {
  const auto m = identity_model(4);
  EXPECT_THROW(conditional_mean(m, {{}, {}, {}}), ValidationError);
  EXPECT_THROW(conditional_mean(m, {{0, 1}, {1, 2}, {}}), ValidationError);
  EXPECT_THROW(conditional_mean(m, {{0, 0}, {}, {}}), ValidationError);
  EXPECT_THROW(conditional_mean(m, {{0, 1, 2, 3}, {}, {}}), ValidationError);
  EXPECT_THROW(conditional_mean(m, {{7}, {}, {}}), ValidationError);
  EXPECT_THROW(conditional_mean(m, {{0, 1}, {}, Eigen::VectorXd::Ones(3)}), ValidationError);
}

TEST(ConditionalMean, SingularBlockIsNumericalError) {
  // Two perfectly collinear nodes make Omega_XX singular.
  Eigen::MatrixXd omega(3, 3);
  omega << 1, 1, 0.2, 1, 1, 0.2, 0.2, 0.2, 1;
  // Just PD: tiny idiosyncratic variance keeps the model valid while X is near-singular.
  omega(0, 0) += 1e-15;
  omega(1, 1) += 1e-15;
  EXPECT_THROW(
      {
        const auto m = SparsePrecisionModel::from_covariance(Eigen::VectorXd::Zero(3), omega);
        impact(m, std::vector<int>{0, 1});
      },
      NumericalError);
}

TEST(Impact, BivariateAndIdentity) {
  const auto m = bivariate(0.5);
  const std::vector<int> x{0};
  const std::vector<int> y{1};
  EXPECT_NEAR(impact(m, x, y).value, 0.5, 1e-15);
  EXPECT_NEAR(response(m, x).value, 0.5, 1e-15);
  EXPECT_EQ(impact(m, x).direction, Direction::impact);
  EXPECT_EQ(response(m, x).direction, Direction::response);
  const auto eye = identity_model(6);
  const std::vector<int> g{0, 4};
  EXPECT_EQ(impact(eye, g).value, 0.0);
  EXPECT_EQ(response(eye, g).value, 0.0);
  EXPECT_EQ(GroupScorer(eye).impact(g), 0.0);
}

TEST(Impact, MatchesDenseOracleAndResponseCrossCheck) {
  std::mt19937_64 rng(2);
  const auto fit = testutil::fit_random_model(12, 80, rng);
  const Eigen::MatrixXd omega = Eigen::MatrixXd(fit.model.precision()).inverse();
  const GroupScorer scorer(fit.model);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_subset(rng, 12, 1 + rep % 6);
    const auto rep_impact = impact(fit.model, x);
    EXPECT_NEAR(rep_impact.value, oracle::impact(omega, x), 1e-9);
    EXPECT_NEAR(scorer.impact(x), oracle::impact(omega, x), 1e-9);
    // Response through the precision route versus impact with roles swapped.
    const auto y = oracle::complement(12, x);
    EXPECT_NEAR(response(fit.model, x).value, impact(fit.model, y, x).value, 1e-9);
    EXPECT_NEAR(response(fit.model, x).value, oracle::response(omega, x), 1e-9);
  }
  const auto part = random_subset(rng, 12, 6);
  const std::vector<int> x(part.begin(), part.begin() + 4);
  const std::vector<int> y(part.begin() + 4, part.end());
  EXPECT_NEAR(impact(fit.model, x, y).value, oracle::impact(omega, x, y), 1e-9);
}

TEST(Impact, LinearInShockAndScaleInvariant) {
  std::mt19937_64 rng(3);
  const auto fit = testutil::fit_random_model(14, 90, rng);
  const std::vector<int> x{2, 5, 9};
  std::normal_distribution<double> nd;
  Eigen::VectorXd a(3);
  Eigen::VectorXd b(3);
  for (int i = 0; i < 3; ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
  }
  const Eigen::VectorXd base = conditional_mean(fit.model, {x, {}, Eigen::VectorXd::Zero(3)});
  const Eigen::VectorXd sa = conditional_mean(fit.model, {x, {}, a}) - base;
  const Eigen::VectorXd sb = conditional_mean(fit.model, {x, {}, b}) - base;
  const Eigen::VectorXd sab = conditional_mean(fit.model, {x, {}, 2.5 * a - 0.5 * b}) - base;
  EXPECT_LT((sab - (2.5 * sa - 0.5 * sb)).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::MatrixXd j = Eigen::MatrixXd(fit.model.precision());
  for (double c : {0.01, 3.0, 250.0}) {
    const auto scaled = SparsePrecisionModel::from_dense(fit.model.mean(), j / c);
    EXPECT_NEAR(impact(scaled, x).value, impact(fit.model, x).value, 1e-10);
    EXPECT_NEAR(response(scaled, x).value, response(fit.model, x).value, 1e-10);
  }
}

TEST(GreedySearch, MatchesBruteForceAtDeskScale) {
  std::mt19937_64 rng(4);
  const auto fit = testutil::fit_random_model(12, 90, rng);
  const Eigen::MatrixXd omega = Eigen::MatrixXd(fit.model.precision()).inverse();
  const auto best = oracle::brute_force_max_impact(omega, 3);
  const auto res = greedy_max_impact_group(fit.model, 3, 99, 10);
  EXPECT_EQ(res.group, best.group);
  EXPECT_NEAR(res.impact, best.impact, 1e-9);
  for (const auto& r : res.restarts) EXPECT_GE(res.impact, r.impact);
  EXPECT_EQ(res.restarts.size(), 10u);
  EXPECT_FALSE(has_improving_swap(GroupScorer(fit.model), res.group));
}

TEST(GreedySearch, SingleNodeIsArgmaxOfScan) {
  std::mt19937_64 rng(5);
  const auto fit = testutil::fit_random_model(15, 80, rng);
  const auto scan = single_node_scan(fit.model, centrality(fit.net, CentralityKind::degree));
  const auto top = std::max_element(scan.begin(), scan.end(),
                                    [](const NodeScore& a, const NodeScore& b) { return a.impact < b.impact; });
  const auto res = greedy_max_impact_group(fit.model, 1, 3, 3);
  ASSERT_EQ(res.group.size(), 1u);
  EXPECT_EQ(res.group[0], top->node);
}

TEST(GreedySearch, FlatObjectiveStopsAfterOnePass) {
  const auto res = greedy_max_impact_group(identity_model(8), 3, 1, 2);
  EXPECT_EQ(res.impact, 0.0);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_TRUE(res.history.empty());
}

TEST(GreedySearch, DeterministicAndLocallyOptimal) {
  std::mt19937_64 rng(6);
  const auto fit = testutil::fit_random_model(20, 100, rng);
  const auto a = greedy_max_impact_group(fit.model, 5, 42, 4);
  const auto b = greedy_max_impact_group(fit.model, 5, 42, 4);
  EXPECT_EQ(a.group, b.group);
  EXPECT_EQ(a.impact, b.impact);
  EXPECT_TRUE(std::is_sorted(a.group.begin(), a.group.end()));
  EXPECT_EQ(std::set<int>(a.group.begin(), a.group.end()).size(), 5u);
  EXPECT_FALSE(has_improving_swap(GroupScorer(fit.model), a.group));
  double last = -1e300;
  for (const auto& s : a.history) {
    EXPECT_GT(s.impact, last);
    last = s.impact;
  }
  EXPECT_THROW(greedy_max_impact_group(fit.model, 20, 1), ValidationError);
  EXPECT_THROW(greedy_max_impact_group(fit.model, 0, 1), ValidationError);
  EXPECT_THROW(greedy_max_impact_group(fit.model, 3, 1, 0), ValidationError);
}

TEST(RandomGroups, SizeOneReproducesScanAndDenseOracle) {
  std::mt19937_64 rng(7);
  const auto fit = testutil::fit_random_model(15, 90, rng);
  const auto cent = centrality(fit.net, CentralityKind::eigenvector);
  const auto scan = single_node_scan(fit.model, cent);
  const auto prof = random_group_profile(fit.model, cent, {1, 5}, 50, 11);
  const Eigen::MatrixXd omega = Eigen::MatrixXd(fit.model.precision()).inverse();
  int checked = 0;
  for (const auto& s : prof.samples) {
    if (s.size == 1) {
      const auto& node = scan[static_cast<std::size_t>(s.members[0])];
      EXPECT_DOUBLE_EQ(s.impact, node.impact);
      EXPECT_DOUBLE_EQ(s.response, node.response);
      EXPECT_DOUBLE_EQ(s.mean_centrality, node.centrality);
    } else {
      EXPECT_NEAR(s.impact, oracle::impact(omega, s.members), 1e-9);
      EXPECT_NEAR(s.response, oracle::response(omega, s.members), 1e-9);
      double c = 0.0;
      for (int m : s.members) c += cent.scores[static_cast<std::size_t>(m)];
      EXPECT_NEAR(s.mean_centrality, c / 5.0, 1e-15);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 50);
  const auto again = random_group_profile(fit.model, cent, {1, 5}, 50, 11);
  EXPECT_EQ(group_profile_csv(prof), group_profile_csv(again));
  EXPECT_EQ(group_bins_csv(prof), group_bins_csv(again));
  int binned = 0;
  for (const auto& b : prof.bins) {
    if (b.size == 5) binned += b.count;
  }
  EXPECT_EQ(binned, 50);
  EXPECT_THROW(random_group_profile(fit.model, cent, {15}, 5, 1), ValidationError);
  EXPECT_THROW(random_group_profile(fit.model, cent, {2}, 0, 1), ValidationError);
}

TEST(SectorProfile, ScoresEachSectorAndExcludesWholeUniverse) {
  std::mt19937_64 rng(8);
  auto fit = testutil::fit_random_model(10, 80, rng);
  fit.net.labels = fit.returns.tickers;
  std::vector<std::string> labels{"A", "A", "A", "B", "B", "B", "B", "C", "C", "C"};
  const auto sectors = make_sector_map(fit.returns.tickers, labels);
  const auto cent = centrality(fit.net, CentralityKind::degree);
  const auto prof = sector_profile(fit.model, sector_link_stats(fit.net, sectors, cent));
  ASSERT_EQ(prof.rows.size(), 3u);
  for (const auto& r : prof.rows) {
    EXPECT_DOUBLE_EQ(r.impact, impact(fit.model, r.members).value);
    EXPECT_DOUBLE_EQ(r.response, response(fit.model, r.members).value);
  }
  const auto whole = make_sector_map(fit.returns.tickers, std::vector<std::string>(10, "All"));
  const auto none = sector_profile(fit.model, sector_link_stats(fit.net, whole, cent));
  EXPECT_TRUE(none.rows.empty());
  EXPECT_EQ(none.excluded.size(), 1u);
}

TEST(Reports, CsvColumns) {
  const auto m = bivariate(0.5);
  std::vector<ImpactReport> reports{impact(m, std::vector<int>{0}), response(m, std::vector<int>{0})};
  const auto csv = impact_reports_csv(reports, {"AAA", "BBB"}, 7);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "direction,X,Y,L,model_id,seed");
  for (const char* dir : {"impact", "response"}) {
    std::getline(in, line);
    EXPECT_EQ(line.rfind(std::string(dir) + ",AAA,rest,", 0), 0u) << line;
    const auto l_start = line.find("rest,") + 5;
    EXPECT_NEAR(std::stod(line.substr(l_start)), 0.5, 1e-15);
    EXPECT_EQ(line.substr(line.size() - 3), ",,7");
  }
}
