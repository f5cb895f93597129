#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fstress/data_ingest.hpp"
#include "fstress/logo.hpp"
#include "fstress/tmfg.hpp"

namespace fstress {

/// Stress on X, evaluated on Y. An empty `evaluated` means the complement of
/// `stressed`; an empty `shock` means one standard deviation on every stressed node.
struct StressQuery {
  std::vector<int> stressed;
  std::vector<int> evaluated;
  Eigen::VectorXd shock;
};

/// E[Y | X = x] = mu_Y + Omega_YX Omega_XX^{-1} (x - mu_X), length |Y|.
Eigen::VectorXd conditional_mean(const SparsePrecisionModel& model, const StressQuery& query);

enum class Direction { impact, response };
std::string_view to_string(Direction d);

/// Mean loss propagated by a unit shock. For `impact` the shock sits on
/// `group` and the loss is averaged over `rest`; for `response` the roles swap.
struct ImpactReport {
  double value = 0.0;
  Direction direction = Direction::impact;
  std::vector<int> group;
  std::vector<int> rest;
  std::string model_id;
};

/// L_{X->Y} = (1/|Y|) 1' Omega_YX Omega_XX^{-1} 1. Y defaults to the complement of X.
ImpactReport impact(const SparsePrecisionModel& model, std::span<const int> stressed,
                    std::span<const int> evaluated = {});

/// L_{Y->X} with Y the complement of X, evaluated as -(1/|X|) 1' J_XX^{-1} J_XY 1.
ImpactReport response(const SparsePrecisionModel& model, std::span<const int> group);

/// Fast repeated impact/response of groups against their complement using
/// the dense shape matrix. Holds a reference to the model.
class GroupScorer {
 public:
  explicit GroupScorer(const SparsePrecisionModel& model);
  int size() const { return p_; }
  double impact(std::span<const int> group) const;
  double response(std::span<const int> group) const;

 private:
  const SparsePrecisionModel* model_;
  int p_;
  const Eigen::MatrixXd* omega_;
  Eigen::VectorXd row_sums_;
};

struct Swap {
  int removed = 0;
  int added = 0;
  double impact = 0.0;  // group impact after the swap
};

struct RestartOutcome {
  std::uint64_t seed = 0;
  std::vector<int> group;
  double impact = 0.0;
  int iterations = 0;
};

struct GroupSearchResult {
  std::vector<int> group;  // sorted
  double impact = 0.0;
  int iterations = 0;      // neighbourhood passes of the winning restart
  std::uint64_t seed = 0;  // master seed
  int best_restart = 0;
  std::vector<Swap> history;  // swaps of the winning restart
  std::vector<RestartOutcome> restarts;
};

/// Best-improvement swap search from seeded random n-sets; ties in gain go to
/// the lowest (internal, external) pair. Returns the best local optimum.
GroupSearchResult greedy_max_impact_group(const SparsePrecisionModel& model, int n, std::uint64_t seed,
                                          int restarts = 10);

/// Whether any single swap improves the impact of `group` by more than `tolerance`.
bool has_improving_swap(const GroupScorer& scorer, std::span<const int> group, double tolerance = 1e-12);

struct NodeScore {
  int node = 0;
  double centrality = 0.0;
  double impact = 0.0;
  double response = 0.0;
};

std::vector<NodeScore> single_node_scan(const SparsePrecisionModel& model, const CentralityVector& cent);

struct GroupSample {
  int size = 0;
  int trial = 0;
  std::vector<int> members;
  double mean_centrality = 0.0;
  double impact = 0.0;
  double response = 0.0;
};

struct GroupBin {
  int size = 0;
  int bin = 0;
  int count = 0;
  double mean_centrality = 0.0;
  double impact = 0.0;
  double response = 0.0;
};

struct RandomGroupProfile {
  std::vector<GroupSample> samples;
  std::vector<GroupBin> bins;  // up to 10 equal-count centrality bins per size
};

/// Uniform random groups per size; each trial draws from its own derived seed.
RandomGroupProfile random_group_profile(const SparsePrecisionModel& model, const CentralityVector& cent,
                                        const std::vector<int>& sizes, int trials, std::uint64_t seed);

struct SectorScore {
  std::string sector;
  std::vector<int> members;
  int size = 0;
  double impact = 0.0;
  double response = 0.0;
  double internal_fraction = 0.0;
  double mean_centrality = 0.0;
  double log_centrality = 0.0;
};

struct SectorProfile {
  std::vector<SectorScore> rows;
  std::vector<std::string> excluded;
};

SectorProfile sector_profile(const SparsePrecisionModel& model, const SectorLinkStats& stats);

// Exports ---------------------------------------------------------------------

/// `direction,X,Y,L,model_id,seed` with X the group and Y its complement, written as `rest`.
std::string impact_reports_csv(const std::vector<ImpactReport>& reports, const std::vector<std::string>& labels,
                               std::uint64_t seed);
std::string group_profile_csv(const RandomGroupProfile& profile);
std::string group_bins_csv(const RandomGroupProfile& profile);

}  // namespace fstress
