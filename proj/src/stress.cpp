#include "fstress/stress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fstress/error.hpp"
#include "fstress/seeding.hpp"
#include "text_util.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> validated_set(std::span<const int> nodes, int p, const char* what) {
  std::vector<int> out(nodes.begin(), nodes.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw ValidationError(std::string(what) + " contains a repeated node");
  }
  for (int v : out) {
    if (v < 0 || v >= p) throw ValidationError(std::string(what) + " node " + std::to_string(v) + " out of range");
  }
  return out;
}

std::vector<int> complement(const std::vector<int>& sorted_set, int p) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(p) - sorted_set.size());
  auto it = sorted_set.begin();
  for (int v = 0; v < p; ++v) {
    if (it != sorted_set.end() && *it == v) {
      ++it;
    } else {
      out.push_back(v);
    }
  }
  return out;
}

void require_disjoint(const std::vector<int>& x, const std::vector<int>& y) {
  std::vector<int> both;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(both));
  if (!both.empty()) throw ValidationError("stressed and evaluated sets overlap at node " + std::to_string(both[0]));
}

// Solves the symmetric positive definite system, rejecting numerically singular blocks.
VectorXd spd_solve(const MatrixXd& a, const VectorXd& b, const char* what) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw NumericalError(std::string(what) + " is numerically singular");
  }
  return llt.solve(b);
}

std::vector<int> random_group(std::mt19937_64& rng, int p, int n) {
  std::vector<int> nodes(static_cast<std::size_t>(p));
  std::iota(nodes.begin(), nodes.end(), 0);
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, p - 1);
    std::swap(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(pick(rng))]);
  }
  nodes.resize(static_cast<std::size_t>(n));
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

double mean_score(const CentralityVector& cent, const std::vector<int>& group) {
  double s = 0.0;
  for (int v : group) s += cent.scores[static_cast<std::size_t>(v)];
  return s / static_cast<double>(group.size());
}

std::string join_labels(const std::vector<int>& nodes, const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (k) out += ';';
    out += labels.empty() ? std::to_string(nodes[k]) : labels[static_cast<std::size_t>(nodes[k])];
  }
  return out;
}

}  // namespace

VectorXd conditional_mean(const SparsePrecisionModel& model, const StressQuery& query) {
  const int p = model.size();
  const auto x = validated_set(query.stressed, p, "stressed set");
  if (x.empty()) throw ValidationError("stressed set is empty");
  const auto y = query.evaluated.empty() ? complement(x, p) : validated_set(query.evaluated, p, "evaluated set");
  if (y.empty()) throw ValidationError("evaluated set is empty");
  require_disjoint(x, y);

  // The shock is supplied in the caller's order of `stressed`; permute it to sorted order.
  VectorXd shock = VectorXd::Ones(static_cast<Index>(x.size()));
  if (query.shock.size() > 0) {
    if (query.shock.size() != static_cast<Index>(x.size())) throw ValidationError("shock length must equal |X|");
    for (std::size_t k = 0; k < query.stressed.size(); ++k) {
      const auto pos = std::lower_bound(x.begin(), x.end(), query.stressed[k]) - x.begin();
      shock[pos] = query.shock[static_cast<Index>(k)];
    }
  }
  const MatrixXd cols = model.covariance_columns(x);
  MatrixXd oxx(static_cast<Index>(x.size()), static_cast<Index>(x.size()));
  MatrixXd oyx(static_cast<Index>(y.size()), static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) oxx.row(static_cast<Index>(i)) = cols.row(x[i]);
  for (std::size_t i = 0; i < y.size(); ++i) oyx.row(static_cast<Index>(i)) = cols.row(y[i]);
  const VectorXd a = spd_solve(0.5 * (oxx + oxx.transpose()), shock, "Omega_XX");
  VectorXd out(static_cast<Index>(y.size()));
  const VectorXd& mu = model.mean();
  const VectorXd shift = oyx * a;
  for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<Index>(i)] = mu[y[i]] + shift[static_cast<Index>(i)];
  return out;
}

std::string_view to_string(Direction d) { return d == Direction::impact ? "impact" : "response"; }

ImpactReport impact(const SparsePrecisionModel& model, std::span<const int> stressed, std::span<const int> evaluated) {
  const int p = model.size();
  StressQuery q;
  q.stressed.assign(stressed.begin(), stressed.end());
  q.evaluated.assign(evaluated.begin(), evaluated.end());
  const VectorXd cond = conditional_mean(model, q);
  ImpactReport r;
  r.direction = Direction::impact;
  r.group = validated_set(stressed, p, "stressed set");
  r.rest = evaluated.empty() ? complement(r.group, p) : validated_set(evaluated, p, "evaluated set");
  const VectorXd& mu = model.mean();
  double total = 0.0;
  for (std::size_t i = 0; i < r.rest.size(); ++i) total += cond[static_cast<Index>(i)] - mu[r.rest[i]];
  r.value = total / static_cast<double>(r.rest.size());
  r.model_id = model.id;
  return r;
}

ImpactReport response(const SparsePrecisionModel& model, std::span<const int> group) {
  const int p = model.size();
  ImpactReport r;
  r.direction = Direction::response;
  r.group = validated_set(group, p, "group");
  if (r.group.empty() || static_cast<int>(r.group.size()) >= p) {
    throw ValidationError("response needs a non-empty proper subset");
  }
  r.rest = complement(r.group, p);
  r.model_id = model.id;

  const SparseMatrix& j = model.precision();
  const auto n = static_cast<Index>(r.group.size());
  std::vector<int> position(static_cast<std::size_t>(p), -1);
  for (Index k = 0; k < n; ++k) position[static_cast<std::size_t>(r.group[static_cast<std::size_t>(k)])] = static_cast<int>(k);
  MatrixXd jxx = MatrixXd::Zero(n, n);
  VectorXd jxy_ones = VectorXd::Zero(n);
  for (Index col = 0; col < j.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(j, col); it; ++it) {
      const int row_pos = position[static_cast<std::size_t>(it.row())];
      if (row_pos < 0) continue;
      const int col_pos = position[static_cast<std::size_t>(it.col())];
      if (col_pos >= 0) {
        jxx(row_pos, col_pos) = it.value();
      } else {
        jxy_ones[row_pos] += it.value();
      }
    }
  }
  // E[X | Y = mu_Y + 1] - mu_X = -J_XX^{-1} J_XY 1
  const VectorXd shift = -spd_solve(jxx, jxy_ones, "J_XX");
  r.value = shift.mean();
  return r;
}

GroupScorer::GroupScorer(const SparsePrecisionModel& model)
    : model_(&model), p_(model.size()), omega_(&model.dense_covariance()) {
  row_sums_ = omega_->rowwise().sum();
}

double GroupScorer::impact(std::span<const int> group) const {
  const auto n = static_cast<Index>(group.size());
  if (n == 0 || n >= p_) throw ValidationError("impact needs a non-empty proper subset");
  MatrixXd oxx(n, n);
  VectorXd sx(n);
  for (Index a = 0; a < n; ++a) {
    sx[a] = row_sums_[group[static_cast<std::size_t>(a)]];
    for (Index b = 0; b < n; ++b) oxx(a, b) = (*omega_)(group[static_cast<std::size_t>(a)], group[static_cast<std::size_t>(b)]);
  }
  // 1_Y' Omega_YX = s_X' - 1' Omega_XX, so the numerator is s_X' Omega_XX^{-1} 1 - n.
  const VectorXd a = spd_solve(oxx, VectorXd::Ones(n), "Omega_XX");
  return (sx.dot(a) - static_cast<double>(n)) / static_cast<double>(p_ - n);
}

double GroupScorer::response(std::span<const int> group) const { return fstress::response(*model_, group).value; }

bool has_improving_swap(const GroupScorer& scorer, std::span<const int> group, double tolerance) {
  const double current = scorer.impact(group);
  std::vector<int> members(group.begin(), group.end());
  std::vector<char> inside(static_cast<std::size_t>(scorer.size()), 0);
  for (int v : members) inside[static_cast<std::size_t>(v)] = 1;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const int out = members[i];
    for (int e = 0; e < scorer.size(); ++e) {
      if (inside[static_cast<std::size_t>(e)]) continue;
      members[i] = e;
      const double value = scorer.impact(members);
      members[i] = out;
      if (value > current + tolerance * std::max(1.0, std::abs(current))) return true;
    }
  }
  return false;
}

GroupSearchResult greedy_max_impact_group(const SparsePrecisionModel& model, int n, std::uint64_t seed, int restarts) {
  const int p = model.size();
  if (n < 1 || n >= p) throw ValidationError("group size must satisfy 1 <= n < p (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  const GroupScorer scorer(model);

  GroupSearchResult best;
  best.seed = seed;
  for (int r = 0; r < restarts; ++r) {
    RestartOutcome outcome;
    outcome.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    std::mt19937_64 rng(outcome.seed);
    std::vector<int> group = random_group(rng, p, n);
    std::vector<char> inside(static_cast<std::size_t>(p), 0);
    for (int v : group) inside[static_cast<std::size_t>(v)] = 1;
    double current = scorer.impact(group);
    std::vector<Swap> history;

    for (;;) {
      ++outcome.iterations;
      const double threshold = current + 1e-12 * std::max(1.0, std::abs(current));
      double best_value = threshold;
      int best_slot = -1;
      int best_in = -1;
      // `group` stays sorted, so slot order is internal-node order.
      for (int slot = 0; slot < n; ++slot) {
        const int removed = group[static_cast<std::size_t>(slot)];
        for (int e = 0; e < p; ++e) {
          if (inside[static_cast<std::size_t>(e)]) continue;
          group[static_cast<std::size_t>(slot)] = e;
          const double value = scorer.impact(group);
          if (value > best_value) {
            best_value = value;
            best_slot = slot;
            best_in = e;
          }
        }
        group[static_cast<std::size_t>(slot)] = removed;
      }
      if (best_slot < 0) break;
      const int removed = group[static_cast<std::size_t>(best_slot)];
      inside[static_cast<std::size_t>(removed)] = 0;
      inside[static_cast<std::size_t>(best_in)] = 1;
      group[static_cast<std::size_t>(best_slot)] = best_in;
      std::sort(group.begin(), group.end());
      current = scorer.impact(group);
      history.push_back({removed, best_in, current});
    }
    outcome.group = group;
    outcome.impact = current;
    if (r == 0 || outcome.impact > best.impact) {
      best.group = group;
      best.impact = current;
      best.iterations = outcome.iterations;
      best.best_restart = r;
      best.history = std::move(history);
    }
    best.restarts.push_back(std::move(outcome));
  }
  return best;
}

std::vector<NodeScore> single_node_scan(const SparsePrecisionModel& model, const CentralityVector& cent) {
  const int p = model.size();
  if (static_cast<int>(cent.scores.size()) != p) throw ValidationError("centrality length does not match model");
  const GroupScorer scorer(model);
  std::vector<NodeScore> out;
  for (int i = 0; i < p; ++i) {
    const int g[1] = {i};
    out.push_back({i, cent.scores[static_cast<std::size_t>(i)], scorer.impact(g), scorer.response(g)});
  }
  return out;
}

RandomGroupProfile random_group_profile(const SparsePrecisionModel& model, const CentralityVector& cent,
                                        const std::vector<int>& sizes, int trials, std::uint64_t seed) {
  const int p = model.size();
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (static_cast<int>(cent.scores.size()) != p) throw ValidationError("centrality length does not match model");
  for (int s : sizes) {
    if (s < 1 || s >= p) throw ValidationError("group size " + std::to_string(s) + " outside [1, p)");
  }
  const GroupScorer scorer(model);
  RandomGroupProfile profile;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const int size = sizes[si];
    std::vector<GroupSample> batch;
    for (int t = 0; t < trials; ++t) {
      std::mt19937_64 rng(derive_seed(derive_seed(seed, si), static_cast<std::uint64_t>(t)));
      GroupSample g;
      g.size = size;
      g.trial = t;
      g.members = random_group(rng, p, size);
      g.mean_centrality = mean_score(cent, g.members);
      g.impact = scorer.impact(g.members);
      g.response = scorer.response(g.members);
      batch.push_back(std::move(g));
    }
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return batch[a].mean_centrality < batch[b].mean_centrality;
    });
    const int nbins = std::min(10, trials);
    for (int b = 0; b < nbins; ++b) {
      const std::size_t lo = order.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(nbins);
      const std::size_t hi = order.size() * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(nbins);
      GroupBin bin{size, b, static_cast<int>(hi - lo), 0.0, 0.0, 0.0};
      for (std::size_t k = lo; k < hi; ++k) {
        bin.mean_centrality += batch[order[k]].mean_centrality;
        bin.impact += batch[order[k]].impact;
        bin.response += batch[order[k]].response;
      }
      bin.mean_centrality /= bin.count;
      bin.impact /= bin.count;
      bin.response /= bin.count;
      profile.bins.push_back(bin);
    }
    profile.samples.insert(profile.samples.end(), batch.begin(), batch.end());
  }
  return profile;
}

SectorProfile sector_profile(const SparsePrecisionModel& model, const SectorLinkStats& stats) {
  const int p = model.size();
  SectorProfile out;
  for (const auto& row : stats.rows) {
    if (row.size >= p) {
      out.excluded.push_back("sector '" + row.sector + "' covers the whole universe; excluded");
      continue;
    }
    SectorScore s;
    s.sector = row.sector;
    s.members = row.members;
    s.size = row.size;
    s.impact = impact(model, row.members).value;
    s.response = response(model, row.members).value;
    s.internal_fraction = row.internal_fraction;
    s.mean_centrality = row.mean_centrality;
    s.log_centrality = row.log_mean_centrality;
    out.rows.push_back(std::move(s));
  }
  return out;
}

std::string impact_reports_csv(const std::vector<ImpactReport>& reports, const std::vector<std::string>& labels,
                               std::uint64_t seed) {
  std::ostringstream out;
  out << "direction,X,Y,L,model_id,seed\n";
  for (const auto& r : reports) {
    const int p = static_cast<int>(r.group.size() + r.rest.size());
    const bool rest_is_complement = labels.empty() || static_cast<int>(labels.size()) == p;
    const std::string rest = rest_is_complement ? std::string("rest") : join_labels(r.rest, labels);
    out << to_string(r.direction) << ',' << join_labels(r.group, labels) << ',' << rest << ',' << detail::format_double(r.value) << ',' << r.model_id << ',' << seed << '\n';
  }
  return out.str();
}

std::string group_profile_csv(const RandomGroupProfile& profile) {
  std::ostringstream out;
  out << "size,mean_centrality,impact,response\n";
  for (const auto& g : profile.samples) {
    out << g.size << ',' << detail::format_double(g.mean_centrality) << ',' << detail::format_double(g.impact) << ','
        << detail::format_double(g.response) << '\n';
  }
  return out.str();
}

std::string group_bins_csv(const RandomGroupProfile& profile) {
  std::ostringstream out;
  out << "size,bin,count,mean_centrality,impact,response\n";
  for (const auto& b : profile.bins) {
    out << b.size << ',' << b.bin << ',' << b.count << ',' << detail::format_double(b.mean_centrality) << ','
        << detail::format_double(b.impact) << ',' << detail::format_double(b.response) << '\n';
  }
  return out.str();
}

}  // namespace fstress
