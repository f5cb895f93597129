#include "fstress/icc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fstress/error.hpp"
#include "fstress/seeding.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> counts_of(const std::vector<int>& labels, int k) {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int c : labels) ++counts[static_cast<std::size_t>(c)];
  return counts;
}

std::vector<int> initial_labels(int days, const IccConfig& config) {
  std::vector<int> labels(static_cast<std::size_t>(days));
  if (config.init == IccConfig::Init::contiguous) {
    for (int t = 0; t < days; ++t) {
      labels[static_cast<std::size_t>(t)] = static_cast<int>(static_cast<long>(t) * config.states / days);
    }
    return labels;
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, config.states - 1);
  for (auto& c : labels) c = pick(rng);
  return labels;
}

// Moves days into states below `min_days`. `badness` orders candidate days
// (highest first); donors never drop below `min_days`.
bool refill_small_states(std::vector<int>& labels, int k, int min_days, const std::vector<double>& badness,
                         std::vector<std::string>& events, int iteration) {
  bool any = false;
  auto counts = counts_of(labels, k);
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] >= min_days) continue;
    std::vector<int> candidates;
    for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
      if (labels[static_cast<std::size_t>(t)] != c) candidates.push_back(t);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return badness[static_cast<std::size_t>(a)] > badness[static_cast<std::size_t>(b)];
    });
    int moved = 0;
    for (int t : candidates) {
      if (counts[static_cast<std::size_t>(c)] >= min_days) break;
      const int donor = labels[static_cast<std::size_t>(t)];
      if (counts[static_cast<std::size_t>(donor)] <= min_days) continue;
      labels[static_cast<std::size_t>(t)] = c;
      --counts[static_cast<std::size_t>(donor)];
      ++counts[static_cast<std::size_t>(c)];
      ++moved;
    }
    std::ostringstream msg;
    msg << "iteration " << iteration << ": state " << c << " below " << min_days << " days, re-seeded with " << moved
        << " worst-fitting days";
    events.push_back(msg.str());
    any = true;
  }
  return any;
}

struct StateFit {
  SparsePrecisionModel model;
  CliqueTree tree;
};

double sum_loglik(const SparsePrecisionModel& model, const MatrixXd& rows) {
  return gaussian_log_likelihoods(model, rows).sum();
}

}  // namespace

TreeBuilder tmfg_tree_builder(TmfgOptions options) {
  return [options](const ReturnsMatrix& days) {
    return clique_forest(build_tmfg(pearson_correlation(days.values, days.tickers), options));
  };
}

VectorXd penalized_likelihood(const std::vector<SparsePrecisionModel>& models, const Eigen::Ref<const VectorXd>& x,
                              std::optional<int> prev_state, double gamma) {
  VectorXd out(static_cast<Index>(models.size()));
  for (std::size_t c = 0; c < models.size(); ++c) {
    const double penalty = prev_state && *prev_state != static_cast<int>(c) ? gamma : 0.0;
    out[static_cast<Index>(c)] = gaussian_log_likelihood(models[c], x) - penalty;
  }
  return out;
}

std::vector<int> viterbi_assign(const MatrixXd& loglik, double gamma) {
  const Index T = loglik.rows();
  const Index K = loglik.cols();
  if (T == 0) return {};
  if (K == 0) throw ValidationError("viterbi needs at least one state");
  if (!loglik.allFinite()) throw ValidationError("viterbi needs finite log-likelihoods");
  if (gamma < 0.0) throw ValidationError("gamma must be non-negative");

  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> back(T, K);
  VectorXd score = loglik.row(0).transpose();
  VectorXd next(K);
  for (Index t = 1; t < T; ++t) {
    for (Index c = 0; c < K; ++c) {
      Index arg = 0;
      double best = score[0] - (c == 0 ? 0.0 : gamma);
      for (Index prev = 1; prev < K; ++prev) {
        const double v = score[prev] - (prev == c ? 0.0 : gamma);
        if (v > best) {
          best = v;
          arg = prev;
        }
      }
      back(t, c) = static_cast<int>(arg);
      next[c] = best + loglik(t, c);
    }
    std::swap(score, next);
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  Index state = 0;
  for (Index c = 1; c < K; ++c) {
    if (score[c] > score[state]) state = c;
  }
  for (Index t = T - 1; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = static_cast<int>(state);
    if (t > 0) state = back(t, state);
  }
  return path;
}

int count_switches(const std::vector<int>& path) {
  int n = 0;
  for (std::size_t t = 1; t < path.size(); ++t) n += path[t] != path[t - 1];
  return n;
}

double path_score(const MatrixXd& loglik, const std::vector<int>& path, double gamma) {
  double s = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) s += loglik(static_cast<Index>(t), path[t]);
  return s - gamma * count_switches(path);
}

std::vector<int> MarketStatePartition::state_days(int state) const {
  std::vector<int> days;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == state) days.push_back(static_cast<int>(t));
  }
  return days;
}

double MarketStatePartition::mean_segment_length() const {
  if (labels.empty()) return 0.0;
  return static_cast<double>(labels.size()) / static_cast<double>(count_switches(labels) + 1);
}

MarketStatePartition cluster(const ReturnsMatrix& returns, const TreeBuilder& build_tree, const IccConfig& config) {
  const int p = static_cast<int>(returns.num_assets());
  const int T = static_cast<int>(returns.num_days());
  const int K = config.states;
  if (K < 1) throw ValidationError("state count must be >= 1");
  if (config.gamma < 0.0) throw ValidationError("gamma must be non-negative");
  if (config.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  const int min_days = config.min_days > 0 ? config.min_days : std::max(5, p / 4);
  if (min_days < 5) throw ValidationError("minimum days per state must be >= 5");
  if (T < K * min_days) {
    throw ValidationError("need at least " + std::to_string(K * min_days) + " days for " + std::to_string(K) +
                          " states of " + std::to_string(min_days) + " days, got " + std::to_string(T));
  }

  MarketStatePartition part;
  part.gamma = config.gamma;
  part.states = K;
  part.seed = config.seed;

  std::vector<int> labels = initial_labels(T, config);
  {
    // Before any model exists, refill from the earliest days of the largest states.
    std::vector<double> order(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) order[static_cast<std::size_t>(t)] = -t;
    refill_small_states(labels, K, min_days, order, part.events, 0);
  }

  std::optional<CliqueTree> global_tree;
  if (config.reuse_global_network) global_tree = build_tree(returns);

  std::vector<StateFit> fits;
  MatrixXd loglik(T, K);
  bool reseeded = false;
  for (int iter = 0;; ++iter) {
    std::vector<StateFit> next_fits;
    for (int c = 0; c < K; ++c) {
      std::vector<int> days;
      for (int t = 0; t < T; ++t) {
        if (labels[static_cast<std::size_t>(t)] == c) days.push_back(t);
      }
      const ReturnsMatrix sub = returns.select_days(days);
      if (global_tree) {
        next_fits.push_back({estimate_precision(sub, *global_tree, config.logo), *global_tree});
        continue;
      }
      StateFit fresh{{}, build_tree(sub)};
      fresh.model = estimate_precision(sub, fresh.tree, config.logo);
      // The previous tree refitted on the new days never scores below the old
      // model, so keeping the better of the two keeps the objective monotone.
      if (!fits.empty()) {
        StateFit kept{estimate_precision(sub, fits[static_cast<std::size_t>(c)].tree, config.logo),
                      fits[static_cast<std::size_t>(c)].tree};
        if (sum_loglik(kept.model, sub.values) > sum_loglik(fresh.model, sub.values)) fresh = std::move(kept);
      }
      next_fits.push_back(std::move(fresh));
    }
    fits = std::move(next_fits);
    for (int c = 0; c < K; ++c) loglik.col(c) = gaussian_log_likelihoods(fits[static_cast<std::size_t>(c)].model, returns.values);

    IccIteration step;
    step.total_likelihood = path_score(loglik, labels, config.gamma);
    step.reseeded = reseeded;
    part.trace.push_back(step);
    if (iter >= config.max_iterations) break;

    std::vector<int> next = viterbi_assign(loglik, config.gamma);
    int changed = 0;
    for (int t = 0; t < T; ++t) changed += next[static_cast<std::size_t>(t)] != labels[static_cast<std::size_t>(t)];
    part.trace.back().changed_days = changed;
    if (changed == 0) {
      part.converged = true;
      break;
    }
    labels = std::move(next);
    ++part.iterations;

    std::vector<double> badness(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) badness[static_cast<std::size_t>(t)] = -loglik(t, labels[static_cast<std::size_t>(t)]);
    reseeded = refill_small_states(labels, K, min_days, badness, part.events, part.iterations);
  }

  // Order states by their mean position in time.
  std::vector<double> mean_day(static_cast<std::size_t>(K), 0.0);
  const auto counts = counts_of(labels, K);
  for (int t = 0; t < T; ++t) mean_day[static_cast<std::size_t>(labels[static_cast<std::size_t>(t)])] += t;
  for (int c = 0; c < K; ++c) {
    mean_day[static_cast<std::size_t>(c)] = counts[static_cast<std::size_t>(c)] > 0
                                                ? mean_day[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]
                                                : std::numeric_limits<double>::infinity();
  }
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mean_day[static_cast<std::size_t>(a)] < mean_day[static_cast<std::size_t>(b)];
  });
  part.relabeling.assign(static_cast<std::size_t>(K), 0);
  for (int rank = 0; rank < K; ++rank) part.relabeling[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = rank;
  part.labels.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) part.labels[static_cast<std::size_t>(t)] = part.relabeling[static_cast<std::size_t>(labels[static_cast<std::size_t>(t)])];
  for (int rank = 0; rank < K; ++rank) {
    auto& fit = fits[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])];
    fit.model.id = "state" + std::to_string(rank + 1);
    part.models.push_back(fit.model);
    part.trees.push_back(fit.tree);
  }
  part.total_likelihood = part.trace.back().total_likelihood;
  return part;
}

MultiRestartResult multi_restart_cluster(const ReturnsMatrix& returns, const TreeBuilder& build_tree,
                                         const IccConfig& config) {
  if (config.restarts < 1) throw ValidationError("restarts must be >= 1");
  MultiRestartResult out;
  for (int r = 0; r < config.restarts; ++r) {
    IccConfig run = config;
    run.seed = r == 0 ? config.seed : derive_seed(config.seed, static_cast<std::uint64_t>(r));
    MarketStatePartition part = cluster(returns, build_tree, run);
    out.restarts.push_back({run.seed, part.total_likelihood, part.iterations, part.converged});
    if (r == 0 || part.total_likelihood > out.partitions[static_cast<std::size_t>(out.best_restart)].total_likelihood) {
      out.best_restart = r;
    }
    out.partitions.push_back(std::move(part));
  }
  const auto n = static_cast<Index>(out.partitions.size());
  out.agreement = MatrixXd::Ones(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double ari = adjusted_rand_index(out.partitions[static_cast<std::size_t>(a)].labels,
                                             out.partitions[static_cast<std::size_t>(b)].labels);
      out.agreement(a, b) = ari;
      out.agreement(b, a) = ari;
    }
  }
  out.best = out.partitions[static_cast<std::size_t>(out.best_restart)];
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ValidationError("labelings differ in length");
  const int ka = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
  const int kb = b.empty() ? 0 : *std::max_element(b.begin(), b.end()) + 1;
  MatrixXd table = MatrixXd::Zero(ka, kb);
  for (std::size_t t = 0; t < a.size(); ++t) table(a[t], b[t]) += 1.0;
  const auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  double index = 0.0;
  for (Index i = 0; i < table.size(); ++i) index += pairs(table.data()[i]);
  double rows = 0.0;
  double cols = 0.0;
  for (Index i = 0; i < ka; ++i) rows += pairs(table.row(i).sum());
  for (Index j = 0; j < kb; ++j) cols += pairs(table.col(j).sum());
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? rows * cols / total : 0.0;
  const double max_index = 0.5 * (rows + cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double matched_accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
  if (labels.size() != truth.size()) throw ValidationError("labelings differ in length");
  if (labels.empty()) return 1.0;
  const int k = std::max(*std::max_element(labels.begin(), labels.end()),
                         *std::max_element(truth.begin(), truth.end())) + 1;
  if (k > 8) throw ValidationError("matched_accuracy supports at most 8 labels");
  MatrixXd table = MatrixXd::Zero(k, k);
  for (std::size_t t = 0; t < labels.size(); ++t) table(labels[t], truth[t]) += 1.0;
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double hits = 0.0;
    for (int c = 0; c < k; ++c) hits += table(c, perm[static_cast<std::size_t>(c)]);
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(labels.size());
}

std::string partition_csv(const MarketStatePartition& partition, const std::vector<Date>& dates) {
  if (dates.size() != partition.labels.size()) throw ValidationError("partition and date lengths differ");
  std::ostringstream out;
  out << "date,state\n";
  for (std::size_t t = 0; t < dates.size(); ++t) out << format_date(dates[t]) << ',' << partition.labels[t] + 1 << '\n';
  return out.str();
}

}  // namespace fstress
