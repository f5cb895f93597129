#include "fstress/tmfg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fstress/error.hpp"
#include "text_util.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

Triangle sorted(int a, int b, int c) {
  Triangle t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

MatrixXd gain_weights(const SimilarityMatrix& sim, GainKind kind) {
  return sim.values().unaryExpr([kind](double s) { return gain_weight(s, kind); });
}

struct FaceState {
  Triangle face;
  bool alive = true;
  int best_node = -1;
  double best_gain = 0.0;
};

struct GreedyResult {
  std::vector<Insertion> insertions;
  double retained = 0.0;
};

// Vertex insertions from a seed tetrahedron with the documented tie rule.
GreedyResult grow_from_seed(const MatrixXd& w, const Tetrahedron& seed) {
  const int p = static_cast<int>(w.rows());
  std::vector<char> placed(static_cast<std::size_t>(p), 0);
  for (int v : seed) placed[static_cast<std::size_t>(v)] = 1;

  GreedyResult result;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) result.retained += w(seed[a], seed[b]);
  }

  const auto refresh = [&](FaceState& f) {
    f.best_node = -1;
    f.best_gain = 0.0;
    for (int v = 0; v < p; ++v) {
      if (placed[static_cast<std::size_t>(v)]) continue;
      const double g = w(v, f.face[0]) + w(v, f.face[1]) + w(v, f.face[2]);
      if (f.best_node < 0 || g > f.best_gain) {
        f.best_node = v;
        f.best_gain = g;
      }
    }
  };

  std::vector<FaceState> faces;
  faces.reserve(static_cast<std::size_t>(3 * p));
  for (int skip = 0; skip < 4; ++skip) {
    Triangle t{};
    int k = 0;
    for (int a = 0; a < 4; ++a) {
      if (a != skip) t[static_cast<std::size_t>(k++)] = seed[a];
    }
    faces.push_back({t});
  }
  std::sort(faces.begin(), faces.end(), [](const FaceState& a, const FaceState& b) { return a.face < b.face; });
  for (auto& f : faces) refresh(f);

  for (int step = 4; step < p; ++step) {
    FaceState* chosen = nullptr;
    for (auto& f : faces) {
      if (!f.alive || f.best_node < 0) continue;
      if (chosen == nullptr || f.best_gain > chosen->best_gain ||
          (f.best_gain == chosen->best_gain &&
           (f.best_node < chosen->best_node || (f.best_node == chosen->best_node && f.face < chosen->face)))) {
        chosen = &f;
      }
    }
    const int v = chosen->best_node;
    const Triangle host = chosen->face;
    result.insertions.push_back({v, host});
    result.retained += chosen->best_gain;
    chosen->alive = false;
    placed[static_cast<std::size_t>(v)] = 1;

    for (auto& f : faces) {
      if (f.alive && f.best_node == v) refresh(f);
    }
    for (const Triangle& t : {sorted(v, host[0], host[1]), sorted(v, host[0], host[2]), sorted(v, host[1], host[2])}) {
      faces.push_back({t});
      refresh(faces.back());
    }
  }
  return result;
}

}  // namespace

SimilarityMatrix::SimilarityMatrix(MatrixXd values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  const Index p = values_.rows();
  if (values_.cols() != p) throw ValidationError("similarity matrix must be square");
  if (!labels_.empty() && static_cast<Index>(labels_.size()) != p) {
    throw ValidationError("similarity labels do not match the matrix size");
  }
  for (Index i = 0; i < p; ++i) {
    if (values_(i, i) != 1.0) throw ValidationError("similarity diagonal must be exactly 1");
    for (Index j = 0; j < p; ++j) {
      const double v = values_(i, j);
      if (!std::isfinite(v) || v < -1.0 || v > 1.0) throw ValidationError("similarity entries must lie in [-1, 1]");
      if (std::abs(v - values_(j, i)) > 1e-12) throw ValidationError("similarity matrix is not symmetric");
    }
  }
}

SimilarityMatrix pearson_correlation(const MatrixXd& values, std::vector<std::string> labels) {
  if (values.rows() < 2) throw ValidationError("correlation needs at least two observations");
  if (!values.allFinite()) throw DataError("non-finite value in return matrix");
  const MatrixXd centered = values.rowwise() - values.colwise().mean();
  const Eigen::VectorXd norms = centered.colwise().norm().transpose();
  for (Index j = 0; j < norms.size(); ++j) {
    if (!(norms[j] > 0.0)) {
      throw DataError("zero-variance column " + (labels.empty() ? std::to_string(j) : labels[j]) +
                      " in correlation input");
    }
  }
  MatrixXd corr = centered.transpose() * centered;
  corr = corr.array().colwise() / norms.array();
  corr = corr.array().rowwise() / norms.transpose().array();
  corr = (0.5 * (corr + corr.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
  corr.diagonal().setOnes();
  return SimilarityMatrix(std::move(corr), std::move(labels));
}

SimilarityMatrix correlation_matrix(const ReturnsMatrix& returns) {
  if (!returns.standardized) throw ValidationError("correlation_matrix expects standardized returns");
  return pearson_correlation(returns.values, returns.tickers);
}

std::string_view to_string(GainKind kind) {
  switch (kind) {
    case GainKind::raw: return "raw";
    case GainKind::absolute: return "absolute";
    case GainKind::squared: return "squared";
  }
  return "squared";
}

GainKind parse_gain_kind(std::string_view text) {
  if (text == "raw") return GainKind::raw;
  if (text == "absolute") return GainKind::absolute;
  if (text == "squared") return GainKind::squared;
  throw ValidationError("unknown gain kind '" + std::string(text) + "' (raw|absolute|squared)");
}

double gain_weight(double similarity, GainKind kind) {
  switch (kind) {
    case GainKind::raw: return similarity;
    case GainKind::absolute: return std::abs(similarity);
    case GainKind::squared: return similarity * similarity;
  }
  return similarity;
}

std::vector<std::vector<int>> FilteringNetwork::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(p));
  for (const auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

bool FilteringNetwork::has_edge(int i, int j) const {
  return std::binary_search(edges.begin(), edges.end(), make_edge(i, j));
}

std::vector<int> FilteringNetwork::insertion_order() const {
  std::vector<int> order(seed.begin(), seed.end());
  for (const auto& ins : insertions) order.push_back(ins.node);
  return order;
}

std::vector<Tetrahedron> top_tetrahedra(const MatrixXd& w, int count) {
  const int p = static_cast<int>(w.rows());
  if (p < 4) throw ValidationError("need at least 4 nodes for a tetrahedron");
  if (count < 1) throw ValidationError("tetrahedron count must be positive");
  std::vector<std::pair<double, Tetrahedron>> best;  // decreasing weight
  const auto cap = static_cast<std::size_t>(count);
  double threshold = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p; ++i) {
    const double* wi = w.col(i).data();
    for (int j = i + 1; j < p; ++j) {
      const double* wj = w.col(j).data();
      const double wij = wi[j];
      for (int k = j + 1; k < p; ++k) {
        const double* wk = w.col(k).data();
        const double base = wij + wi[k] + wj[k];
        for (int l = k + 1; l < p; ++l) {
          const double total = base + wi[l] + wj[l] + wk[l];
          if (best.size() == cap && !(total > threshold)) continue;
          // Enumeration is lexicographic, so ties keep the earlier tetrahedron first.
          auto pos = std::find_if(best.begin(), best.end(), [total](const auto& e) { return total > e.first; });
          best.insert(pos, {total, Tetrahedron{i, j, k, l}});
          if (best.size() > cap) best.pop_back();
          if (best.size() == cap) threshold = best.back().first;
        }
      }
    }
  }
  std::vector<Tetrahedron> out;
  for (const auto& e : best) out.push_back(e.second);
  return out;
}

FilteringNetwork replay_tmfg(int p, const Tetrahedron& seed, const std::vector<Insertion>& insertions,
                             const MatrixXd& weights, GainKind gain, std::vector<std::string> labels) {
  if (p < 4) throw ValidationError("TMFG needs p >= 4");
  if (static_cast<int>(insertions.size()) != p - 4) throw ValidationError("insertion record must have p - 4 entries");
  FilteringNetwork net;
  net.p = p;
  net.labels = std::move(labels);
  net.gain = gain;
  net.seed = seed;
  std::sort(net.seed.begin(), net.seed.end());
  net.insertions = insertions;

  std::vector<char> placed(static_cast<std::size_t>(p), 0);
  std::vector<Triangle> faces;
  for (int v : net.seed) {
    if (v < 0 || v >= p || placed[static_cast<std::size_t>(v)]) throw ValidationError("malformed TMFG seed");
    placed[static_cast<std::size_t>(v)] = 1;
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) net.edges.push_back({net.seed[a], net.seed[b]});
    for (int b = a + 1; b < 4; ++b) {
      for (int c = b + 1; c < 4; ++c) faces.push_back({net.seed[a], net.seed[b], net.seed[c]});
    }
  }
  for (const auto& ins : insertions) {
    const int v = ins.node;
    if (v < 0 || v >= p || placed[static_cast<std::size_t>(v)]) {
      throw ValidationError("malformed insertion record: node " + std::to_string(v));
    }
    const Triangle host = sorted(ins.face[0], ins.face[1], ins.face[2]);
    const auto it = std::find(faces.begin(), faces.end(), host);
    if (it == faces.end()) {
      throw ValidationError("malformed insertion record: face (" + std::to_string(host[0]) + "," +
                            std::to_string(host[1]) + "," + std::to_string(host[2]) + ") is not available");
    }
    faces.erase(it);
    placed[static_cast<std::size_t>(v)] = 1;
    for (int u : host) net.edges.push_back(make_edge(v, u));
    faces.push_back(sorted(v, host[0], host[1]));
    faces.push_back(sorted(v, host[0], host[2]));
    faces.push_back(sorted(v, host[1], host[2]));
  }
  std::sort(net.edges.begin(), net.edges.end());
  for (const auto& [a, b] : net.edges) {
    const double wv = weights.size() > 0 ? weights(a, b) : 0.0;
    net.edge_weights.push_back(wv);
    net.retained_weight += wv;
  }
  return net;
}

FilteringNetwork build_tmfg(const SimilarityMatrix& sim, const TmfgOptions& options) {
  const int p = static_cast<int>(sim.size());
  if (p < 4) throw ValidationError("TMFG needs p >= 4, got " + std::to_string(p));
  if (options.seed_candidates < 1) throw ValidationError("seed_candidates must be >= 1");
  const MatrixXd w = gain_weights(sim, options.gain);

  const auto seeds = top_tetrahedra(w, options.seed_candidates);
  std::size_t winner = 0;
  GreedyResult best;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    GreedyResult candidate = grow_from_seed(w, seeds[s]);
    if (s == 0 || candidate.retained > best.retained) {
      best = std::move(candidate);
      winner = s;
    }
  }
  return replay_tmfg(p, seeds[winner], best.insertions, w, options.gain, sim.labels());
}

CliqueTree clique_forest(const FilteringNetwork& net) {
  if (net.p < 4 || static_cast<int>(net.insertions.size()) != net.p - 4) {
    throw ValidationError("malformed network: insertion record must have p - 4 entries");
  }
  CliqueTree tree;
  tree.p = net.p;
  Tetrahedron seed = net.seed;
  std::sort(seed.begin(), seed.end());
  tree.cliques.push_back(seed);

  std::map<Triangle, int> owner;
  for (int skip = 0; skip < 4; ++skip) {
    Triangle t{};
    int k = 0;
    for (int a = 0; a < 4; ++a) {
      if (a != skip) t[static_cast<std::size_t>(k++)] = seed[a];
    }
    owner.emplace(t, 0);
  }
  std::vector<char> placed(static_cast<std::size_t>(net.p), 0);
  for (int v : seed) placed[static_cast<std::size_t>(v)] = 1;

  for (const auto& ins : net.insertions) {
    const int v = ins.node;
    const Triangle host = sorted(ins.face[0], ins.face[1], ins.face[2]);
    const auto it = owner.find(host);
    if (v < 0 || v >= net.p || placed[static_cast<std::size_t>(v)] || it == owner.end()) {
      throw ValidationError("malformed insertion record for node " + std::to_string(v));
    }
    placed[static_cast<std::size_t>(v)] = 1;
    const int parent = it->second;
    owner.erase(it);
    const int clique = static_cast<int>(tree.cliques.size());
    Tetrahedron c{v, host[0], host[1], host[2]};
    std::sort(c.begin(), c.end());
    tree.cliques.push_back(c);
    tree.separators.push_back(host);
    tree.tree.push_back({parent, clique, static_cast<int>(tree.separators.size()) - 1});
    owner.emplace(sorted(v, host[0], host[1]), clique);
    owner.emplace(sorted(v, host[0], host[2]), clique);
    owner.emplace(sorted(v, host[1], host[2]), clique);
  }
  return tree;
}

std::string_view to_string(CentralityKind kind) {
  switch (kind) {
    case CentralityKind::degree: return "degree";
    case CentralityKind::eigenvector: return "eigenvector";
    case CentralityKind::betweenness: return "betweenness";
  }
  return "eigenvector";
}

CentralityKind parse_centrality_kind(std::string_view text) {
  if (text == "degree") return CentralityKind::degree;
  if (text == "eigenvector") return CentralityKind::eigenvector;
  if (text == "betweenness") return CentralityKind::betweenness;
  throw ValidationError("unknown centrality kind '" + std::string(text) + "' (degree|eigenvector|betweenness)");
}

CentralityVector centrality(const FilteringNetwork& net, CentralityKind kind) {
  const auto adj = net.adjacency();
  const auto p = static_cast<std::size_t>(net.p);
  CentralityVector out{kind, std::vector<double>(p, 0.0)};
  switch (kind) {
    case CentralityKind::degree:
      for (std::size_t i = 0; i < p; ++i) out.scores[i] = static_cast<double>(adj[i].size());
      break;
    case CentralityKind::eigenvector: {
      // (A + I) shares A's principal eigenvector and has a strictly dominant eigenvalue.
      std::vector<double> x(p, 1.0);
      std::vector<double> y(p);
      bool converged = false;
      for (int iter = 0; iter < 10000 && !converged; ++iter) {
        double peak = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          double s = x[i];
          for (int j : adj[i]) s += x[static_cast<std::size_t>(j)];
          y[i] = s;
          peak = std::max(peak, s);
        }
        double change = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          y[i] /= peak;
          change = std::max(change, std::abs(y[i] - x[i]));
        }
        std::swap(x, y);
        converged = change < 1e-10;
      }
      if (!converged) throw NumericalError("eigenvector centrality did not converge in 10000 iterations");
      out.scores = x;
      break;
    }
    case CentralityKind::betweenness: {
      // Brandes accumulation over BFS trees.
      std::vector<double> sigma(p);
      std::vector<double> delta(p);
      std::vector<int> dist(p);
      std::vector<std::vector<int>> preds(p);
      std::vector<int> stack;
      for (std::size_t s = 0; s < p; ++s) {
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        std::fill(dist.begin(), dist.end(), -1);
        for (auto& pr : preds) pr.clear();
        stack.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        std::deque<int> queue{static_cast<int>(s)};
        while (!queue.empty()) {
          const int v = queue.front();
          queue.pop_front();
          stack.push_back(v);
          for (int u : adj[static_cast<std::size_t>(v)]) {
            const auto uu = static_cast<std::size_t>(u);
            if (dist[uu] < 0) {
              dist[uu] = dist[static_cast<std::size_t>(v)] + 1;
              queue.push_back(u);
            }
            if (dist[uu] == dist[static_cast<std::size_t>(v)] + 1) {
              sigma[uu] += sigma[static_cast<std::size_t>(v)];
              preds[uu].push_back(v);
            }
          }
        }
        while (!stack.empty()) {
          const auto w = static_cast<std::size_t>(stack.back());
          stack.pop_back();
          for (int v : preds[w]) {
            const auto vv = static_cast<std::size_t>(v);
            delta[vv] += sigma[vv] / sigma[w] * (1.0 + delta[w]);
          }
          if (w != s) out.scores[w] += delta[w];
        }
      }
      for (auto& v : out.scores) v *= 0.5;
      break;
    }
  }
  return out;
}

SectorLinkStats sector_link_stats(const FilteringNetwork& net, const SectorMap& sectors,
                                  const CentralityVector& cent) {
  if (static_cast<int>(cent.scores.size()) != net.p) throw ValidationError("centrality length does not match network");
  std::vector<std::string> node_sector(static_cast<std::size_t>(net.p));
  for (int i = 0; i < net.p; ++i) {
    if (!net.labels.empty()) {
      node_sector[static_cast<std::size_t>(i)] = sectors.label_of(net.labels[static_cast<std::size_t>(i)]);
    } else {
      if (static_cast<int>(sectors.labels.size()) != net.p) throw ValidationError("sector map does not cover the network");
      node_sector[static_cast<std::size_t>(i)] = sectors.labels[static_cast<std::size_t>(i)];
    }
  }
  std::map<std::string, SectorLinkRow> rows;
  for (const auto& [label, count] : sectors.counts) rows[label].sector = label;
  for (int i = 0; i < net.p; ++i) rows[node_sector[static_cast<std::size_t>(i)]].members.push_back(i);
  for (const auto& [a, b] : net.edges) {
    const auto& sa = node_sector[static_cast<std::size_t>(a)];
    const auto& sb = node_sector[static_cast<std::size_t>(b)];
    if (sa == sb) {
      ++rows[sa].internal_links;
      ++rows[sa].incident_links;
    } else {
      ++rows[sa].incident_links;
      ++rows[sb].incident_links;
    }
  }
  SectorLinkStats out;
  out.centrality_kind = cent.kind;
  for (auto& [label, row] : rows) {
    row.sector = label;
    if (row.members.empty()) {
      out.warnings.push_back("sector '" + label + "' has no nodes in the network; excluded");
      continue;
    }
    row.size = static_cast<int>(row.members.size());
    row.internal_fraction = row.incident_links > 0
                                ? static_cast<double>(row.internal_links) / row.incident_links
                                : 0.0;
    double sum = 0.0;
    for (int m : row.members) sum += cent.scores[static_cast<std::size_t>(m)];
    row.mean_centrality = sum / row.size;
    row.log_mean_centrality = std::log(row.mean_centrality);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string edge_list_csv(const FilteringNetwork& net) {
  std::ostringstream out;
  out << "node_i,node_j,weight\n";
  const auto name = [&](int i) {
    return net.labels.empty() ? std::to_string(i) : net.labels[static_cast<std::size_t>(i)];
  };
  for (std::size_t k = 0; k < net.edges.size(); ++k) {
    out << name(net.edges[k].first) << ',' << name(net.edges[k].second) << ','
        << detail::format_double(net.edge_weights[k]) << '\n';
  }
  return out.str();
}

std::string clique_tree_json(const CliqueTree& tree) {
  nlohmann::json j;
  j["cliques"] = tree.cliques;
  j["separators"] = tree.separators;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : tree.tree) edges.push_back({e.clique_a, e.clique_b, e.separator});
  j["tree"] = edges;
  return j.dump();
}

}  // namespace fstress
