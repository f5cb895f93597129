// Graph-theoretic checkers built from first principles (plus Boost's planarity test).
#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boyer_myrvold_planar_test.hpp>
#include <Eigen/Dense>

namespace oracle {

using EdgeList = std::vector<std::pair<int, int>>;

inline bool is_planar(int p, const EdgeList& edges) {
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS>;
  Graph g(static_cast<std::size_t>(p));
  for (const auto& [a, b] : edges) boost::add_edge(static_cast<std::size_t>(a), static_cast<std::size_t>(b), g);
  return boost::boyer_myrvold_planarity_test(g);
}

inline std::vector<std::set<int>> neighbour_sets(int p, const EdgeList& edges) {
  std::vector<std::set<int>> adj(static_cast<std::size_t>(p));
  for (const auto& [a, b] : edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  return adj;
}

// Maximum cardinality search, then verify the reverse order is a perfect elimination ordering.
inline bool is_chordal(int p, const EdgeList& edges) {
  const auto adj = neighbour_sets(p, edges);
  std::vector<int> weight(p, 0);
  std::vector<bool> done(p, false);
  std::vector<int> order;
  for (int step = 0; step < p; ++step) {
    int pick = -1;
    for (int v = 0; v < p; ++v) {
      if (!done[v] && (pick < 0 || weight[v] > weight[pick])) pick = v;
    }
    done[pick] = true;
    order.push_back(pick);
    for (int u : adj[pick]) {
      if (!done[u]) ++weight[u];
    }
  }
  // In MCS order, the earlier neighbours of every vertex must form a clique.
  std::vector<int> pos(p);
  for (int i = 0; i < p; ++i) pos[order[i]] = i;
  for (int v = 0; v < p; ++v) {
    std::vector<int> earlier;
    for (int u : adj[v]) {
      if (pos[u] < pos[v]) earlier.push_back(u);
    }
    for (std::size_t a = 0; a < earlier.size(); ++a) {
      for (std::size_t b = a + 1; b < earlier.size(); ++b) {
        if (!adj[earlier[a]].count(earlier[b])) return false;
      }
    }
  }
  return true;
}

inline bool is_clique(const std::vector<std::set<int>>& adj, const std::vector<int>& nodes) {
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      if (!adj[nodes[a]].count(nodes[b])) return false;
    }
  }
  return true;
}

// For every node, the cliques containing it are connected in the tree.
template <class Cliques>
bool running_intersection(int p, const Cliques& cliques, const std::vector<std::pair<int, int>>& tree_edges) {
  const int m = static_cast<int>(cliques.size());
  for (int v = 0; v < p; ++v) {
    std::vector<int> holding;
    for (int c = 0; c < m; ++c) {
      if (std::find(cliques[c].begin(), cliques[c].end(), v) != cliques[c].end()) holding.push_back(c);
    }
    if (holding.empty()) continue;
    std::set<int> reached{holding[0]};
    std::vector<int> stack{holding[0]};
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      for (const auto& [a, b] : tree_edges) {
        const int other = a == c ? b : (b == c ? a : -1);
        if (other < 0 || reached.count(other)) continue;
        if (std::find(holding.begin(), holding.end(), other) == holding.end()) continue;
        reached.insert(other);
        stack.push_back(other);
      }
    }
    if (reached.size() != holding.size()) return false;
  }
  return true;
}

inline bool is_tree(int nodes, const std::vector<std::pair<int, int>>& edges) {
  if (static_cast<int>(edges.size()) != nodes - 1) return false;
  std::vector<int> parent(nodes);
  for (int i = 0; i < nodes; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& [a, b] : edges) {
    const int ra = find(a);
    const int rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

// Betweenness by enumerating every shortest path of every unordered pair.
inline std::vector<double> brute_force_betweenness(int p, const EdgeList& edges) {
  const auto adj = neighbour_sets(p, edges);
  std::vector<std::vector<int>> dist(p, std::vector<int>(p, -1));
  for (int s = 0; s < p; ++s) {
    std::vector<int> frontier{s};
    dist[s][s] = 0;
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int v : frontier) {
        for (int u : adj[v]) {
          if (dist[s][u] < 0) {
            dist[s][u] = dist[s][v] + 1;
            next.push_back(u);
          }
        }
      }
      frontier = next;
    }
  }
  std::vector<double> score(p, 0.0);
  for (int s = 0; s < p; ++s) {
    for (int t = s + 1; t < p; ++t) {
      if (dist[s][t] < 0) continue;
      std::vector<std::vector<int>> paths;
      std::vector<int> path{s};
      std::function<void(int)> walk = [&](int v) {
        if (v == t) {
          paths.push_back(path);
          return;
        }
        for (int u : adj[v]) {
          if (dist[s][u] == dist[s][v] + 1 && dist[u][t] == dist[v][t] - 1) {
            path.push_back(u);
            walk(u);
            path.pop_back();
          }
        }
      };
      walk(s);
      for (const auto& pa : paths) {
        for (std::size_t k = 1; k + 1 < pa.size(); ++k) score[pa[k]] += 1.0 / static_cast<double>(paths.size());
      }
    }
  }
  return score;
}

// Heaviest planar graph on 5 nodes with 9 edges, by trying every 9-edge subset.
inline double best_planar_weight_p5(const Eigen::MatrixXd& w, EdgeList* best_edges = nullptr) {
  EdgeList all;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) all.emplace_back(i, j);
  }
  double best = -1e300;
  for (std::size_t drop = 0; drop < all.size(); ++drop) {
    EdgeList e;
    double total = 0.0;
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (k == drop) continue;
      e.push_back(all[k]);
      total += w(all[k].first, all[k].second);
    }
    if (is_planar(5, e) && total > best) {
      best = total;
      if (best_edges) *best_edges = e;
    }
  }
  return best;
}

}  // namespace oracle
