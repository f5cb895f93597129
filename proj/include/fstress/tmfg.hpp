#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fstress/data_ingest.hpp"

namespace fstress {

/// Symmetric p x p similarity (Pearson correlation) with unit diagonal.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  /// Validates symmetry (1e-12), unit diagonal and the [-1, 1] range.
  explicit SimilarityMatrix(Eigen::MatrixXd values, std::vector<std::string> labels = {});

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Eigen::Index size() const { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> labels_;
};

/// Sample Pearson correlation of the columns. Requires standardized returns.
SimilarityMatrix correlation_matrix(const ReturnsMatrix& returns);

/// Pearson correlation of raw columns, standardized or not.
SimilarityMatrix pearson_correlation(const Eigen::MatrixXd& values, std::vector<std::string> labels = {});

enum class GainKind { raw, absolute, squared };

std::string_view to_string(GainKind kind);
GainKind parse_gain_kind(std::string_view text);

using Triangle = std::array<int, 3>;     // sorted ascending
using Tetrahedron = std::array<int, 4>;  // sorted ascending
using Edge = std::pair<int, int>;        // first < second

/// One T2 move: `node` joined to the three vertices of `face`.
struct Insertion {
  int node = 0;
  Triangle face{};
};

struct TmfgOptions {
  GainKind gain = GainKind::squared;
  // Number of highest-weight seed tetrahedra completed; the construction with
  // the largest retained weight wins. 1 gives the single-seed construction.
  int seed_candidates = 5;
};

/// Triangulated Maximally Filtered Graph: a maximal planar chordal graph
/// with 3p - 6 edges grown from a seed tetrahedron by vertex insertions.
struct FilteringNetwork {
  int p = 0;
  std::vector<std::string> labels;
  GainKind gain = GainKind::squared;
  Tetrahedron seed{};
  std::vector<Insertion> insertions;  // in insertion order, p - 4 entries
  std::vector<Edge> edges;            // sorted
  std::vector<double> edge_weights;   // gain weight per edge, aligned with `edges`
  double retained_weight = 0.0;

  std::vector<std::vector<int>> adjacency() const;
  bool has_edge(int i, int j) const;
  /// Seed nodes followed by inserted nodes. Its reverse is a perfect elimination ordering.
  std::vector<int> insertion_order() const;
};

/// Elementwise gain weight applied to a similarity value.
double gain_weight(double similarity, GainKind kind);

/// Builds the TMFG. Among equal gains the lowest node index wins, then the
/// lexicographically smallest face.
FilteringNetwork build_tmfg(const SimilarityMatrix& sim, const TmfgOptions& options = {});

/// Maximum-weight tetrahedra of a symmetric weight matrix in decreasing order
/// of total weight (ties: lexicographically smallest).
std::vector<Tetrahedron> top_tetrahedra(const Eigen::MatrixXd& weights, int count);

/// Rebuilds the network from an explicit seed and insertion record and checks
/// that every host face exists when used.
FilteringNetwork replay_tmfg(int p, const Tetrahedron& seed, const std::vector<Insertion>& insertions,
                             const Eigen::MatrixXd& weights, GainKind gain = GainKind::squared,
                             std::vector<std::string> labels = {});

struct CliqueTreeEdge {
  int clique_a = 0;
  int clique_b = 0;
  int separator = 0;
};

/// Clique forest of a TMFG: p - 3 tetrahedra joined by p - 4 triangles.
struct CliqueTree {
  int p = 0;
  std::vector<Tetrahedron> cliques;
  std::vector<Triangle> separators;
  std::vector<CliqueTreeEdge> tree;  // tree[k] joins via separators[tree[k].separator]
};

CliqueTree clique_forest(const FilteringNetwork& net);

enum class CentralityKind { degree, eigenvector, betweenness };

std::string_view to_string(CentralityKind kind);
CentralityKind parse_centrality_kind(std::string_view text);

struct CentralityVector {
  CentralityKind kind = CentralityKind::eigenvector;
  std::vector<double> scores;
};

/// Degree, eigenvector (power iteration on A + I, max-normalized) or exact
/// unweighted betweenness (Brandes; each unordered pair counted once).
CentralityVector centrality(const FilteringNetwork& net, CentralityKind kind);

struct SectorLinkRow {
  std::string sector;
  int size = 0;
  std::vector<int> members;
  int internal_links = 0;
  int incident_links = 0;
  double internal_fraction = 0.0;
  double mean_centrality = 0.0;
  double log_mean_centrality = 0.0;
};

struct SectorLinkStats {
  CentralityKind centrality_kind = CentralityKind::eigenvector;
  std::vector<SectorLinkRow> rows;    // sorted by sector label
  std::vector<std::string> warnings;  // excluded sectors
};

SectorLinkStats sector_link_stats(const FilteringNetwork& net, const SectorMap& sectors,
                                  const CentralityVector& cent);

// Exports ---------------------------------------------------------------------

/// `node_i,node_j,weight` with node labels (indices when unlabeled).
std::string edge_list_csv(const FilteringNetwork& net);
/// {cliques:[[4 ids]], separators:[[3 ids]], tree:[[ci,cj,sep_idx]]}
std::string clique_tree_json(const CliqueTree& tree);

}  // namespace fstress
