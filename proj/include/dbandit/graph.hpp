#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dbandit/types.hpp"

namespace dbandit {

// Undirected, connected communication graph over agents 1..N (stored 0-based).
struct CommGraph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;  // (i, j) with i < j, 0-based

  std::vector<int> degrees() const;
  std::vector<std::vector<int>> adjacency() const;
  bool is_connected() const;  // breadth-first reachability from vertex 0
  void validate() const;      // throws Errc::bad_params on any invariant breach
};

enum class TopologyKind { ring, path, grid, complete, star, random_regular, erdos_renyi };

TopologyKind topology_kind_from_string(const std::string& name);
const char* to_string(TopologyKind kind);

struct TopologyParams {
  int grid_rows = 0;
  int grid_cols = 0;
  int degree = 0;        // random_regular
  double edge_prob = 0;  // erdos_renyi
  int max_retries = 1000;
};

CommGraph build_topology(TopologyKind kind, int n_agents, const TopologyParams& params = {},
                         std::uint64_t seed = 0);

// Symmetric doubly stochastic weights supported on the graph.
struct GossipMatrix {
  MatrixXd weights;
  CommGraph source_graph;

  int n() const { return static_cast<int>(weights.rows()); }
  void validate(double tol = 1e-12) const;
};

// W(i,j) = 1/(1 + max(deg i, deg j)) on edges, diagonal absorbs the remainder.
GossipMatrix metropolis_weights(const CommGraph& g);

// W = I - gamma * L / d_max: uniform weight gamma/d_max on every edge,
// diagonal 1 - gamma*deg(i)/d_max. Doubly stochastic for gamma in (0,1].
GossipMatrix lazy_walk_weights(const CommGraph& g, double gamma = 0.5);

struct SpectralProfile {
  double sigma2 = 0;  // second-largest singular value of W
  double rho = 1;     // 1 - sigma2
  double solver_tolerance = 1e-10;
};

SpectralProfile spectral_gap(const GossipMatrix& w);

// Edge-list text format: first line "N", then one "i j" line per edge, 1-based.
CommGraph read_edge_list(std::istream& in);
void write_edge_list(const CommGraph& g, std::ostream& out);
CommGraph load_edge_list(const std::string& path);
void save_edge_list(const CommGraph& g, const std::string& path);

void write_matrix_csv(const MatrixXd& m, std::ostream& out);
void save_matrix_csv(const MatrixXd& m, const std::string& path);

}  // namespace dbandit
