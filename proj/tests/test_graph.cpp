#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dbandit/graph.hpp"
#include "dbandit/rng.hpp"

using namespace dbandit;

namespace {

// Test-local reachability, independent of CommGraph::is_connected.
bool reachable_all(const CommGraph& g) {
  std::vector<std::vector<int>> adj(g.n_agents);
  for (auto [i, j] : g.edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(g.n_agents, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        stack.push_back(u);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

}  // namespace

TEST_CASE("complete graph on 4 vertices") {
  const CommGraph g = build_topology(TopologyKind::complete, 4);
  CHECK(g.edges.size() == 6);
  std::set<std::pair<int, int>> edges(g.edges.begin(), g.edges.end());
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) CHECK(edges.count({i, j}) == 1);
}

TEST_CASE("ring on 5 vertices") {
  const CommGraph g = build_topology(TopologyKind::ring, 5);
  CHECK(g.edges.size() == 5);
  for (int d : g.degrees()) CHECK(d == 2);
}

TEST_CASE("path, star, grid shapes") {
  CHECK(build_topology(TopologyKind::path, 6).edges.size() == 5);
  const CommGraph star = build_topology(TopologyKind::star, 7);
  CHECK(star.edges.size() == 6);
  CHECK(star.degrees()[0] == 6);
  TopologyParams params;
  params.grid_rows = 4;
  params.grid_cols = 4;
  const CommGraph grid = build_topology(TopologyKind::grid, 16, params);
  CHECK(grid.edges.size() == 24);  // 2 * 4 * 3
  CHECK(reachable_all(grid));
}

TEST_CASE("bad parameters") {
  TopologyParams params;
  params.grid_rows = 3;
  params.grid_cols = 3;
  CHECK_THROWS_AS(build_topology(TopologyKind::grid, 8, params), Error);
  params.degree = 3;
  CHECK_THROWS_AS(build_topology(TopologyKind::random_regular, 5, params), Error);  // parity
  CHECK_THROWS_AS(build_topology(TopologyKind::ring, 2), Error);
  CHECK_THROWS_AS(build_topology(TopologyKind::path, 1), Error);
}

TEST_CASE("erdos-renyi is deterministic and connected") {
  TopologyParams params;
  params.edge_prob = 0.25;
  const CommGraph a = build_topology(TopologyKind::erdos_renyi, 20, params, 7);
  const CommGraph b = build_topology(TopologyKind::erdos_renyi, 20, params, 7);
  CHECK(a.edges == b.edges);
  CHECK(reachable_all(a));
}

TEST_CASE("erdos-renyi below the connectivity threshold fails deterministically") {
  // At N=20, p=0.05 the expected degree is 0.95, so connected samples are
  // vanishingly rare; the bounded retry budget must surface that as an error
  // rather than bias the distribution, and do so reproducibly.
  TopologyParams params;
  params.edge_prob = 0.05;
  CHECK_THROWS_AS(build_topology(TopologyKind::erdos_renyi, 20, params, 7), Error);
  CHECK_THROWS_AS(build_topology(TopologyKind::erdos_renyi, 20, params, 7), Error);
}

TEST_CASE("erdos-renyi retry budget exhausts") {
  TopologyParams params;
  params.edge_prob = 1e-6;
  params.max_retries = 3;
  CHECK_THROWS_AS(build_topology(TopologyKind::erdos_renyi, 30, params, 1), Error);
}

TEST_CASE("random regular graph") {
  TopologyParams params;
  params.degree = 4;
  const CommGraph g = build_topology(TopologyKind::random_regular, 12, params, 3);
  for (int d : g.degrees()) CHECK(d == 4);
  CHECK(reachable_all(g));
}

TEST_CASE("metropolis weights on the 3-path") {
  const GossipMatrix w = metropolis_weights(build_topology(TopologyKind::path, 3));
  // Degrees (1,2,1): edge weights 1/3, endpoints keep 2/3.
  CHECK(w.weights(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(w.weights(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(w.weights(0, 2) == 0.0);
  CHECK(w.weights(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(spectral_gap(w).sigma2 == doctest::Approx(2.0 / 3).epsilon(1e-10));
}

TEST_CASE("metropolis on complete and ring graphs") {
  const GossipMatrix complete = metropolis_weights(build_topology(TopologyKind::complete, 4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(complete.weights(i, j) == doctest::Approx(0.25));
  const SpectralProfile sp = spectral_gap(complete);
  CHECK(sp.sigma2 == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sp.rho == doctest::Approx(1.0));

  const GossipMatrix ring = metropolis_weights(build_topology(TopologyKind::ring, 4));
  // Circulant eigenvalues (1/3)(1 + 2 cos(2 pi k / 4)): second largest magnitude 1/3.
  CHECK(ring.weights(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(spectral_gap(ring).sigma2 == doctest::Approx(1.0 / 3).epsilon(1e-10));
}

TEST_CASE("gossip matrix invariants hold across builders") {
  TopologyParams er;
  er.edge_prob = 0.3;
  const CommGraph graphs[] = {build_topology(TopologyKind::ring, 8),
                              build_topology(TopologyKind::star, 6),
                              build_topology(TopologyKind::erdos_renyi, 12, er, 11)};
  for (const CommGraph& g : graphs) {
    CHECK_NOTHROW(metropolis_weights(g).validate());
    CHECK_NOTHROW(lazy_walk_weights(g, 0.5).validate());
    CHECK_NOTHROW(lazy_walk_weights(g, 1.0).validate());
  }
}

TEST_CASE("spectral gap is invariant under vertex relabeling") {
  TopologyParams er;
  er.edge_prob = 0.4;
  const CommGraph g = build_topology(TopologyKind::erdos_renyi, 10, er, 5);
  const double sigma2 = spectral_gap(metropolis_weights(g)).sigma2;
  Rng rng({99});
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> perm(g.n_agents);
    for (int i = 0; i < g.n_agents; ++i) perm[i] = i;
    for (int i = g.n_agents - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
    CommGraph relabeled;
    relabeled.n_agents = g.n_agents;
    for (auto [i, j] : g.edges)
      relabeled.edges.emplace_back(std::min(perm[i], perm[j]), std::max(perm[i], perm[j]));
    const double permuted = spectral_gap(metropolis_weights(relabeled)).sigma2;
    CHECK(permuted == doctest::Approx(sigma2).epsilon(1e-10));
  }
}

TEST_CASE("degenerate support is rejected") {
  GossipMatrix w;
  w.source_graph = build_topology(TopologyKind::path, 2);
  w.weights = MatrixXd::Identity(2, 2);  // valid support, sigma2 = 1
  CHECK_THROWS_AS(spectral_gap(w), Error);
}

TEST_CASE("edge list round trip") {
  const CommGraph g = build_topology(TopologyKind::ring, 6);
  std::stringstream io;
  write_edge_list(g, io);
  const CommGraph back = read_edge_list(io);
  CHECK(back.n_agents == 6);
  CHECK(back.edges == g.edges);
}

TEST_CASE("matrix csv writer") {
  std::stringstream out;
  MatrixXd m(2, 2);
  m << 0.5, 0.25, 0.25, 0.75;
  write_matrix_csv(m, out);
  CHECK(out.str() == "0.5,0.25\n0.25,0.75\n");
}
