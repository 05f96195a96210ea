#include "dbandit/graph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <deque>
#include <functional>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "dbandit/rng.hpp"

namespace dbandit {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::bad_params: return "BAD_PARAMS";
    case Errc::unconnectable: return "UNCONNECTABLE";
    case Errc::degenerate: return "DEGENERATE";
    case Errc::out_of_range: return "OUT_OF_RANGE";
    case Errc::dim_mismatch: return "DIM_MISMATCH";
    case Errc::solver_diverged: return "SOLVER_DIVERGED";
    case Errc::missing_lstar: return "MISSING_LSTAR";
    case Errc::out_of_order: return "OUT_OF_ORDER";
    case Errc::duplicate_feedback: return "DUPLICATE_FEEDBACK";
    case Errc::floor_violation: return "FLOOR_VIOLATION";
    case Errc::bound_violation: return "BOUND_VIOLATION";
    case Errc::rates_too_large: return "RATES_TOO_LARGE";
    case Errc::not_spd: return "NOT_SPD";
    case Errc::rank_deficient: return "RANK_DEFICIENT";
    case Errc::size_cap_exceeded: return "SIZE_CAP_EXCEEDED";
    case Errc::bad_spec: return "BAD_SPEC";
    case Errc::config_invalid: return "CONFIG_INVALID";
    case Errc::io_error: return "IO_ERROR";
    case Errc::invariant_violation: return "INVARIANT_VIOLATION";
  }
  return "UNKNOWN";
}

std::vector<int> CommGraph::degrees() const {
  std::vector<int> deg(n_agents, 0);
  for (const auto& [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

std::vector<std::vector<int>> CommGraph::adjacency() const {
  std::vector<std::vector<int>> adj(n_agents);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

bool CommGraph::is_connected() const {
  if (n_agents <= 0) return false;
  if (n_agents == 1) return true;
  const auto adj = adjacency();
  std::vector<char> seen(n_agents, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        queue.push_back(u);
      }
    }
  }
  return reached == n_agents;
}

void CommGraph::validate() const {
  if (n_agents < 1) throw Error(Errc::bad_params, "graph needs at least one vertex");
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents)
      throw Error(Errc::bad_params, "edge endpoint out of range");
    if (i == j) throw Error(Errc::bad_params, "self-loop");
    auto key = std::minmax(i, j);
    if (!seen.insert(key).second) throw Error(Errc::bad_params, "duplicate edge");
  }
  if (!is_connected()) throw Error(Errc::bad_params, "graph not connected");
}

TopologyKind topology_kind_from_string(const std::string& name) {
  if (name == "ring") return TopologyKind::ring;
  if (name == "path") return TopologyKind::path;
  if (name == "grid") return TopologyKind::grid;
  if (name == "complete") return TopologyKind::complete;
  if (name == "star") return TopologyKind::star;
  if (name == "random_regular") return TopologyKind::random_regular;
  if (name == "erdos_renyi") return TopologyKind::erdos_renyi;
  throw Error(Errc::bad_params, "unknown topology kind: " + name);
}

const char* to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::ring: return "ring";
    case TopologyKind::path: return "path";
    case TopologyKind::grid: return "grid";
    case TopologyKind::complete: return "complete";
    case TopologyKind::star: return "star";
    case TopologyKind::random_regular: return "random_regular";
    case TopologyKind::erdos_renyi: return "erdos_renyi";
  }
  return "?";
}

namespace {

CommGraph sample_erdos_renyi(int n, double p, std::uint64_t seed, int max_retries) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(Errc::bad_params, "erdos_renyi needs edge_prob in (0,1]");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng({seed, 0x45524E49ull, static_cast<std::uint64_t>(attempt)});
    CommGraph g;
    g.n_agents = n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < p) g.edges.emplace_back(i, j);
    if (g.is_connected()) return g;
  }
  throw Error(Errc::unconnectable, "erdos_renyi: no connected sample within retry budget");
}

CommGraph sample_random_regular(int n, int degree, std::uint64_t seed, int max_retries) {
  if (degree < 1 || degree >= n) throw Error(Errc::bad_params, "random_regular degree out of range");
  if ((static_cast<long long>(n) * degree) % 2 != 0)
    throw Error(Errc::bad_params, "random_regular needs n*degree even");
  // Pairing model: retry until the matching is simple and the graph connected.
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng({seed, 0x52454755ull, static_cast<std::uint64_t>(attempt)});
    std::vector<int> stubs;
    stubs.reserve(static_cast<size_t>(n) * degree);
    for (int v = 0; v < n; ++v)
      for (int c = 0; c < degree; ++c) stubs.push_back(v);
    // Fisher-Yates with the counter stream.
    for (size_t k = stubs.size(); k > 1; --k) {
      const size_t j = static_cast<size_t>(rng.uniform() * static_cast<double>(k));
      std::swap(stubs[k - 1], stubs[j < k ? j : k - 1]);
    }
    std::set<std::pair<int, int>> edge_set;
    bool simple = true;
    for (size_t k = 0; k + 1 < stubs.size(); k += 2) {
      const int a = stubs[k], b = stubs[k + 1];
      if (a == b) {
        simple = false;
        break;
      }
      if (!edge_set.insert(std::minmax(a, b)).second) {
        simple = false;
        break;
      }
    }
    if (!simple) continue;
    CommGraph g;
    g.n_agents = n;
    g.edges.assign(edge_set.begin(), edge_set.end());
    if (g.is_connected()) return g;
  }
  throw Error(Errc::unconnectable, "random_regular: no simple connected sample within retry budget");
}

}  // namespace

CommGraph build_topology(TopologyKind kind, int n_agents, const TopologyParams& params,
                         std::uint64_t seed) {
  // N = 1 is allowed for the complete graph only (a single isolated agent);
  // every other kind needs at least two vertices.
  if (n_agents < 1 || (n_agents < 2 && kind != TopologyKind::complete))
    throw Error(Errc::bad_params, "need at least 2 agents");
  CommGraph g;
  g.n_agents = n_agents;
  switch (kind) {
    case TopologyKind::ring: {
      if (n_agents < 3) throw Error(Errc::bad_params, "ring needs at least 3 agents");
      for (int i = 0; i < n_agents; ++i) {
        const int j = (i + 1) % n_agents;
        g.edges.emplace_back(std::min(i, j), std::max(i, j));
      }
      break;
    }
    case TopologyKind::path: {
      for (int i = 0; i + 1 < n_agents; ++i) g.edges.emplace_back(i, i + 1);
      break;
    }
    case TopologyKind::grid: {
      const int rows = params.grid_rows, cols = params.grid_cols;
      if (rows < 1 || cols < 1 || rows * cols != n_agents)
        throw Error(Errc::bad_params, "grid dimensions inconsistent with n_agents");
      auto id = [cols](int r, int c) { return r * cols + c; };
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          if (c + 1 < cols) g.edges.emplace_back(id(r, c), id(r, c + 1));
          if (r + 1 < rows) g.edges.emplace_back(id(r, c), id(r + 1, c));
        }
      break;
    }
    case TopologyKind::complete: {
      for (int i = 0; i < n_agents; ++i)
        for (int j = i + 1; j < n_agents; ++j) g.edges.emplace_back(i, j);
      break;
    }
    case TopologyKind::star: {
      for (int j = 1; j < n_agents; ++j) g.edges.emplace_back(0, j);
      break;
    }
    case TopologyKind::random_regular:
      g = sample_random_regular(n_agents, params.degree, seed, params.max_retries);
      break;
    case TopologyKind::erdos_renyi:
      g = sample_erdos_renyi(n_agents, params.edge_prob, seed, params.max_retries);
      break;
  }
  g.validate();
  return g;
}

void GossipMatrix::validate(double tol) const {
  const int N = n();
  if (N != source_graph.n_agents || weights.cols() != N)
    throw Error(Errc::dim_mismatch, "gossip matrix shape");
  std::set<std::pair<int, int>> edge_set(source_graph.edges.begin(), source_graph.edges.end());
  for (int i = 0; i < N; ++i) {
    double row_sum = 0;
    for (int j = 0; j < N; ++j) {
      const double w = weights(i, j);
      if (w < 0) throw Error(Errc::bad_params, "negative gossip weight");
      if (std::abs(w - weights(j, i)) > tol) throw Error(Errc::bad_params, "asymmetric weights");
      if (w > 0 && i != j && !edge_set.count(std::minmax(i, j)))
        throw Error(Errc::bad_params, "weight off the graph support");
      row_sum += w;
    }
    if (std::abs(row_sum - 1.0) > tol) throw Error(Errc::bad_params, "row sum not 1");
  }
}

GossipMatrix metropolis_weights(const CommGraph& g) {
  g.validate();
  const int N = g.n_agents;
  const auto deg = g.degrees();
  GossipMatrix w;
  w.source_graph = g;
  w.weights = MatrixXd::Zero(N, N);
  for (const auto& [i, j] : g.edges) {
    const double v = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w.weights(i, j) = v;
    w.weights(j, i) = v;
  }
  for (int i = 0; i < N; ++i) w.weights(i, i) = 1.0 - w.weights.row(i).sum();
  w.validate();
  return w;
}

GossipMatrix lazy_walk_weights(const CommGraph& g, double gamma) {
  g.validate();
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(Errc::bad_params, "lazy_walk gamma in (0,1]");
  const int N = g.n_agents;
  const auto deg = g.degrees();
  const int d_max = N == 1 ? 1 : *std::max_element(deg.begin(), deg.end());
  GossipMatrix w;
  w.source_graph = g;
  w.weights = MatrixXd::Zero(N, N);
  for (const auto& [i, j] : g.edges) {
    const double v = gamma / d_max;
    w.weights(i, j) = v;
    w.weights(j, i) = v;
  }
  for (int i = 0; i < N; ++i) w.weights(i, i) = 1.0 - gamma * deg[i] / d_max;
  w.validate();
  return w;
}

SpectralProfile spectral_gap(const GossipMatrix& w) {
  SpectralProfile profile;
  const int N = w.n();
  if (N == 1) {
    profile.sigma2 = 0.0;
    profile.rho = 1.0;
    return profile;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(w.weights, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(Errc::solver_diverged, "eigendecomposition failed");
  VectorXd mags = solver.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<double>());
  profile.sigma2 = std::max(0.0, mags[1]);
  profile.rho = 1.0 - profile.sigma2;
  if (profile.sigma2 >= 1.0 - 1e-12)
    throw Error(Errc::degenerate, "sigma2 ~ 1: support is effectively disconnected");
  return profile;
}

CommGraph read_edge_list(std::istream& in) {
  CommGraph g;
  if (!(in >> g.n_agents)) throw Error(Errc::io_error, "edge list: missing vertex count");
  int i = 0, j = 0;
  while (in >> i >> j) {
    if (i < 1 || j < 1 || i > g.n_agents || j > g.n_agents)
      throw Error(Errc::io_error, "edge list: vertex index out of range");
    g.edges.emplace_back(std::min(i, j) - 1, std::max(i, j) - 1);
  }
  g.validate();
  return g;
}

void write_edge_list(const CommGraph& g, std::ostream& out) {
  out << g.n_agents << "\n";
  for (const auto& [i, j] : g.edges) out << i + 1 << " " << j + 1 << "\n";
}

CommGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return read_edge_list(in);
}

void save_edge_list(const CommGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot open " + path);
  write_edge_list(g, out);
}

void write_matrix_csv(const MatrixXd& m, std::ostream& out) {
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.str("");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line << ",";
      line << m(i, j);
    }
    out << line.str() << "\n";
  }
}

void save_matrix_csv(const MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot open " + path);
  write_matrix_csv(m, out);
}

}  // namespace dbandit
