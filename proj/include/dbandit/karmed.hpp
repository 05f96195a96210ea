#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dbandit/ftrl.hpp"
#include "dbandit/gossip.hpp"
#include "dbandit/rng.hpp"
#include "dbandit/types.hpp"

namespace dbandit {

// Oblivious loss table: values(t,i,k) in [0,1], fully materialized before any
// agent randomness is drawn.
class LossTensor {
 public:
  LossTensor() = default;
  LossTensor(long horizon, int n_agents, int n_arms);

  long horizon() const { return t_; }
  int n_agents() const { return n_; }
  int n_arms() const { return k_; }

  double operator()(long t, int i, int k) const { return values_[index(t, i, k)]; }
  double& at(long t, int i, int k) { return values_[index(t, i, k)]; }

  // Global average loss vector for round t (mean over agents).
  VectorXd global_avg(long t) const;
  // T x K matrix of global averages.
  MatrixXd global_avg_table() const;

  void validate_range() const;

  // CSV: header line "T N K", then one "t i k value" line per entry, 1-based.
  void write_csv(std::ostream& out) const;
  static LossTensor read_csv(std::istream& in);
  void save_csv(const std::string& path) const;
  static LossTensor load_csv(const std::string& path);

 private:
  size_t index(long t, int i, int k) const { return (static_cast<size_t>(t) * n_ + i) * k_ + k; }

  long t_ = 0;
  int n_ = 0;
  int k_ = 0;
  std::vector<double> values_;
};

// (arm, L*) with L* = min_k sum_t global_avg(t)(k); ties to the lowest index.
std::pair<int, double> cumulative_best_arm(const LossTensor& tensor);

// p = (1 - alpha) p' + (alpha/K) 1.
VectorXd mix_exploration(const VectorXd& p_prime, double alpha, int n_arms);

// Importance-weighted estimate: realized_loss / policy(arm) on the played
// coordinate, zero elsewhere. policy(arm) must respect the exploration floor.
VectorXd ipw_estimate(double realized_loss, const VectorXd& policy, int played_arm, double floor);

struct AgentState {
  int agent_id = 0;
  VectorXd base_policy;          // p'_tau(i)
  VectorXd policy_block;         // p_tau(i)
  DelayedWrapper wrapper;        // two-instance delayed FTRL
  VectorXd estimate_accumulator; // sum of IPW estimates over the current block
  Rng rng_stream;                // keyed (master_seed, seed_index, agent_id)
};

struct BlockTelemetry {
  VectorXd consensus_err;  // per agent, ||z_tau^B(i) - zbar_tau||_2 (zero for tau = 1)
  VectorXd zbar_fed;       // the exact average fed this block (empty for tau = 1)
};

// Lockstep executor for one replay of the block-based K-armed protocol.
// Sequence per block tau: begin_block, then exactly B play_round calls, then
// end_block. Gossip state is kept in extended precision.
class KArmedEngine {
 public:
  KArmedEngine(const GossipMatrix& w, const GossipParams& gossip, int n_arms, long horizon,
               int n_blocks, const Regularizer& reg, std::uint64_t master_seed,
               std::uint64_t seed_index);

  void begin_block(long tau);
  // Samples every agent's action for round t against the tensor, accumulates
  // estimates, and runs one gossip step of the previous block's buffer.
  // Returns the played arms.
  std::vector<int> play_round(long t, const LossTensor& tensor);
  BlockTelemetry end_block(long tau);

  int n_agents() const { return n_; }
  int n_arms() const { return k_; }
  double exploration_alpha() const { return alpha_; }
  double exploration_floor() const { return alpha_ / k_; }
  const VectorXd& policy(int agent) const { return agents_[agent].policy_block; }
  const VectorXd& base_policy(int agent) const { return agents_[agent].base_policy; }
  const GossipBuffer<gossip_real>& buffer() const { return buffer_; }

 private:
  int n_ = 0;
  int k_ = 0;
  long horizon_ = 0;
  int n_blocks_ = 0;
  double alpha_ = 0;
  double estimate_cap_ = 0;
  GossipParams gossip_;
  Matrix<gossip_real> weights_;
  GossipBuffer<gossip_real> buffer_;
  Vector<gossip_real> zbar_current_;  // zbar_tau for the block being gossiped
  std::vector<AgentState> agents_;
  long current_block_ = 0;
  int rounds_in_block_ = 0;
};

}  // namespace dbandit
