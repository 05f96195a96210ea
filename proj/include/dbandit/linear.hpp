#pragma once

#include <Eigen/Cholesky>

#include <cstdint>
#include <vector>

#include "dbandit/env.hpp"
#include "dbandit/ftrl.hpp"
#include "dbandit/gossip.hpp"
#include "dbandit/rng.hpp"
#include "dbandit/spanner.hpp"
#include "dbandit/types.hpp"

namespace dbandit {

// Linear-bandit rates on the effective dimension:
//   eta  = min{ 1/(6Bd), sqrt(log K / (dTB + dT/N)) },  beta = 3 B d eta.
struct LinearRates {
  double eta = 0;
  double beta = 0;
};
LinearRates linear_rates(int n_arms, long horizon, int n_agents, int block_len, int dim);

// p = (1 - alpha - beta) p' + (alpha/K) 1 + (beta/|S|) 1_S.
VectorXd mix_exploration_linear(const VectorXd& p_prime, double alpha, double beta,
                                const std::vector<int>& spanner_members, int n_arms);

// SPD solve through a Cholesky factorization; a failed factorization gets one
// jitter retry of 1e-12 * trace/d on the diagonal.
class CorrelationSolver {
 public:
  static CorrelationSolver build(const MatrixXd& m);
  VectorXd solve(const VectorXd& rhs) const;
  const MatrixXd& matrix() const { return m_; }

 private:
  MatrixXd m_;
  Eigen::LLT<MatrixXd> llt_;
};

// theta_hat = M^{-1} a * realized_loss, with a residual check on the solve.
VectorXd theta_hat(const CorrelationSolver& m, const VectorXd& played_vector,
                   double realized_loss);

// Coordinates <b_j, theta_hat> over the spanner members; each magnitude must
// stay within `bound` (|S|/beta for a certified spanner).
VectorXd project_spanner_losses(const VectorXd& theta, const MatrixXd& member_coords,
                                double bound);

// ztilde(k) = <lambda^{(k)}, z>.
VectorXd reconstruct_losses(const VectorXd& z, const VolumetricSpanner& spanner);

struct LinearBlockTelemetry {
  VectorXd consensus_err;        // per agent, ||z_tau^B(i) - zbarS_tau||_2
  VectorXd reconstructed_err;    // per agent, ||ztilde_tau^B(i) - zbar_tau||_2
  VectorXd zbar_fed;             // exact reconstructed average (empty for tau = 1)
};

// Lockstep executor for the spanner-compressed linear protocol. Same block
// discipline as KArmedEngine; gossip runs on |S|-dimensional buffers and the
// learners are entropy-FTRL over the K reconstructed losses.
class LinearEngine {
 public:
  LinearEngine(const GossipMatrix& w, const GossipParams& gossip, const ActionSet& omega,
               const VolumetricSpanner& spanner, long horizon, int n_blocks, double eta,
               double beta, std::uint64_t master_seed, std::uint64_t seed_index);

  void begin_block(long tau);
  std::vector<int> play_round(long t, const ThetaTensor& thetas);
  LinearBlockTelemetry end_block(long tau);

  int n_agents() const { return n_; }
  int n_arms() const { return k_; }
  double exploration_alpha() const { return alpha_; }
  double exploration_beta() const { return beta_; }
  double estimate_bound() const { return estimate_bound_; }
  const VectorXd& policy(int agent) const { return policies_[agent]; }
  const VectorXd& base_policy(int agent) const { return base_policies_[agent]; }

 private:
  int n_ = 0;
  int k_ = 0;
  int r_ = 0;  // effective dimension
  long horizon_ = 0;
  int n_blocks_ = 0;
  double alpha_ = 0;
  double beta_ = 0;
  double estimate_bound_ = 0;
  GossipParams gossip_;
  Matrix<gossip_real> weights_;
  ActionSet omega_;
  VolumetricSpanner spanner_;
  MatrixXd member_coords_;  // |S| x r
  GossipBuffer<gossip_real> buffer_;
  Vector<gossip_real> zbar_spanner_;  // exact average over the spanner coords
  std::vector<DelayedWrapper> wrappers_;
  std::vector<VectorXd> base_policies_;
  std::vector<VectorXd> policies_;
  std::vector<CorrelationSolver> solvers_;
  std::vector<VectorXd> accumulators_;  // |S| per agent
  std::vector<Rng> rngs_;
  long current_block_ = 0;
  int rounds_in_block_ = 0;
};

}  // namespace dbandit
