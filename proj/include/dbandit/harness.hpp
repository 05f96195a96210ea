#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dbandit/config.hpp"
#include "dbandit/env.hpp"
#include "dbandit/ftrl.hpp"
#include "dbandit/gossip.hpp"
#include "dbandit/graph.hpp"
#include "dbandit/karmed.hpp"
#include "dbandit/linear.hpp"
#include "dbandit/spanner.hpp"
#include "dbandit/types.hpp"

namespace dbandit {

// Everything resolved from the config before any replay runs.
struct DerivedParams {
  SpectralProfile spectral;
  GossipParams gossip;
  long horizon = 0;      // requested T (drives alpha and the rate formulas)
  long effective_t = 0;  // horizon rounded up to a multiple of B
  int n_blocks = 0;
  int n_arms = 0;
  int dim = 0;            // linear only: effective dimension
  double alpha = 0;
  double beta = 0;        // linear only
  double eta = 0;         // constant-rate variants
  double gamma = 0;       // small_loss
  bool b_clamped = false; // Eq. (block) produced B > T and was clamped to T
  bool theory_valid = true;  // false on any override or clamp
  std::optional<double> l_star;
  int l_star_arm = -1;
};

struct RunRecordRow {
  long block = 0;
  int agent = 0;
  double consensus_err = 0;
  double ghost_ratio = 0;
  double cum_loss = 0;
};

struct SeedResult {
  VectorXd agent_regret;              // sum_t <p_t(i), lbar_t> - min_k sum_t lbar_t(k)
  VectorXd agent_gap_regret;          // stochastic environments: sum_t <p_t(i), delta>
  double max_consensus_err = 0;       // linear: over spanner coordinates
  double max_reconstructed_err = 0;   // linear only
  double max_ghost_ratio = 0;
  long consensus_violations = 0;      // against the consensus concentration bounds (when valid)
  long ghost_violations = 0;
  double linear_normalization = 1.0;
  std::vector<RunRecordRow> rows;
  std::vector<std::vector<int>> action_trace;  // capture_traces only, [t][agent]
  std::vector<MatrixXd> policy_trace;          // capture_traces only, per block N x K
  std::vector<VectorXd> zbar_trace;            // capture_traces only, fed averages
};

struct ExperimentResult {
  DerivedParams derived;
  std::vector<SeedResult> seeds;
  VectorXd regret_mean;  // per agent over seeds
  VectorXd regret_se;
  double reg_t = 0;  // max_i regret_mean(i)
  double reg_t_se = 0;
  int reg_t_agent = 0;
  VectorXd gap_regret_mean;  // per agent; empty unless stochastic
  double gap_reg_t = 0;
  double gap_reg_t_se = 0;
  double bound = 0;
  bool bound_is_order_level = false;
  double max_consensus_err = 0;
  double consensus_bound = 0;
  double max_reconstructed_err = 0;
  double reconstructed_bound = 0;
  double max_ghost_ratio = 0;
  double ghost_bound = 0;
  bool consensus_ok = true;
  bool ghost_ok = true;
  double linear_normalization = 1.0;
  std::vector<int> spanner_members;  // 0-based
  double spanner_constant = 0;
  bool spanner_certified = false;
  std::vector<long> floats_per_agent;  // effective_T * dim * |N(i)|
};

// Regret bound for the resolved parameters. worst_case carries its
// explicit constants; the others are order-level (constants set to 1).
double theory_bound(Variant variant, int n_arms, long horizon, int n_agents, int block_len,
                    int dim = 0, std::optional<double> l_star = std::nullopt);

// Replays the ghost FTRL on the exact averages and returns the largest
// p_ghost(k) / p_mixed(i,k) over blocks, agents, arms. `policies` holds the
// mixed per-block policies, `zbars` the exact fed averages (blocks 1..M-1).
double ghost_diagnostic(const std::vector<VectorXd>& zbars, const std::vector<MatrixXd>& policies,
                        int n_arms, const Regularizer& reg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// CSV rows "block,agent,consensus_err,ghost_ratio,cum_loss".
void write_run_csv(const SeedResult& seed, const std::string& path);
// JSON summary of the whole experiment.
void write_summary_json(const ExperimentConfig& cfg, const ExperimentResult& result,
                        const std::string& path);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace dbandit
