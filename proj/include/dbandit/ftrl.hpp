#pragma once

#include <optional>

#include "dbandit/types.hpp"

namespace dbandit {

enum class RegularizerKind { neg_entropy, entropy_log_barrier, entropy_tsallis };

// FTRL potential selector. neg_entropy and entropy_log_barrier carry constant
// rates; entropy_tsallis carries the block-indexed schedules
//   eta_t = min{1/B, sqrt(log K / (t B^2))},  gamma_t = sqrt(N / (t B)),
// indexed by the global block of the prediction being produced.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::neg_entropy;
  double eta = 1.0;
  double gamma = 0.0;
  int sched_block_len = 0;
  double sched_n_agents = 0.0;
  double sched_log_k = 0.0;

  static Regularizer neg_entropy(double eta);
  static Regularizer entropy_log_barrier(double eta, double gamma);
  static Regularizer entropy_tsallis(int n_arms, int block_len, int n_agents);

  double eta_at(long block) const;
  double gamma_at(long block) const;
};

enum class TuneTarget { worst_case, small_loss, bobw };

// Rate formulas:
//   worst_case: eta = sqrt(log K / (2 (B + 3K/N) T))
//   small_loss: eta = min{1/(4B), sqrt(log K / (B L*))},
//               gamma = min{N/12, sqrt(K N log T / L*)}
//   bobw:       the entropy_tsallis schedules above
// L* is required for small_loss; L* = 0 selects the caps.
Regularizer tune_rates(TuneTarget target, int n_arms, long horizon, int n_agents, int block_len,
                       std::optional<double> l_star = std::nullopt);

// Closed-form entropy step: q(k) proportional to exp(-eta * L(k)),
// stabilized by max subtraction.
VectorXd solve_entropy(const VectorXd& cum_loss, double eta);

// Strictly convex simplex program for the hybrid potentials, solved through
// the dual: for a candidate multiplier each coordinate is a monotone scalar
// root-find (safeguarded Newton in log q), and the multiplier is driven to
// sum-to-one by bisection with Newton acceleration.
VectorXd solve_simplex_hybrid(const VectorXd& cum_loss, const Regularizer& reg, long block = 1);

// Stationarity spread of the eta-scaled objective plus |sum q - 1|; the
// solvers keep this below 1e-10.
double kkt_residual(const VectorXd& q, const VectorXd& cum_loss, const Regularizer& reg,
                    long block = 1);

struct FtrlState {
  VectorXd cum_loss;
  Regularizer reg;
  long feedback_count = 0;

  FtrlState() = default;
  FtrlState(int n_arms, const Regularizer& r) : cum_loss(VectorXd::Zero(n_arms)), reg(r) {}
};

// argmin over the simplex of <cum_loss, q> + psi_block(q).
VectorXd ftrl_next(const FtrlState& state, long block = 1);

// Two-instance reduction for the one-block feedback delay: odd blocks are
// served by one FTRL instance, even blocks by the other, so each instance
// sees its own feedback before it is queried again.
class DelayedWrapper {
 public:
  DelayedWrapper() = default;
  DelayedWrapper(int n_arms, const Regularizer& reg)
      : instances_{FtrlState(n_arms, reg), FtrlState(n_arms, reg)} {}

  // Query for block tau (must be last queried + 1); returns p'_tau.
  VectorXd query(long tau);

  // Feedback for `block` (the block whose estimates just finished gossiping;
  // equals last queried - 1). z is added to the instance of matching parity.
  void feed(long block, const VectorXd& z);

  long last_queried_block() const { return last_queried_; }
  const FtrlState& instance(int parity) const { return instances_[parity & 1]; }

 private:
  FtrlState instances_[2];
  long last_queried_ = 0;
  long last_fed_ = 0;
};

}  // namespace dbandit
