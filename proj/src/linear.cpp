#include "dbandit/linear.hpp"

#include <cmath>

namespace dbandit {

LinearRates linear_rates(int n_arms, long horizon, int n_agents, int block_len, int dim) {
  if (n_arms < 2 || horizon < 3 || n_agents < 1 || block_len < 1 || dim < 1)
    throw Error(Errc::bad_params, "linear_rates: bad dimensions");
  const double k = n_arms, t = static_cast<double>(horizon), n = n_agents, b = block_len, d = dim;
  LinearRates rates;
  rates.eta = std::min(1.0 / (6.0 * b * d), std::sqrt(std::log(k) / (d * t * b + d * t / n)));
  rates.beta = 3.0 * b * d * rates.eta;
  return rates;
}

VectorXd mix_exploration_linear(const VectorXd& p_prime, double alpha, double beta,
                                const std::vector<int>& spanner_members, int n_arms) {
  if (!(alpha > 0) || !(beta >= 0) || alpha + beta >= 1.0)
    throw Error(Errc::rates_too_large, "alpha + beta must be below 1");
  if (p_prime.size() != n_arms || spanner_members.empty())
    throw Error(Errc::dim_mismatch, "mix_exploration_linear");
  VectorXd p = (1.0 - alpha - beta) * p_prime + VectorXd::Constant(n_arms, alpha / n_arms);
  const double boost = beta / static_cast<double>(spanner_members.size());
  for (int idx : spanner_members) p[idx] += boost;
  return p;
}

CorrelationSolver CorrelationSolver::build(const MatrixXd& m) {
  CorrelationSolver solver;
  solver.m_ = m;
  solver.llt_.compute(m);
  if (solver.llt_.info() != Eigen::Success) {
    const double jitter = 1e-12 * m.trace() / static_cast<double>(m.rows());
    solver.m_ += jitter * MatrixXd::Identity(m.rows(), m.cols());
    solver.llt_.compute(solver.m_);
    if (solver.llt_.info() != Eigen::Success)
      throw Error(Errc::not_spd, "correlation matrix not positive definite");
  }
  return solver;
}

VectorXd CorrelationSolver::solve(const VectorXd& rhs) const { return llt_.solve(rhs); }

VectorXd theta_hat(const CorrelationSolver& m, const VectorXd& played_vector,
                   double realized_loss) {
  const VectorXd rhs = played_vector * realized_loss;
  VectorXd x = m.solve(rhs);
  if ((m.matrix() * x - rhs).norm() > 1e-10 * std::max(1.0, played_vector.norm()))
    throw Error(Errc::not_spd, "theta_hat solve residual too large");
  return x;
}

VectorXd project_spanner_losses(const VectorXd& theta, const MatrixXd& member_coords,
                                double bound) {
  VectorXd est = member_coords * theta;
  if (est.cwiseAbs().maxCoeff() > bound)
    throw Error(Errc::bound_violation, "spanner loss estimate above |S|/beta");
  return est;
}

VectorXd reconstruct_losses(const VectorXd& z, const VolumetricSpanner& spanner) {
  if (z.size() != spanner.lambda.cols())
    throw Error(Errc::dim_mismatch, "reconstruct_losses: wrong spanner dimension");
  return spanner.lambda * z;
}

LinearEngine::LinearEngine(const GossipMatrix& w, const GossipParams& gossip,
                           const ActionSet& omega, const VolumetricSpanner& spanner, long horizon,
                           int n_blocks, double eta, double beta, std::uint64_t master_seed,
                           std::uint64_t seed_index)
    : n_(w.n()),
      k_(omega.n_arms()),
      r_(omega.effective_dim),
      horizon_(horizon),
      n_blocks_(n_blocks),
      beta_(beta),
      gossip_(gossip),
      omega_(omega),
      spanner_(spanner) {
  if (spanner.size() < 1) throw Error(Errc::bad_params, "empty spanner");
  alpha_ = 1.0 / static_cast<double>(horizon);
  if (alpha_ + beta_ >= 1.0) throw Error(Errc::rates_too_large, "alpha + beta must be below 1");
  // Uncertified spanners still run, with the estimate bound scaled by c^2.
  const double scale = spanner.certified
                           ? 1.0
                           : spanner.spanner_constant * spanner.spanner_constant;
  estimate_bound_ = scale * spanner.size() / beta_ * (1.0 + 1e-9);
  weights_ = w.weights.cast<gossip_real>();
  member_coords_ = spanner.member_coords(omega);
  buffer_ = GossipBuffer<gossip_real>::zero(n_, spanner.size());
  zbar_spanner_ = Vector<gossip_real>::Zero(spanner.size());
  const Regularizer reg = Regularizer::neg_entropy(eta);
  wrappers_.assign(n_, DelayedWrapper(k_, reg));
  base_policies_.assign(n_, VectorXd::Zero(k_));
  policies_.assign(n_, VectorXd::Zero(k_));
  solvers_.resize(n_);
  accumulators_.assign(n_, VectorXd::Zero(spanner.size()));
  rngs_.reserve(n_);
  for (int i = 0; i < n_; ++i)
    rngs_.emplace_back(std::initializer_list<std::uint64_t>{master_seed, seed_index,
                                                            static_cast<std::uint64_t>(i)});
}

void LinearEngine::begin_block(long tau) {
  if (tau != current_block_ + 1) throw Error(Errc::out_of_order, "begin_block out of order");
  current_block_ = tau;
  rounds_in_block_ = 0;
  for (int i = 0; i < n_; ++i) {
    base_policies_[i] = wrappers_[i].query(tau);
    policies_[i] =
        mix_exploration_linear(base_policies_[i], alpha_, beta_, spanner_.member_indices, k_);
    MatrixXd m = MatrixXd::Zero(r_, r_);
    for (int k = 0; k < k_; ++k)
      m += policies_[i][k] * omega_.coords.row(k).transpose() * omega_.coords.row(k);
    solvers_[i] = CorrelationSolver::build(m);
  }
}

std::vector<int> LinearEngine::play_round(long t, const ThetaTensor& thetas) {
  if (current_block_ < 1) throw Error(Errc::out_of_order, "play_round before begin_block");
  std::vector<int> actions(n_);
  for (int i = 0; i < n_; ++i) {
    const double u = rngs_[i].uniform_at(static_cast<std::uint64_t>(t));
    const int arm = Rng::sample_with(policies_[i], u);
    actions[i] = arm;
    const double loss = thetas.theta(t, i).dot(omega_.vectors.row(arm));
    const VectorXd estimate =
        theta_hat(solvers_[i], omega_.coords.row(arm).transpose(), loss);
    // Bounded-estimate guard over the whole action set, not just the members.
    const VectorXd all_losses = omega_.coords * estimate;
    if (all_losses.cwiseAbs().maxCoeff() > estimate_bound_)
      throw Error(Errc::bound_violation, "reconstructed estimate above |S|/beta");
    accumulators_[i] += project_spanner_losses(estimate, member_coords_, estimate_bound_);
  }
  gossip_step(buffer_, weights_, static_cast<gossip_real>(gossip_.kappa));
  ++rounds_in_block_;
  return actions;
}

LinearBlockTelemetry LinearEngine::end_block(long tau) {
  if (tau != current_block_) throw Error(Errc::out_of_order, "end_block out of order");
  if (rounds_in_block_ != gossip_.block_len_b)
    throw Error(Errc::out_of_order, "block ended before B rounds");
  LinearBlockTelemetry telemetry;
  telemetry.consensus_err = VectorXd::Zero(n_);
  telemetry.reconstructed_err = VectorXd::Zero(n_);
  if (tau >= 2) {
    const VectorXd zbar_s = zbar_spanner_.cast<double>();
    const VectorXd zbar_full = reconstruct_losses(zbar_s, spanner_);
    telemetry.zbar_fed = zbar_full;
    for (int i = 0; i < n_; ++i) {
      telemetry.consensus_err[i] =
          static_cast<double>((buffer_.curr.row(i).transpose() - zbar_spanner_).norm());
      const VectorXd z_local = buffer_.curr.row(i).cast<double>().transpose();
      const VectorXd z_tilde = reconstruct_losses(z_local, spanner_);
      telemetry.reconstructed_err[i] = (z_tilde - zbar_full).norm();
      wrappers_[i].feed(tau - 1, z_tilde);
    }
  }
  Matrix<gossip_real> init(n_, spanner_.size());
  for (int i = 0; i < n_; ++i) init.row(i) = accumulators_[i].cast<gossip_real>().transpose();
  zbar_spanner_ = init.colwise().mean();
  buffer_ = GossipBuffer<gossip_real>::from_initial(init);
  for (auto& acc : accumulators_) acc.setZero();
  return telemetry;
}

}  // namespace dbandit
