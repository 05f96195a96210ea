#include "dbandit/karmed.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbandit {

LossTensor::LossTensor(long horizon, int n_agents, int n_arms)
    : t_(horizon), n_(n_agents), k_(n_arms) {
  if (horizon < 1 || n_agents < 1 || n_arms < 1)
    throw Error(Errc::bad_params, "LossTensor: bad dimensions");
  values_.assign(static_cast<size_t>(horizon) * n_agents * n_arms, 0.0);
}

VectorXd LossTensor::global_avg(long t) const {
  VectorXd avg = VectorXd::Zero(k_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < k_; ++k) avg[k] += values_[index(t, i, k)];
  return avg / n_;
}

MatrixXd LossTensor::global_avg_table() const {
  MatrixXd table(t_, k_);
  for (long t = 0; t < t_; ++t) table.row(t) = global_avg(t).transpose();
  return table;
}

void LossTensor::validate_range() const {
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::bad_spec, "loss outside [0,1]");
}

void LossTensor::write_csv(std::ostream& out) const {
  out << t_ << " " << n_ << " " << k_ << "\n";
  std::ostringstream line;
  line.precision(17);
  for (long t = 0; t < t_; ++t)
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < k_; ++k) {
        line.str("");
        line << t + 1 << " " << i + 1 << " " << k + 1 << " " << values_[index(t, i, k)];
        out << line.str() << "\n";
      }
}

LossTensor LossTensor::read_csv(std::istream& in) {
  long horizon = 0;
  int n = 0, k = 0;
  if (!(in >> horizon >> n >> k)) throw Error(Errc::io_error, "loss tensor: bad header");
  LossTensor tensor(horizon, n, k);
  long t = 0;
  int i = 0, arm = 0;
  double v = 0;
  size_t count = 0;
  while (in >> t >> i >> arm >> v) {
    if (t < 1 || t > horizon || i < 1 || i > n || arm < 1 || arm > k)
      throw Error(Errc::io_error, "loss tensor: index out of range");
    tensor.at(t - 1, i - 1, arm - 1) = v;
    ++count;
  }
  if (count != static_cast<size_t>(horizon) * n * k)
    throw Error(Errc::io_error, "loss tensor: wrong number of entries");
  tensor.validate_range();
  return tensor;
}

void LossTensor::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot open " + path);
  write_csv(out);
}

LossTensor LossTensor::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return read_csv(in);
}

std::pair<int, double> cumulative_best_arm(const LossTensor& tensor) {
  VectorXd totals = VectorXd::Zero(tensor.n_arms());
  for (long t = 0; t < tensor.horizon(); ++t) totals += tensor.global_avg(t);
  int best = 0;
  for (int k = 1; k < tensor.n_arms(); ++k)
    if (totals[k] < totals[best]) best = k;
  return {best, totals[best]};
}

VectorXd mix_exploration(const VectorXd& p_prime, double alpha, int n_arms) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::bad_params, "alpha must be in (0,1)");
  if (p_prime.size() != n_arms) throw Error(Errc::dim_mismatch, "mix_exploration");
  return (1.0 - alpha) * p_prime + VectorXd::Constant(n_arms, alpha / n_arms);
}

VectorXd ipw_estimate(double realized_loss, const VectorXd& policy, int played_arm, double floor) {
  if (played_arm < 0 || played_arm >= policy.size())
    throw Error(Errc::bad_params, "ipw_estimate: arm out of range");
  const double p = policy[played_arm];
  if (p < floor * (1.0 - 1e-9))
    throw Error(Errc::floor_violation, "policy below the exploration floor");
  VectorXd est = VectorXd::Zero(policy.size());
  est[played_arm] = realized_loss / p;
  return est;
}

KArmedEngine::KArmedEngine(const GossipMatrix& w, const GossipParams& gossip, int n_arms,
                           long horizon, int n_blocks, const Regularizer& reg,
                           std::uint64_t master_seed, std::uint64_t seed_index)
    : n_(w.n()),
      k_(n_arms),
      horizon_(horizon),
      n_blocks_(n_blocks),
      gossip_(gossip) {
  if (n_arms < 2 || horizon < 3 || n_blocks < 1)
    throw Error(Errc::bad_params, "KArmedEngine: bad dimensions");
  alpha_ = 1.0 / static_cast<double>(horizon);
  estimate_cap_ = static_cast<double>(k_) * static_cast<double>(horizon_);
  weights_ = w.weights.cast<gossip_real>();
  buffer_ = GossipBuffer<gossip_real>::zero(n_, k_);  // z_1 = 0
  zbar_current_ = Vector<gossip_real>::Zero(k_);
  agents_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    agents_[i].agent_id = i;
    agents_[i].wrapper = DelayedWrapper(k_, reg);
    agents_[i].estimate_accumulator = VectorXd::Zero(k_);
    agents_[i].rng_stream = Rng({master_seed, seed_index, static_cast<std::uint64_t>(i)});
  }
}

void KArmedEngine::begin_block(long tau) {
  if (tau != current_block_ + 1) throw Error(Errc::out_of_order, "begin_block out of order");
  current_block_ = tau;
  rounds_in_block_ = 0;
  const double floor = exploration_floor();
  for (auto& agent : agents_) {
    agent.base_policy = agent.wrapper.query(tau);
    agent.policy_block = mix_exploration(agent.base_policy, alpha_, k_);
    if (agent.policy_block.minCoeff() < floor * (1.0 - 1e-12))
      throw Error(Errc::floor_violation, "mixed policy below 1/(KT)");
  }
}

std::vector<int> KArmedEngine::play_round(long t, const LossTensor& tensor) {
  if (current_block_ < 1) throw Error(Errc::out_of_order, "play_round before begin_block");
  std::vector<int> actions(n_);
  const double floor = exploration_floor();
  for (int i = 0; i < n_; ++i) {
    AgentState& agent = agents_[i];
    // One draw per round, keyed by the round index.
    const double u = agent.rng_stream.uniform_at(static_cast<std::uint64_t>(t));
    const int arm = Rng::sample_with(agent.policy_block, u);
    actions[i] = arm;
    const double loss = tensor(t, i, arm);
    VectorXd est = ipw_estimate(loss, agent.policy_block, arm, floor);
    if (est.norm() > estimate_cap_ * (1.0 + 1e-9))
      throw Error(Errc::bound_violation, "IPW estimate above KT");
    agent.estimate_accumulator += est;
  }
  gossip_step(buffer_, weights_, static_cast<gossip_real>(gossip_.kappa));
  ++rounds_in_block_;
  return actions;
}

BlockTelemetry KArmedEngine::end_block(long tau) {
  if (tau != current_block_) throw Error(Errc::out_of_order, "end_block out of order");
  if (rounds_in_block_ != gossip_.block_len_b)
    throw Error(Errc::out_of_order, "block ended before B rounds");
  BlockTelemetry telemetry;
  telemetry.consensus_err = VectorXd::Zero(n_);
  if (tau >= 2) {
    telemetry.zbar_fed = zbar_current_.cast<double>();
    for (int i = 0; i < n_; ++i) {
      telemetry.consensus_err[i] = static_cast<double>(
          (buffer_.curr.row(i).transpose() - zbar_current_).norm());
      agents_[i].wrapper.feed(tau - 1, buffer_.curr.row(i).cast<double>().transpose());
    }
  }
  // Reinitialize: z_{tau+1}^{-1} = z_{tau+1}^{0} = current block's estimates.
  Matrix<gossip_real> init(n_, k_);
  for (int i = 0; i < n_; ++i)
    init.row(i) = agents_[i].estimate_accumulator.cast<gossip_real>().transpose();
  zbar_current_ = init.colwise().mean();
  buffer_ = GossipBuffer<gossip_real>::from_initial(init);
  for (auto& agent : agents_) agent.estimate_accumulator.setZero();
  return telemetry;
}

}  // namespace dbandit
