#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbandit/karmed.hpp"
#include "dbandit/types.hpp"

namespace dbandit {

// Stochastic K-armed environment: per-agent means with a unique global
// optimum. Losses are Bernoulli by default (maximal variance for given means).
struct StochasticSpec {
  MatrixXd means;  // N x K, entries in [0,1]
  bool use_beta = false;
  double beta_concentration = 4.0;

  int n_agents() const { return static_cast<int>(means.rows()); }
  int n_arms() const { return static_cast<int>(means.cols()); }
  VectorXd global_means() const { return means.colwise().mean().transpose(); }
  int best_arm() const;
  VectorXd gaps() const;
  void validate() const;  // range + unique optimal arm
};

// Homogeneous: means are 0.5 -/+ delta/2. Heterogeneous keeps the same global
// averages but offsets half the agents up and half down by `spread`.
StochasticSpec gap_instance(double delta, int k_star, int n_agents, int n_arms,
                            bool heterogeneous = false, double spread = 0.25);

enum class AdversarialKind { iid_uniform, piecewise_shift, heterogeneous_bias, small_loss_regime };

AdversarialKind adversarial_kind_from_string(const std::string& name);

struct AdversarialSpec {
  AdversarialKind kind = AdversarialKind::iid_uniform;
  std::uint64_t seed = 0;
  int n_phases = 5;          // piecewise_shift
  double lstar_rate = 0.0;   // small_loss_regime: Bernoulli rate of the best arm
  int best_arm = 0;          // small_loss_regime
};

LossTensor gen_adversarial(const AdversarialSpec& spec, long horizon, int n_agents, int n_arms);
LossTensor gen_stochastic(const StochasticSpec& spec, std::uint64_t seed, long horizon);

// Linear loss coefficients theta_t(i), globally rescaled so that
// max |<theta_t(i), a_k>| <= 1 over the whole tensor.
enum class LinearEnvKind { iid_gaussian_normalized, rotating, heterogeneous };

LinearEnvKind linear_env_kind_from_string(const std::string& name);

struct LinearEnvSpec {
  LinearEnvKind kind = LinearEnvKind::iid_gaussian_normalized;
  std::uint64_t seed = 0;
  double rotation_period = 256.0;  // rotating
  double noise_level = 0.25;       // heterogeneous: jitter around per-agent anchors
};

class ThetaTensor {
 public:
  ThetaTensor() = default;
  ThetaTensor(long horizon, int n_agents, int dim);

  long horizon() const { return t_; }
  int n_agents() const { return n_; }
  int dim() const { return d_; }
  double normalization() const { return normalization_; }

  Eigen::Map<const VectorXd> theta(long t, int i) const {
    return Eigen::Map<const VectorXd>(&values_[(static_cast<size_t>(t) * n_ + i) * d_], d_);
  }
  double& at(long t, int i, int j) { return values_[(static_cast<size_t>(t) * n_ + i) * d_ + j]; }

  void scale(double factor);
  void set_normalization(double f) { normalization_ = f; }
  VectorXd theta_bar(long t) const;

 private:
  long t_ = 0;
  int n_ = 0;
  int d_ = 0;
  double normalization_ = 1.0;
  std::vector<double> values_;
};

// `omega` rows are the K action vectors (ambient coordinates).
ThetaTensor gen_linear_thetas(const LinearEnvSpec& spec, const MatrixXd& omega, long horizon,
                              int n_agents);

// K unit-norm vectors in R^d, rows of the returned matrix.
MatrixXd random_unit_actions(int n_arms, int dim, std::uint64_t seed);

}  // namespace dbandit
