#include "dbandit/env.hpp"

#include <algorithm>
#include <cmath>

#include "dbandit/rng.hpp"

namespace dbandit {

int StochasticSpec::best_arm() const {
  const VectorXd mu = global_means();
  int best = 0;
  for (int k = 1; k < mu.size(); ++k)
    if (mu[k] < mu[best]) best = k;
  return best;
}

VectorXd StochasticSpec::gaps() const {
  const VectorXd mu = global_means();
  return mu.array() - mu[best_arm()];
}

void StochasticSpec::validate() const {
  if (means.rows() < 1 || means.cols() < 2) throw Error(Errc::bad_spec, "means shape");
  if ((means.array() < 0.0).any() || (means.array() > 1.0).any())
    throw Error(Errc::bad_spec, "means outside [0,1]");
  const int star = best_arm();
  const VectorXd delta = gaps();
  for (int k = 0; k < delta.size(); ++k)
    if (k != star && !(delta[k] > 0)) throw Error(Errc::bad_spec, "optimal arm not unique");
}

StochasticSpec gap_instance(double delta, int k_star, int n_agents, int n_arms,
                            bool heterogeneous, double spread) {
  if (!(delta > 0 && delta <= 1)) throw Error(Errc::bad_spec, "gap delta out of range");
  if (k_star < 0 || k_star >= n_arms) throw Error(Errc::bad_spec, "k_star out of range");
  StochasticSpec spec;
  spec.means = MatrixXd::Constant(n_agents, n_arms, 0.5 + delta / 2.0);
  spec.means.col(k_star).setConstant(0.5 - delta / 2.0);
  if (heterogeneous) {
    // Pairwise +/- offsets cancel across agents, so global means are kept.
    const int pairs = n_agents / 2;
    for (int i = 0; i < 2 * pairs; ++i) {
      const double off = i < pairs ? spread : -spread;
      spec.means.row(i).array() += off;
    }
  }
  if ((spec.means.array() < 0.0).any() || (spec.means.array() > 1.0).any())
    throw Error(Errc::bad_spec, "gap instance means escape [0,1]; lower delta or spread");
  spec.validate();
  return spec;
}

AdversarialKind adversarial_kind_from_string(const std::string& name) {
  if (name == "iid_uniform") return AdversarialKind::iid_uniform;
  if (name == "piecewise_shift") return AdversarialKind::piecewise_shift;
  if (name == "heterogeneous_bias") return AdversarialKind::heterogeneous_bias;
  if (name == "small_loss_regime") return AdversarialKind::small_loss_regime;
  throw Error(Errc::bad_spec, "unknown adversarial generator: " + name);
}

namespace {

// Deterministic gamma sampler (Marsaglia-Tsang) on a counter stream.
double sample_gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = std::max(rng.uniform(), 1e-300);
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(Rng& rng, double a, double b) {
  const double x = sample_gamma(rng, a);
  const double y = sample_gamma(rng, b);
  return x / std::max(x + y, 1e-300);
}

}  // namespace

LossTensor gen_adversarial(const AdversarialSpec& spec, long horizon, int n_agents, int n_arms) {
  if (horizon < 1 || n_agents < 1 || n_arms < 2) throw Error(Errc::bad_spec, "bad dimensions");
  LossTensor tensor(horizon, n_agents, n_arms);
  const Rng stream({spec.seed, 0x4B4D4142ull});
  auto counter = [&](long t, int i, int k) {
    return (static_cast<std::uint64_t>(t) * n_agents + i) * n_arms + k;
  };
  switch (spec.kind) {
    case AdversarialKind::iid_uniform: {
      for (long t = 0; t < horizon; ++t)
        for (int i = 0; i < n_agents; ++i)
          for (int k = 0; k < n_arms; ++k)
            tensor.at(t, i, k) = stream.uniform_at(counter(t, i, k));
      break;
    }
    case AdversarialKind::piecewise_shift: {
      if (spec.n_phases < 1) throw Error(Errc::bad_spec, "piecewise_shift needs n_phases >= 1");
      const long phase_len = (horizon + spec.n_phases - 1) / spec.n_phases;
      for (long t = 0; t < horizon; ++t) {
        const int good = static_cast<int>((t / phase_len) % n_arms);
        for (int i = 0; i < n_agents; ++i)
          for (int k = 0; k < n_arms; ++k) {
            const double u = stream.uniform_at(counter(t, i, k));
            tensor.at(t, i, k) = k == good ? 0.5 * u : 0.5 + 0.5 * u;
          }
      }
      break;
    }
    case AdversarialKind::heterogeneous_bias: {
      // Half the agents strongly prefer an arm that is not the global best.
      MatrixXd means(2, n_arms);
      if (n_arms == 2) {
        means << 0.30, 0.70, 0.75, 0.25;
      } else {
        means.setConstant(0.70);
        means(0, 0) = 0.20;
        means(1, 1) = 0.20;
        means(1, 0) = 0.75;
      }
      for (long t = 0; t < horizon; ++t)
        for (int i = 0; i < n_agents; ++i)
          for (int k = 0; k < n_arms; ++k)
            tensor.at(t, i, k) =
                stream.uniform_at(counter(t, i, k)) < means(i % 2, k) ? 1.0 : 0.0;
      break;
    }
    case AdversarialKind::small_loss_regime: {
      if (spec.best_arm < 0 || spec.best_arm >= n_arms)
        throw Error(Errc::bad_spec, "small_loss_regime best_arm out of range");
      for (long t = 0; t < horizon; ++t)
        for (int i = 0; i < n_agents; ++i)
          for (int k = 0; k < n_arms; ++k) {
            const double u = stream.uniform_at(counter(t, i, k));
            if (k == spec.best_arm)
              tensor.at(t, i, k) = u < spec.lstar_rate ? 1.0 : 0.0;
            else
              tensor.at(t, i, k) = 0.25 + 0.75 * u;
          }
      break;
    }
  }
  tensor.validate_range();
  return tensor;
}

LossTensor gen_stochastic(const StochasticSpec& spec, std::uint64_t seed, long horizon) {
  spec.validate();
  const int n = spec.n_agents(), k = spec.n_arms();
  LossTensor tensor(horizon, n, k);
  if (spec.use_beta) {
    Rng rng({seed, 0x42455441ull});
    for (long t = 0; t < horizon; ++t)
      for (int i = 0; i < n; ++i)
        for (int arm = 0; arm < k; ++arm) {
          const double mu = std::min(std::max(spec.means(i, arm), 1e-9), 1.0 - 1e-9);
          tensor.at(t, i, arm) = sample_beta(rng, spec.beta_concentration * mu,
                                             spec.beta_concentration * (1.0 - mu));
        }
  } else {
    const Rng stream({seed, 0x53544F43ull});
    for (long t = 0; t < horizon; ++t)
      for (int i = 0; i < n; ++i)
        for (int arm = 0; arm < k; ++arm) {
          const std::uint64_t c = (static_cast<std::uint64_t>(t) * n + i) * k + arm;
          tensor.at(t, i, arm) = stream.uniform_at(c) < spec.means(i, arm) ? 1.0 : 0.0;
        }
  }
  return tensor;
}

LinearEnvKind linear_env_kind_from_string(const std::string& name) {
  if (name == "iid_gaussian_normalized" || name == "gaussian")
    return LinearEnvKind::iid_gaussian_normalized;
  if (name == "rotating") return LinearEnvKind::rotating;
  if (name == "heterogeneous") return LinearEnvKind::heterogeneous;
  throw Error(Errc::bad_spec, "unknown linear generator: " + name);
}

ThetaTensor::ThetaTensor(long horizon, int n_agents, int dim)
    : t_(horizon), n_(n_agents), d_(dim) {
  if (horizon < 1 || n_agents < 1 || dim < 1) throw Error(Errc::bad_spec, "theta tensor shape");
  values_.assign(static_cast<size_t>(horizon) * n_agents * dim, 0.0);
}

void ThetaTensor::scale(double factor) {
  for (double& v : values_) v *= factor;
}

VectorXd ThetaTensor::theta_bar(long t) const {
  VectorXd bar = VectorXd::Zero(d_);
  for (int i = 0; i < n_; ++i) bar += theta(t, i);
  return bar / n_;
}

ThetaTensor gen_linear_thetas(const LinearEnvSpec& spec, const MatrixXd& omega, long horizon,
                              int n_agents) {
  const int d = static_cast<int>(omega.cols());
  ThetaTensor tensor(horizon, n_agents, d);
  Rng rng({spec.seed, 0x4C494E45ull});
  switch (spec.kind) {
    case LinearEnvKind::iid_gaussian_normalized: {
      for (long t = 0; t < horizon; ++t)
        for (int i = 0; i < n_agents; ++i)
          for (int j = 0; j < d; ++j) tensor.at(t, i, j) = rng.normal();
      break;
    }
    case LinearEnvKind::rotating: {
      for (long t = 0; t < horizon; ++t) {
        const double angle = 6.283185307179586 * static_cast<double>(t) / spec.rotation_period;
        for (int i = 0; i < n_agents; ++i) {
          tensor.at(t, i, 0) = std::cos(angle);
          if (d > 1) tensor.at(t, i, 1) = std::sin(angle);
        }
      }
      break;
    }
    case LinearEnvKind::heterogeneous: {
      MatrixXd anchors(n_agents, d);
      for (int i = 0; i < n_agents; ++i)
        for (int j = 0; j < d; ++j) anchors(i, j) = rng.normal();
      for (long t = 0; t < horizon; ++t)
        for (int i = 0; i < n_agents; ++i)
          for (int j = 0; j < d; ++j)
            tensor.at(t, i, j) = anchors(i, j) + spec.noise_level * rng.normal();
      break;
    }
  }
  // Global rescale so every |<theta, a_k>| is within [-1, 1].
  double max_abs = 0.0;
  for (long t = 0; t < horizon; ++t)
    for (int i = 0; i < n_agents; ++i)
      max_abs = std::max(max_abs, (omega * tensor.theta(t, i)).cwiseAbs().maxCoeff());
  if (max_abs > 0) {
    tensor.scale(1.0 / max_abs);
    tensor.set_normalization(max_abs);
  }
  return tensor;
}

MatrixXd random_unit_actions(int n_arms, int dim, std::uint64_t seed) {
  if (n_arms < 2 || dim < 1) throw Error(Errc::bad_spec, "action set shape");
  Rng rng({seed, 0x414B5354ull});
  MatrixXd omega(n_arms, dim);
  for (int k = 0; k < n_arms; ++k) {
    VectorXd v(dim);
    double norm = 0.0;
    do {
      for (int j = 0; j < dim; ++j) v[j] = rng.normal();
      norm = v.norm();
    } while (norm < 1e-12);
    omega.row(k) = v.transpose() / norm;
  }
  return omega;
}

}  // namespace dbandit
