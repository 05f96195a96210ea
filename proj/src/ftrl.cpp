#include "dbandit/ftrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dbandit {

Regularizer Regularizer::neg_entropy(double eta) {
  if (!(eta > 0)) throw Error(Errc::bad_params, "neg_entropy: eta must be positive");
  Regularizer r;
  r.kind = RegularizerKind::neg_entropy;
  r.eta = eta;
  return r;
}

Regularizer Regularizer::entropy_log_barrier(double eta, double gamma) {
  if (!(eta > 0) || !(gamma > 0))
    throw Error(Errc::bad_params, "entropy_log_barrier: rates must be positive");
  Regularizer r;
  r.kind = RegularizerKind::entropy_log_barrier;
  r.eta = eta;
  r.gamma = gamma;
  return r;
}

Regularizer Regularizer::entropy_tsallis(int n_arms, int block_len, int n_agents) {
  if (n_arms < 2 || block_len < 1 || n_agents < 1)
    throw Error(Errc::bad_params, "entropy_tsallis: bad schedule parameters");
  Regularizer r;
  r.kind = RegularizerKind::entropy_tsallis;
  r.sched_block_len = block_len;
  r.sched_n_agents = n_agents;
  r.sched_log_k = std::log(static_cast<double>(n_arms));
  return r;
}

double Regularizer::eta_at(long block) const {
  if (kind != RegularizerKind::entropy_tsallis || sched_block_len == 0) return eta;
  const double b = sched_block_len;
  const double t = static_cast<double>(std::max<long>(block, 1));
  return std::min(1.0 / b, std::sqrt(sched_log_k / (t * b * b)));
}

double Regularizer::gamma_at(long block) const {
  if (kind != RegularizerKind::entropy_tsallis || sched_block_len == 0) return gamma;
  const double t = static_cast<double>(std::max<long>(block, 1));
  return std::sqrt(sched_n_agents / (t * sched_block_len));
}

Regularizer tune_rates(TuneTarget target, int n_arms, long horizon, int n_agents, int block_len,
                       std::optional<double> l_star) {
  if (n_arms < 2 || horizon < 3 || n_agents < 1 || block_len < 1)
    throw Error(Errc::bad_params, "tune_rates: bad dimensions");
  const double k = n_arms, t = static_cast<double>(horizon), n = n_agents, b = block_len;
  const double log_k = std::log(k);
  switch (target) {
    case TuneTarget::worst_case:
      return Regularizer::neg_entropy(std::sqrt(log_k / (2.0 * (b + 3.0 * k / n) * t)));
    case TuneTarget::small_loss: {
      if (!l_star) throw Error(Errc::missing_lstar, "small_loss tuning needs L*");
      const double ls = *l_star;
      if (ls < 0) throw Error(Errc::bad_params, "L* must be nonnegative");
      double eta = 1.0 / (4.0 * b);
      double gamma = n / 12.0;
      if (ls > 0) {
        eta = std::min(eta, std::sqrt(log_k / (b * ls)));
        gamma = std::min(gamma, std::sqrt(k * n * std::log(t) / ls));
      }
      return Regularizer::entropy_log_barrier(eta, gamma);
    }
    case TuneTarget::bobw:
      return Regularizer::entropy_tsallis(n_arms, block_len, n_agents);
  }
  throw Error(Errc::bad_params, "tune_rates: unknown target");
}

VectorXd solve_entropy(const VectorXd& cum_loss, double eta) {
  if (!(eta > 0)) throw Error(Errc::bad_params, "solve_entropy: eta must be positive");
  if (cum_loss.size() < 1) throw Error(Errc::bad_params, "solve_entropy: empty loss vector");
  VectorXd x = -eta * cum_loss;
  const double shift = x.maxCoeff();
  VectorXd q = (x.array() - shift).exp();
  q /= q.sum();
  return q;
}

namespace {

// Stationarity of the eta-scaled hybrid objective in u = log q:
//   barrier: g(u) = 1 + u - c e^{-u},   c = eta/gamma
//   tsallis: g(u) = 1 + u - c e^{-u/2}, c = eta/gamma_t
// g is strictly increasing and concave in u.
struct CoordFn {
  double c = 0;
  bool half = false;  // tsallis uses exp(-u/2)

  double value(double u) const {
    const double e = half ? std::exp(-0.5 * u) : std::exp(-u);
    return 1.0 + u - c * e;
  }
  double deriv(double u) const {
    const double e = half ? std::exp(-0.5 * u) : std::exp(-u);
    return 1.0 + (half ? 0.5 : 1.0) * c * e;
  }
};

// Safeguarded Newton for g(u) = target inside a maintained bracket.
double solve_coordinate(const CoordFn& fn, double target) {
  // g(u) <= 1 + u, so u >= target - 1 at the root; g(u) >= 1 + u - c gives
  // the upper end. Clamp to keep exp() finite; roots below exp(-690) cannot
  // occur for the rate regimes the callers produce.
  double lo = std::max(target - 1.0, -690.0);
  double hi = std::min(std::max(target - 1.0 + fn.c, lo + 1e-12), 695.0);
  while (fn.value(lo) > target && lo > -690.0) {
    hi = lo;
    lo = std::max(lo - std::max(1.0, std::abs(lo)), -690.0);
  }
  while (fn.value(hi) < target) {
    lo = hi;
    hi += std::max(1.0, std::abs(hi));
    if (hi > 700.0) throw Error(Errc::solver_diverged, "coordinate bracket blew up");
  }
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = fn.value(u);
    if (g > target)
      hi = u;
    else
      lo = u;
    const double step = (g - target) / fn.deriv(u);
    double next = u - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    if (std::abs(next - u) <= 1e-15 * (1.0 + std::abs(u))) return next;
    u = next;
  }
  return u;
}

}  // namespace

VectorXd solve_simplex_hybrid(const VectorXd& cum_loss, const Regularizer& reg, long block) {
  if (reg.kind == RegularizerKind::neg_entropy)
    return solve_entropy(cum_loss, reg.eta_at(block));
  const Eigen::Index k = cum_loss.size();
  if (k < 1) throw Error(Errc::bad_params, "solve_simplex_hybrid: empty loss vector");
  const double eta = reg.eta_at(block);
  const double gamma = reg.gamma_at(block);
  if (!(eta > 0) || !(gamma > 0))
    throw Error(Errc::bad_params, "solve_simplex_hybrid: rates must be positive");

  CoordFn fn;
  fn.c = eta / gamma;
  fn.half = reg.kind == RegularizerKind::entropy_tsallis;

  const VectorXd scaled = eta * cum_loss;
  const double at_uniform = fn.value(-std::log(static_cast<double>(k)));
  // nu bracket: at nu_hi every coordinate is >= 1/K, at nu_lo every one <= 1/K.
  double nu_lo = scaled.minCoeff() + at_uniform;
  double nu_hi = scaled.maxCoeff() + at_uniform;
  VectorXd u(k), q(k);

  auto eval = [&](double nu) {
    double sum = 0.0, dsum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      u[j] = solve_coordinate(fn, nu - scaled[j]);
      q[j] = std::exp(u[j]);
      sum += q[j];
      dsum += q[j] / fn.deriv(u[j]);
    }
    return std::pair<double, double>{sum - 1.0, dsum};
  };

  double nu = 0.5 * (nu_lo + nu_hi);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const auto [gap, slope] = eval(nu);
    if (std::abs(gap) <= 1e-13) {
      converged = true;
      break;
    }
    if (gap > 0)
      nu_hi = nu;
    else
      nu_lo = nu;
    double next = nu - gap / slope;
    if (!(next > nu_lo && next < nu_hi)) next = 0.5 * (nu_lo + nu_hi);
    if (next == nu) {
      converged = true;
      break;
    }
    nu = next;
  }
  if (!converged) {
    const auto [gap, slope] = eval(nu);
    (void)slope;
    if (std::abs(gap) > 1e-10)
      throw Error(Errc::solver_diverged, "hybrid simplex solver missed sum-to-one tolerance");
  }
  q /= q.sum();
  return q;
}

double kkt_residual(const VectorXd& q, const VectorXd& cum_loss, const Regularizer& reg,
                    long block) {
  if (q.size() != cum_loss.size()) throw Error(Errc::dim_mismatch, "kkt_residual");
  const double eta = reg.eta_at(block);
  const double gamma = reg.gamma_at(block);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    const double qj = q[j];
    if (!(qj > 0)) return std::numeric_limits<double>::infinity();
    double s = eta * cum_loss[j] + 1.0 + std::log(qj);
    switch (reg.kind) {
      case RegularizerKind::neg_entropy: break;
      case RegularizerKind::entropy_log_barrier: s -= (eta / gamma) / qj; break;
      case RegularizerKind::entropy_tsallis: s -= (eta / gamma) / std::sqrt(qj); break;
    }
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return (hi - lo) + std::abs(q.sum() - 1.0);
}

VectorXd ftrl_next(const FtrlState& state, long block) {
  switch (state.reg.kind) {
    case RegularizerKind::neg_entropy:
      return solve_entropy(state.cum_loss, state.reg.eta);
    case RegularizerKind::entropy_log_barrier:
    case RegularizerKind::entropy_tsallis:
      return solve_simplex_hybrid(state.cum_loss, state.reg, block);
  }
  throw Error(Errc::bad_params, "ftrl_next: unknown regularizer");
}

VectorXd DelayedWrapper::query(long tau) {
  if (tau != last_queried_ + 1)
    throw Error(Errc::out_of_order, "query for block " + std::to_string(tau) + " after block " +
                                        std::to_string(last_queried_));
  last_queried_ = tau;
  return ftrl_next(instances_[tau & 1], tau);
}

void DelayedWrapper::feed(long block, const VectorXd& z) {
  if (block <= last_fed_)
    throw Error(Errc::duplicate_feedback, "block " + std::to_string(block) + " already fed");
  if (block != last_fed_ + 1 || block != last_queried_ - 1)
    throw Error(Errc::out_of_order, "feed for block " + std::to_string(block) +
                                        " while at block " + std::to_string(last_queried_));
  FtrlState& inst = instances_[block & 1];
  if (inst.cum_loss.size() != z.size())
    throw Error(Errc::dim_mismatch, "feedback dimension mismatch");
  inst.cum_loss += z;
  ++inst.feedback_count;
  last_fed_ = block;
}

}  // namespace dbandit
