#pragma once

#include <cmath>
#include <optional>

#include "dbandit/graph.hpp"
#include "dbandit/types.hpp"

namespace dbandit {

// Mixing coefficient kappa = 1/(1 + sqrt(1 - sigma2^2)).
double mixing_coefficient(double sigma2);

struct GossipParams {
  double kappa = 0.5;
  int block_len_b = 1;
  double sigma2 = 0;
  bool overridden = false;
  bool warn_b_exceeds_t = false;
};

// B = ceil( ln((KT)^6 sqrt(14 N)) / ((1 - 1/sqrt 2) sqrt(1 - sigma2)) ),
// kappa as above. An override replaces B and voids the theory guarantee.
GossipParams block_length(int n_arms, long horizon, int n_agents, double sigma2,
                          std::optional<int> override_b = std::nullopt);

// Two-term gossip iterate over per-agent row vectors: row i of `curr` is the
// current vector of agent i. Scalar is a template parameter so the harness can
// run the iteration in extended precision while the rest of the pipeline stays
// in double.
template <typename Scalar>
struct GossipBuffer {
  Matrix<Scalar> prev;  // x^{b-1}
  Matrix<Scalar> curr;  // x^{b}
  long step_index = 0;

  int n_agents() const { return static_cast<int>(curr.rows()); }
  int dim() const { return static_cast<int>(curr.cols()); }

  static GossipBuffer zero(int n_agents, int dim) {
    GossipBuffer buf;
    buf.prev = Matrix<Scalar>::Zero(n_agents, dim);
    buf.curr = buf.prev;
    return buf;
  }

  // Fresh block: x^{-1} = x^{0} = init.
  static GossipBuffer from_initial(const Matrix<Scalar>& init) {
    GossipBuffer buf;
    buf.prev = init;
    buf.curr = init;
    return buf;
  }
};

// One accelerated gossip step:
//   x^{b+1}(i) = (1+kappa) sum_j W(i,j) x^b(j) - kappa x^{b-1}(i).
// Every agent reads only the previous snapshot, so the update order within a
// step cannot change the result; the network average is preserved exactly in
// exact arithmetic.
template <typename Scalar>
void gossip_step(GossipBuffer<Scalar>& buf, const Matrix<Scalar>& weights, Scalar kappa) {
  if (weights.rows() != buf.curr.rows() || weights.cols() != buf.curr.rows() ||
      buf.prev.rows() != buf.curr.rows() || buf.prev.cols() != buf.curr.cols())
    throw Error(Errc::dim_mismatch, "gossip_step: buffer/matrix shapes disagree");
  Matrix<Scalar> next = (Scalar(1) + kappa) * (weights * buf.curr) - kappa * buf.prev;
  buf.prev = std::move(buf.curr);
  buf.curr = std::move(next);
  ++buf.step_index;
}

template <typename Scalar>
void run_block_gossip(GossipBuffer<Scalar>& buf, const Matrix<Scalar>& weights,
                      const GossipParams& params) {
  for (int b = 0; b < params.block_len_b; ++b) gossip_step(buf, weights, Scalar(params.kappa));
}

// max_i || x(i) - xbar ||_2 with xbar the network average of `curr`.
template <typename Scalar>
double consensus_error(const GossipBuffer<Scalar>& buf) {
  const Vector<Scalar> mean = buf.curr.colwise().mean();
  Scalar worst = 0;
  for (int i = 0; i < buf.n_agents(); ++i) {
    const Scalar err = (buf.curr.row(i).transpose() - mean).norm();
    if (err > worst) worst = err;
  }
  return static_cast<double>(worst);
}

// Frobenius distance to consensus; the quantity the geometric decay
// certificate sqrt(14) * (1 - (1 - 1/sqrt 2) sqrt(rho))^B controls.
template <typename Scalar>
double frobenius_gap(const Matrix<Scalar>& state) {
  const Vector<Scalar> mean = state.colwise().mean();
  return static_cast<double>((state.rowwise() - mean.transpose()).norm());
}

inline double gossip_decay_factor(double sigma2, int steps) {
  const double rate = 1.0 - (1.0 - 1.0 / std::sqrt(2.0)) * std::sqrt(1.0 - sigma2);
  return std::sqrt(14.0) * std::pow(rate, steps);
}

}  // namespace dbandit
