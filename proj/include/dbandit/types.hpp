#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dbandit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Extended-precision scalar used for the gossip iteration state. The consensus
// assertions compare against absolute tolerances down to 1e-12 while the
// iterates themselves can be of magnitude ~1e3, so the mean-drift introduced
// by plain double accumulation over a few hundred steps is not acceptable.
using gossip_real = long double;

enum class Errc {
  bad_params,
  unconnectable,
  degenerate,
  out_of_range,
  dim_mismatch,
  solver_diverged,
  missing_lstar,
  out_of_order,
  duplicate_feedback,
  floor_violation,
  bound_violation,
  rates_too_large,
  not_spd,
  rank_deficient,
  size_cap_exceeded,
  bad_spec,
  config_invalid,
  io_error,
  invariant_violation,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dbandit
