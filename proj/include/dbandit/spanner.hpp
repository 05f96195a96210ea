#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dbandit/types.hpp"

namespace dbandit {

// Finite action set: rows of `vectors` are the K feature vectors a_1..a_K.
// All linear algebra downstream of this type runs inside span(Omega): `basis`
// is an orthonormal basis of the span, `coords` the actions expressed in it.
struct ActionSet {
  MatrixXd vectors;  // K x d (ambient)
  MatrixXd basis;    // d x r, orthonormal columns
  MatrixXd coords;   // K x r, vectors * basis
  int ambient_dim = 0;
  int effective_dim = 0;

  int n_arms() const { return static_cast<int>(vectors.rows()); }

  static ActionSet from_matrix(const MatrixXd& vectors);
  // CSV, K rows by d comma-separated columns.
  static ActionSet load_csv(const std::string& path);
  static ActionSet read_csv(std::istream& in);
};

// S subset of Omega with reconstruction coefficients lambda^{(k)} (min-norm
// solutions of S lambda = a_k). Certified when every ||lambda^{(k)}||_2 <= 1.
struct VolumetricSpanner {
  std::vector<int> member_indices;      // into Omega, ascending
  MatrixXd lambda;                      // K x |S|
  double spanner_constant = 0;          // c = max_k ||lambda^{(k)}||_2
  double reconstruction_residual = 0;   // max_k ||a_k - S lambda^{(k)}||_2
  double max_quadratic_form = 0;        // max_k a_k' (S S')^+ a_k (span coords)
  bool certified = false;

  int size() const { return static_cast<int>(member_indices.size()); }
  // |S| x r matrix of member coordinates.
  MatrixXd member_coords(const ActionSet& omega) const;
};

// Pipeline: determinant-maximizing basis of size = effective rank, then
// greedy augmentation by the worst quadratic form until every action is
// covered (a' (SS')^+ a <= 1) or the size cap is reached. With strict on,
// hitting the cap uncovered raises SIZE_CAP_EXCEEDED; otherwise the result
// is returned uncertified.
VolumetricSpanner compute_spanner(const ActionSet& omega, int size_cap = -1, bool strict = false);

struct SpannerReport {
  double max_quadratic_form = 0;
  double spanner_constant = 0;
  double reconstruction_residual = 0;
  bool certified = false;
};

// Independent re-derivation of the certificate from the member set alone
// (pseudo-inverse route), usable against any candidate member list.
SpannerReport spanner_certificate(const std::vector<int>& members, const ActionSet& omega);

// Fills lambda/constants of a spanner whose member_indices are already set.
void certify_spanner(VolumetricSpanner& s, const ActionSet& omega);

// Exhaustive search over all member subsets of size <= cap; returns the best
// certified subset or empty if none certifies. Intended for small K, d only.
std::vector<int> exhaustive_spanner_oracle(const ActionSet& omega, int size_cap);

// Index list (1-based, one per line) and lambda matrix CSV.
void save_spanner(const VolumetricSpanner& s, const std::string& prefix);

}  // namespace dbandit
