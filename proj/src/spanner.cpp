#include "dbandit/spanner.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace dbandit {

ActionSet ActionSet::from_matrix(const MatrixXd& vectors) {
  if (vectors.rows() < 2) throw Error(Errc::bad_params, "action set needs K >= 2");
  if (!vectors.allFinite()) throw Error(Errc::bad_params, "action set has non-finite entries");
  ActionSet omega;
  omega.vectors = vectors;
  omega.ambient_dim = static_cast<int>(vectors.cols());
  Eigen::JacobiSVD<MatrixXd> svd(vectors, Eigen::ComputeThinV);
  const VectorXd sv = svd.singularValues();
  const double tol = std::max(vectors.rows(), vectors.cols()) * 1e-13 *
                     (sv.size() > 0 ? sv[0] : 0.0);
  int rank = 0;
  for (Eigen::Index j = 0; j < sv.size(); ++j)
    if (sv[j] > tol) ++rank;
  if (rank == 0) throw Error(Errc::rank_deficient, "action set spans only the origin");
  omega.effective_dim = rank;
  omega.basis = svd.matrixV().leftCols(rank);
  omega.coords = vectors * omega.basis;
  return omega;
}

ActionSet ActionSet::read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    double v = 0;
    while (ss >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(Errc::io_error, "action set CSV: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw Error(Errc::io_error, "action set CSV: need at least 2 rows");
  MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return from_matrix(m);
}

ActionSet ActionSet::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return read_csv(in);
}

MatrixXd VolumetricSpanner::member_coords(const ActionSet& omega) const {
  MatrixXd s(member_indices.size(), omega.effective_dim);
  for (size_t j = 0; j < member_indices.size(); ++j)
    s.row(j) = omega.coords.row(member_indices[j]);
  return s;
}

namespace {

// Quadratic forms a_k' (S S')^+ a_k in span coordinates for every action.
VectorXd quadratic_forms(const MatrixXd& coords, const std::vector<int>& members) {
  const int r = static_cast<int>(coords.cols());
  MatrixXd gram = MatrixXd::Zero(r, r);
  for (int idx : members) gram += coords.row(idx).transpose() * coords.row(idx);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(gram);
  VectorXd forms(coords.rows());
  for (Eigen::Index k = 0; k < coords.rows(); ++k) {
    const VectorXd a = coords.row(k).transpose();
    forms[k] = a.dot(cod.solve(a));
  }
  return forms;
}

// Greedy determinant-maximizing basis of size = effective rank, followed by
// local-search swaps while they still grow the volume.
std::vector<int> volume_basis(const MatrixXd& coords) {
  const int r = static_cast<int>(coords.cols());
  const int k = static_cast<int>(coords.rows());
  std::vector<int> members;
  MatrixXd x = MatrixXd::Identity(r, r);
  std::vector<char> used(k, 0);
  for (int slot = 0; slot < r; ++slot) {
    double best_vol = -1.0;
    int best_row = -1;
    for (int cand = 0; cand < k; ++cand) {
      if (used[cand]) continue;
      x.row(slot) = coords.row(cand);
      const double vol = std::abs(x.determinant());
      if (vol > best_vol) {
        best_vol = vol;
        best_row = cand;
      }
    }
    x.row(slot) = coords.row(best_row);
    used[best_row] = 1;
    members.push_back(best_row);
  }
  double volume = std::abs(x.determinant());
  for (int pass = 0; pass < 8 * r; ++pass) {
    bool improved = false;
    for (int slot = 0; slot < r && !improved; ++slot) {
      const Eigen::RowVectorXd saved = x.row(slot);
      for (int cand = 0; cand < k; ++cand) {
        if (used[cand]) continue;
        x.row(slot) = coords.row(cand);
        const double vol = std::abs(x.determinant());
        if (vol > 1.01 * volume) {
          used[members[slot]] = 0;
          used[cand] = 1;
          members[slot] = cand;
          volume = vol;
          improved = true;
          break;
        }
      }
      if (!improved) x.row(slot) = saved;
    }
    if (!improved) break;
  }
  std::sort(members.begin(), members.end());
  return members;
}

}  // namespace

void certify_spanner(VolumetricSpanner& s, const ActionSet& omega) {
  const MatrixXd coords_s = s.member_coords(omega);  // |S| x r
  // Min-norm lambda: solve (S' lambda = a) through the pseudo-inverse.
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(coords_s.transpose());
  const int k = omega.n_arms();
  s.lambda = MatrixXd::Zero(k, s.size());
  double max_c = 0, max_res = 0;
  for (int idx = 0; idx < k; ++idx) {
    const VectorXd a = omega.coords.row(idx).transpose();
    const VectorXd lam = cod.solve(a);
    s.lambda.row(idx) = lam.transpose();
    max_c = std::max(max_c, lam.norm());
    max_res = std::max(max_res, (coords_s.transpose() * lam - a).norm());
  }
  s.spanner_constant = max_c;
  s.reconstruction_residual = max_res;
  s.max_quadratic_form = quadratic_forms(omega.coords, s.member_indices).maxCoeff();
  s.certified = max_c <= 1.0 + 1e-9 && max_res <= 1e-9;
}

VolumetricSpanner compute_spanner(const ActionSet& omega, int size_cap, bool strict) {
  if (size_cap < 0) size_cap = 3 * omega.effective_dim;
  if (size_cap < omega.effective_dim)
    throw Error(Errc::bad_params, "size cap below the effective dimension");

  VolumetricSpanner s;
  s.member_indices = volume_basis(omega.coords);
  while (true) {
    const VectorXd forms = quadratic_forms(omega.coords, s.member_indices);
    int worst = -1;
    double worst_form = 1.0 + 1e-9;
    for (Eigen::Index k = 0; k < forms.size(); ++k) {
      const bool member =
          std::binary_search(s.member_indices.begin(), s.member_indices.end(), static_cast<int>(k));
      if (!member && forms[k] > worst_form) {
        worst_form = forms[k];
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) break;
    if (s.size() >= size_cap) {
      if (strict) throw Error(Errc::size_cap_exceeded, "no certified spanner within the size cap");
      break;
    }
    s.member_indices.insert(
        std::upper_bound(s.member_indices.begin(), s.member_indices.end(), worst), worst);
  }
  certify_spanner(s, omega);
  return s;
}

SpannerReport spanner_certificate(const std::vector<int>& members, const ActionSet& omega) {
  VolumetricSpanner s;
  s.member_indices = members;
  std::sort(s.member_indices.begin(), s.member_indices.end());
  certify_spanner(s, omega);
  SpannerReport report;
  report.max_quadratic_form = s.max_quadratic_form;
  report.spanner_constant = s.spanner_constant;
  report.reconstruction_residual = s.reconstruction_residual;
  report.certified = s.certified;
  return report;
}

std::vector<int> exhaustive_spanner_oracle(const ActionSet& omega, int size_cap) {
  const int k = omega.n_arms();
  if (k > 20) throw Error(Errc::bad_params, "exhaustive oracle is for small K only");
  std::vector<int> best;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > size_cap) continue;
    if (!best.empty() && size >= static_cast<int>(best.size())) continue;
    std::vector<int> members;
    for (int j = 0; j < k; ++j)
      if (mask & (1u << j)) members.push_back(j);
    const SpannerReport report = spanner_certificate(members, omega);
    if (report.certified) best = members;
  }
  return best;
}

void save_spanner(const VolumetricSpanner& s, const std::string& prefix) {
  {
    std::ofstream out(prefix + "_members.txt");
    if (!out) throw Error(Errc::io_error, "cannot open " + prefix + "_members.txt");
    for (int idx : s.member_indices) out << idx + 1 << "\n";
  }
  std::ofstream out(prefix + "_lambda.csv");
  if (!out) throw Error(Errc::io_error, "cannot open " + prefix + "_lambda.csv");
  out.precision(17);
  for (Eigen::Index i = 0; i < s.lambda.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.lambda.cols(); ++j) {
      if (j) out << ",";
      out << s.lambda(i, j);
    }
    out << "\n";
  }
}

}  // namespace dbandit
