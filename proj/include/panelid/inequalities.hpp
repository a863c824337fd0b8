#pragma once

#include "panelid/dgp.hpp"
#include "panelid/model.hpp"

#include <string>
#include <vector>

namespace panelid {

/// n x n Hankel matrix with entries c(offset + i + j).
template <typename Derived>
Mat<typename Derived::Scalar> hankel(const Eigen::MatrixBase<Derived>& c, Eigen::Index offset, Eigen::Index n) {
  Mat<typename Derived::Scalar> H(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) H(i, j) = c(offset + i + j);
  return H;
}

struct MomentVector {
  VectorXd r;
  Theta theta;
  VectorXd x;
  int y0 = 0;
};

struct MembershipReport {
  bool is_member = false;
  double min_eig_H = 0.0;
  double min_eig_B = 0.0;
  double range_residual = 0.0;
  bool singular_case = false; // the range condition was checked
  double eps_psd = 0.0;
  double eps_range = 0.0;
};

/// Truncated Stieltjes moment space test for c_0..c_m (m >= 1).
MembershipReport stieltjes_membership(const VectorXd& r, double slack = 0.0);

/// Moore-Penrose left inverse; throws DegenerateModel on rank deficiency.
MatrixXd build_H(const Representation& rep, bool allow_degenerate = false);

/// Rows of G forming a well-conditioned square block (column-pivoted QR of G').
std::vector<Eigen::Index> pivot_rows(const Representation& rep);

/// H = G_I^{-1} scattered into the columns of the selected rows I, via LU.
MatrixXd build_H_lu(const Representation& rep, const std::vector<Eigen::Index>& rows, bool allow_degenerate = false);

MomentVector moment_vector(const Representation& rep, const MatrixXd& H, const VectorXd& p);

struct CellMembership {
  std::size_t x_index = 0;
  int y0 = 0;
  MomentVector moments;
  MembershipReport report;
  double eq_residual = 0.0;
  bool eq_ok = true;
  bool degenerate = false;
};

struct ThetaMembership {
  bool member = false;
  std::vector<CellMembership> cells;
  double min_slack = 0.0;  // smallest Hankel eigenvalue over all cells
  std::string binding;     // which matrix attains it
};

struct MembershipOptions {
  double eq_tol = 1e-8;
  double psd_slack = 0.0;
  bool allow_degenerate = false;
};

/// Equalities and Hankel conditions for every supplied (x, y0) cell.
ThetaMembership theta_membership(const ModelSpec& spec, const Theta& th, const PopulationProbs& P,
                                 const MembershipOptions& opt = {});

/// Same, reusing prebuilt patterns (one per cell of P, in order).
ThetaMembership theta_membership(const std::vector<RepresentationPattern>& patterns, const Theta& th,
                                 const PopulationProbs& P, const MembershipOptions& opt = {});

std::vector<RepresentationPattern> cell_patterns(const ModelSpec& spec, const PopulationProbs& P);

} // namespace panelid
