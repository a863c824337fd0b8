#pragma once

#include "panelid/dgp.hpp"
#include "panelid/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace panelid {

struct NullBasis {
  MatrixXd vectors; // columns, orthonormal, length 2^T
  double tol_rank = 0.0;
  Eigen::Index rank = 0;

  Eigen::Index dim() const { return vectors.cols(); }
};

/// Orthonormal basis of {v : v'G = 0} from the full SVD of G. Rank-deficient G
/// throws DegenerateModel unless allow_degenerate is set.
NullBasis left_null_basis(const Representation& rep, bool allow_degenerate = false);

/// v'P over the basis of every supplied (x, y0) cell, concatenated in cell order.
VectorXd equality_residuals(const ModelSpec& spec, const Theta& th, const PopulationProbs& P,
                            bool allow_degenerate = false);

/// Box in parameter space, one [lo, hi] per free coordinate.
struct SearchBox {
  VectorXd lo, hi;
  static SearchBox cube(Eigen::Index k, double lo, double hi) {
    return {VectorXd::Constant(k, lo), VectorXd::Constant(k, hi)};
  }
  bool contains(const VectorXd& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct RootCandidate {
  Theta theta;
  double residual = 0.0;
  std::vector<int> free_params; // coordinates of flatten(theta) the equalities leave open
  std::string note;
};

struct Polyline {
  std::vector<VectorXd> vertices; // full parameter vectors
};

struct RootSet {
  std::vector<RootCandidate> candidates;
  std::vector<Polyline> curves;
  std::string method;
  std::string diagnostic;
  SearchBox box;
};

struct NumericOptions {
  double step = 0.01;
  double trivial_radius = 1e-3;
  double newton_tol = 1e-12;
  int newton_iters = 50;
  double fd_step = 1e-6;
  double accept_tol = 1e-8;
  double dedupe_tol = 1e-5;
};

/// Catalogued closed forms; nullopt when the spec is not one of them.
std::optional<RootSet> solve_closed_forms(const ModelSpec& spec, const PopulationProbs& P);

RootSet solve_numeric(const ModelSpec& spec, const PopulationProbs& P, const SearchBox& box,
                      const NumericOptions& opt = {});

/// Closed forms when catalogued, numeric otherwise.
RootSet solve_equalities(const ModelSpec& spec, const PopulationProbs& P, const SearchBox& box,
                         const NumericOptions& opt = {});

// Root finding on generic smooth systems. F maps R^k to R^k (k = 1 or 2).
using SystemFn = std::function<VectorXd(const VectorXd&)>;

struct ScanResult {
  std::vector<VectorXd> roots;
  std::vector<double> residuals;
  std::size_t candidates = 0;
};

/// Sign scan of `scan` on a regular grid, then Newton on `refine` (defaults to scan)
/// from every cell where all components change sign.
ScanResult grid_scan_roots(const SystemFn& scan, const SystemFn& refine, const SearchBox& box,
                           const NumericOptions& opt,
                           const std::function<bool(const VectorXd&)>& accept = {});

/// Newton with a central-difference Jacobian. Returns the final point and residual norm.
std::pair<VectorXd, double> newton_fd(const SystemFn& F, VectorXd x, const NumericOptions& opt);

/// Zero contour of a scalar field on a 2-D grid as polylines (marching squares).
std::vector<std::vector<Eigen::Vector2d>> marching_squares(const std::function<double(const Eigen::Vector2d&)>& f,
                                                           const SearchBox& box, double step);

namespace time_dummies {

/// Reduced T = 3 time-dummy equalities. p is indexed in the order
/// (111),(110),(101),(100),(011),(010),(001),(000) as p[1..8].
struct Reduced {
  static double B_initial0(const VectorXd& p, double C, double D);
  static double B_initial1(const VectorXd& p, double C, double D);
  /// y0 = 0 remaining equation, multiplied by its pole so it is polynomial in (B, C, D).
  static double F0(const VectorXd& p, double C, double D);
  /// y0 = 1 remaining equation after eliminating B with the y0 = 1 rule, times B.
  static double F1(const VectorXd& p, double C, double D);
};

/// Reorders a canonical probability vector into the 1-based layout above.
VectorXd reference_layout(const VectorXd& canonical);

} // namespace time_dummies

} // namespace panelid
