#pragma once

#include "panelid/equalities.hpp"
#include "panelid/inequalities.hpp"

#include <string>
#include <vector>

namespace panelid {

enum class SetKind { Empty, Point, FiniteSet, Interval, GridRegion, Curve };

const char* to_string(SetKind k);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

struct GridCell {
  VectorXd params;
  bool member = false;
  bool boundary = false; // member with a non-member grid neighbour
  double min_slack = 0.0;
  std::string binding;
};

struct IdentifiedSet {
  SetKind kind = SetKind::Empty;
  std::vector<Theta> members;  // Point / FiniteSet, and grid members
  std::vector<Interval> bounds; // per parameter of flatten(theta); bounding box for grids
  Interval B;                   // closed-form interval for exp(beta) (T = 2)
  int beta_sign = 0;
  std::vector<GridCell> cells;  // every evaluated grid node, sorted
  std::vector<int> scanned;     // coordinates varied by the grid
  std::vector<Polyline> curves; // equality solutions left as curves
  std::string provenance;
  std::string diagnostic;

  bool empty() const { return kind == SetKind::Empty; }
};

/// Closed-form sharp bounds for B with T = 2, no covariates, y0 = 0.
/// `p` is in canonical order (00),(01),(10),(11).
IdentifiedSet sharp_bounds_T2(const VectorXd& p);

IdentifiedSet filter_roots(const RootSet& roots, const ModelSpec& spec, const PopulationProbs& P,
                           const MembershipOptions& opt = {});

struct GridOptions {
  double step = 0.01;
  MembershipOptions membership;
  /// pin coordinates fixed by catalogued closed-form equalities before scanning
  bool pin_equalities = true;
};

/// Membership over a regular grid of the box, intersected across all cells of P.
IdentifiedSet grid_identify(const ModelSpec& spec, const PopulationProbs& P, const SearchBox& box,
                            const GridOptions& opt = {});

} // namespace panelid
