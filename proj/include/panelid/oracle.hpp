#pragma once

#include "panelid/dgp.hpp"
#include "panelid/model.hpp"

#include <cstdint>
#include <vector>

namespace panelid {

struct FeasibilityGrid {
  VectorXd alpha_grid = VectorXd::LinSpaced(401, -8.0, 8.0);
  double tol_feas = 1e-6;

  void validate() const;
};

struct NnlsResult {
  VectorXd x;
  double residual = 0.0; // ||A x - b||
  int iterations = 0;
  bool converged = false;
};

/// Lawson-Hanson active set method for min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const MatrixXd& A, const VectorXd& b, int max_iter = 0);

struct CellFeasibility {
  std::size_t x_index = 0;
  int y0 = 0;
  bool feasible = false;
  double residual = 0.0; // ||P - L pi||
  VectorXd weights;      // on the alpha grid
};

struct Feasibility {
  bool feasible = false;
  double residual = 0.0; // worst cell
  std::vector<CellFeasibility> cells;
};

/// Is there a mixture on the alpha grid reproducing every cell of P at theta?
Feasibility feasibility_check(const ModelSpec& spec, const Theta& th, const PopulationProbs& P,
                              const FeasibilityGrid& grid = {});

struct Reconstruction {
  VectorXd support; // A values
  VectorXd weights;
  bool nonnegative = false;
  int attempts = 1;
};

/// Discrete Q with the given support whose generalized moments equal r.
/// Weights count as nonnegative down to a condition-scaled forward error bound.
/// Negative weights trigger up to 32 random supports; the best attempt is returned.
Reconstruction reconstruct_Q(const Representation& rep, const VectorXd& r, const VectorXd& support,
                             std::uint64_t seed = 0);

/// P implied by a discrete mixture over A values.
VectorXd mixture_probs(const Representation& rep, const VectorXd& support, const VectorXd& weights);

} // namespace panelid
