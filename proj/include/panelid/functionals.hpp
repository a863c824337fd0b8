#pragma once

#include "panelid/dgp.hpp"
#include "panelid/idset.hpp"
#include "panelid/inequalities.hpp"

#include <optional>
#include <string>

namespace panelid {

enum class FunctionalKind { AME_NoCov, AME_Cov, PosteriorMeanA, CounterfactualNoDynamics };

const char* to_string(FunctionalKind k);
FunctionalKind parse_functional_kind(const std::string& s);

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::AME_NoCov;
  /// AME_Cov: covariate value x~ at which the effect is taken. It must equal x_t
  /// for some t >= 2; for time dummies and trends it is the period itself.
  std::optional<double> x_tilde;
  History history;        // PosteriorMeanA and CounterfactualNoDynamics
  std::size_t x_index = 0; // covariate cell of the moments
  int y0 = 0;
};

struct EtaVector {
  VectorXd eta;              // psi(A) g(A) = sum_j eta_j A^j
  bool divide_by_P = false;  // posterior means condition on a history
  Eigen::Index history_index = -1; // canonical index of that history
};

/// Coefficients of psi * g. Throws InadmissibleFunctional naming the violated condition.
EtaVector eta_vector(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th,
                     const VectorXd& x = VectorXd());

/// psi(A) evaluated directly, used by the mixture oracle.
double functional_psi(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th, const VectorXd& x, double A);

/// eta' r, divided by P_j for posterior means.
double functional_point_value(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th, const VectorXd& x,
                              const VectorXd& r, const VectorXd& p);

/// E_Q[psi] from the mixture itself.
double functional_truth(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th,
                        const DiscreteMixture& mix, const VectorXd& x = VectorXd());

struct FunctionalEval {
  double value = 0.0;
  Theta theta;
  VectorXd eta;
  VectorXd r;
};

struct FunctionalBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool point = false;
  std::size_t evaluated = 0;
  FunctionalEval at_lo, at_hi;
};

/// eta' r at one theta for the (x_index, y0) cell of P.
FunctionalEval evaluate_functional(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th,
                                   const PopulationProbs& P);

/// inf / sup of eta' r over the identified set; intervals are refined on 64 points.
FunctionalBounds functional_bounds(const FunctionalSpec& f, const ModelSpec& spec, const IdentifiedSet& set,
                                   const PopulationProbs& P);

} // namespace panelid
