#pragma once

#include "panelid/polynomial.hpp"
#include "panelid/types.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace panelid {

enum class Family { AR1, AR2 };
enum class CovariateKind { None, Series, TimeTrend, TimeDummies };

struct ModelSpec {
  Family family = Family::AR1;
  int T = 2;
  CovariateKind covariates = CovariateKind::None;
  std::vector<VectorXd> support_X; // each of length T; empty for None
  int y0 = 0;
  int y_minus1 = 0; // AR2 only

  int n_beta() const { return family == Family::AR2 ? 2 : 1; }
  int n_gamma() const {
    switch (covariates) {
    case CovariateKind::None: return 0;
    case CovariateKind::TimeDummies: return T - 1;
    default: return 1;
    }
  }
  int n_params() const { return n_beta() + n_gamma(); }
  /// Number of covariate cells; a model without covariates has a single empty cell.
  std::size_t n_support() const { return support_X.empty() ? 1 : support_X.size(); }
  VectorXd x_at(std::size_t i) const { return support_X.empty() ? VectorXd() : support_X.at(i); }
};

/// Throws InputError on inconsistent fields; fills the implicit time-trend support.
ModelSpec normalized(ModelSpec spec);
ModelSpec with_initial(ModelSpec spec, int y0);

struct Theta {
  VectorXd beta;
  VectorXd gamma;
};

Theta make_theta(std::initializer_list<double> beta, std::initializer_list<double> gamma = {});
VectorXd flatten(const Theta& th);
Theta unflatten(const ModelSpec& spec, const VectorXd& v);
void check_theta(const ModelSpec& spec, const Theta& th);

using History = std::vector<int>;

std::vector<History> enumerate_histories(int T);
std::uint32_t history_code(const History& h);
std::string history_string(const History& h);
History parse_history(const std::string& s);

/// Graded: by number of ones, ties by descending code. Descending: reverse canonical.
enum class HistoryOrder { Canonical, Graded, Descending };

/// perm[i] is the canonical index of the i-th history in the requested order.
std::vector<std::size_t> order_permutation(int T, HistoryOrder order);

inline VectorXd to_order(const VectorXd& canonical, const std::vector<std::size_t>& perm) {
  VectorXd out(canonical.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(Eigen::Index(i)) = canonical(Eigen::Index(perm[i]));
  return out;
}
inline VectorXd from_order(const VectorXd& ordered, const std::vector<std::size_t>& perm) {
  VectorXd out(ordered.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(Eigen::Index(perm[i])) = ordered(Eigen::Index(i));
  return out;
}
inline MatrixXd rows_to_order(const MatrixXd& canonical, const std::vector<std::size_t>& perm) {
  MatrixXd out(canonical.rows(), canonical.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(Eigen::Index(i)) = canonical.row(Eigen::Index(perm[i]));
  return out;
}

namespace detail {

/// Covariate index gamma'x_t per period (t = 1..T).
VectorXd period_index(const ModelSpec& spec, const Theta& th, const VectorXd& x);

/// Label that decides when two periods share a likelihood denominator factor.
std::vector<double> period_class(const ModelSpec& spec, const VectorXd& x);

struct PeriodTerm {
  int state;     // lag configuration entering period t
  double lag;    // beta'(lagged outcomes)
};

PeriodTerm period_term(const ModelSpec& spec, const Theta& th, const History& h, int t);

bool degenerate_theta(const ModelSpec& spec, const Theta& th, const VectorXd& x, std::string* why);

} // namespace detail

template <typename Scalar>
Scalar likelihood_direct(const ModelSpec& spec, const Theta& th, const VectorXd& x,
                         const History& h, Scalar A) {
  const VectorXd z = detail::period_index(spec, th, x);
  Scalar L(1);
  for (int t = 1; t <= spec.T; ++t) {
    const auto term = detail::period_term(spec, th, h, t);
    const Scalar e = A * Scalar(std::exp(term.lag + z(t - 1)));
    L *= (h[t - 1] ? e : Scalar(1)) / (Scalar(1) + e);
  }
  return L;
}

template <typename Scalar>
struct BasicRepresentation {
  struct Factor {
    int state;
    double period_class;
    Scalar c; // factor is 1 + c*A
    int power;
  };

  Mat<Scalar> G;
  Polynomial<Scalar> g;
  std::vector<History> histories;
  Eigen::Index d = 0;
  std::vector<Factor> factors; // g = prod (1 + c A)^power
  bool rank_deficient = false;
  std::string warning;

  ModelSpec spec;
  Theta theta;
  VectorXd x;

  Eigen::Index n_hist() const { return G.rows(); }
};

using Representation = BasicRepresentation<double>;

/// Theta-free structure of the representation for one (spec, x). Each history
/// likelihood is a monomial over a product of factors (1 + A c), one per period.
/// Factors are keyed by (lag state, period class); g takes every key at the largest
/// multiplicity any history needs, which yields the minimal common denominator.
struct RepresentationPattern {
  struct Key {
    int state;
    double period_class;
    int period; // a period carrying this key, for the covariate index
  };
  ModelSpec spec;
  VectorXd x;
  std::vector<Key> keys;
  std::vector<int> power;                   // multiplicity in g
  std::vector<History> histories;
  std::vector<int> ones;                    // sum of y per history
  std::vector<std::vector<int>> numerator;  // key index of every period with y_t = 1
  std::vector<std::vector<int>> cofactor;   // per history and key: power - own multiplicity
  Eigen::Index d = 0;

  Eigen::Index n_hist() const { return Eigen::Index(histories.size()); }
};

RepresentationPattern make_pattern(const ModelSpec& spec, const VectorXd& x = VectorXd());

namespace detail {
/// Factor constants c_k = exp(lag(state) + z_period) for every key.
VectorXd factor_constants(const RepresentationPattern& pat, const Theta& th);
} // namespace detail

/// Pattern for a degenerate theta: keys whose factor constants coincide (B = 1, C = 1)
/// are merged, which restores full column rank of G at a lower degree of g.
RepresentationPattern merge_coincident(const RepresentationPattern& pat, const Theta& th, double rel_tol = 1e-12);

/// Writes G (n_hist x (d+1)) for theta; allocation-light kernel used by scans.
template <typename Scalar>
void fill_G(const RepresentationPattern& pat, const Theta& th, Mat<Scalar>& G) {
  const VectorXd cd = detail::factor_constants(pat, th);
  const Eigen::Index n = pat.d + 1;
  G.setZero(pat.n_hist(), n);
  Vec<Scalar> row(n);
  for (Eigen::Index j = 0; j < pat.n_hist(); ++j) {
    row.setZero();
    Scalar num(1);
    for (int k : pat.numerator[std::size_t(j)]) num *= Scalar(cd(k));
    row(pat.ones[std::size_t(j)]) = num;
    Eigen::Index top = pat.ones[std::size_t(j)];
    const auto& cof = pat.cofactor[std::size_t(j)];
    for (std::size_t k = 0; k < cof.size(); ++k) {
      const Scalar c(cd(Eigen::Index(k)));
      for (int rep = 0; rep < cof[k]; ++rep) {
        ++top;
        for (Eigen::Index i = top; i >= 1; --i) row(i) += c * row(i - 1);
      }
    }
    G.row(j) = row.transpose();
  }
}

template <typename Scalar = double>
BasicRepresentation<Scalar> build_representation(const RepresentationPattern& pat, const Theta& th) {
  check_theta(pat.spec, th);
  BasicRepresentation<Scalar> rep;
  rep.spec = pat.spec;
  rep.theta = th;
  rep.x = pat.x;
  rep.histories = pat.histories;
  rep.d = pat.d;
  fill_G(pat, th, rep.G);
  const VectorXd cd = detail::factor_constants(pat, th);
  rep.g = Polynomial<Scalar>::constant(Scalar(1));
  for (std::size_t k = 0; k < pat.keys.size(); ++k) {
    rep.factors.push_back({pat.keys[k].state, pat.keys[k].period_class, Scalar(cd(Eigen::Index(k))), pat.power[k]});
    rep.g *= pow(Polynomial<Scalar>::linear(Scalar(cd(Eigen::Index(k)))), pat.power[k]);
  }
  rep.rank_deficient = detail::degenerate_theta(pat.spec, th, pat.x, &rep.warning);
  return rep;
}

template <typename Scalar = double>
BasicRepresentation<Scalar> build_representation(const ModelSpec& spec, const Theta& th,
                                                 const VectorXd& x = VectorXd()) {
  return build_representation<Scalar>(make_pattern(spec, x), th);
}

template <typename Scalar = double>
Polynomial<Scalar> denominator_g(const ModelSpec& spec, const Theta& th, const VectorXd& x = VectorXd()) {
  return build_representation<Scalar>(spec, th, x).g;
}

/// Likelihood vector over canonical histories via G V(A) / g(A).
template <typename Scalar>
Vec<Scalar> likelihood_vector(const BasicRepresentation<Scalar>& rep, Scalar A) {
  return rep.G * powers(A, rep.d) / rep.g(A);
}

} // namespace panelid
