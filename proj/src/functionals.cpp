#include "panelid/functionals.hpp"

#include "panelid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace panelid {

const char* to_string(FunctionalKind k) {
  switch (k) {
  case FunctionalKind::AME_NoCov: return "ame_nocov";
  case FunctionalKind::AME_Cov: return "ame_cov";
  case FunctionalKind::PosteriorMeanA: return "posterior_mean_a";
  case FunctionalKind::CounterfactualNoDynamics: return "counterfactual_no_dynamics";
  }
  return "unknown";
}

FunctionalKind parse_functional_kind(const std::string& s) {
  for (auto k : {FunctionalKind::AME_NoCov, FunctionalKind::AME_Cov, FunctionalKind::PosteriorMeanA,
                 FunctionalKind::CounterfactualNoDynamics})
    if (s == to_string(k)) return k;
  throw InputError("unknown functional kind: " + s);
}

namespace {

Eigen::Index history_index(const ModelSpec& spec, const History& h) {
  if (int(h.size()) != spec.T) throw InputError("history length must equal T");
  return Eigen::Index(history_code(h));
}

// The AME period t >= 2 at which x_t equals x~.
int ame_period(const FunctionalSpec& f, const ModelSpec& spec, const VectorXd& x) {
  if (!f.x_tilde) throw InadmissibleFunctional("AME with covariates needs the evaluation value x~");
  const auto cls = detail::period_class(spec, x);
  for (int t = 2; t <= spec.T; ++t)
    if (std::abs(cls[std::size_t(t - 1)] - *f.x_tilde) <= 1e-12) return t;
  throw InadmissibleFunctional("x~ must be one of x_2..x_T of the conditioning cell; no representation otherwise");
}

// g with the listed (state, class) factors divided out once each.
Polynomial<double> g_without(const Representation& rep, const std::vector<std::pair<int, double>>& drop,
                             const char* what) {
  std::vector<int> power;
  for (const auto& fc : rep.factors) power.push_back(fc.power);
  for (const auto& [state, cls] : drop) {
    bool found = false;
    for (std::size_t k = 0; k < rep.factors.size(); ++k)
      if (rep.factors[k].state == state && rep.factors[k].period_class == cls && power[k] > 0) {
        --power[k];
        found = true;
        break;
      }
    if (!found) throw InadmissibleFunctional(std::string(what) + ": psi * g is not a polynomial of degree <= deg(g)");
  }
  auto out = Polynomial<double>::constant(1.0);
  for (std::size_t k = 0; k < rep.factors.size(); ++k)
    out *= pow(Polynomial<double>::linear(rep.factors[k].c), power[k]);
  return out;
}

void require_ar1(const ModelSpec& spec, const char* what) {
  if (spec.family != Family::AR1) throw InadmissibleFunctional(std::string(what) + " is defined for AR(1) models");
}

} // namespace

EtaVector eta_vector(const FunctionalSpec& f, const ModelSpec& spec_in, const Theta& th, const VectorXd& x) {
  const ModelSpec spec = normalized(spec_in);
  const Representation rep = build_representation(spec, th, x);
  const Eigen::Index n = rep.d + 1;
  const double B = std::exp(th.beta(0));
  EtaVector out;
  Polynomial<double> poly;
  switch (f.kind) {
  case FunctionalKind::AME_NoCov: {
    require_ar1(spec, "AME");
    if (spec.covariates != CovariateKind::None) throw InadmissibleFunctional("AME without covariates requested for a covariate model");
    poly = shift(g_without(rep, {{1, 0.0}, {0, 0.0}}, "AME"), 1) * (B - 1.0);
    break;
  }
  case FunctionalKind::AME_Cov: {
    require_ar1(spec, "AME");
    if (spec.covariates == CovariateKind::None) throw InadmissibleFunctional("AME with covariates requested for a model without them");
    const int t = ame_period(f, spec, x);
    const double cls = detail::period_class(spec, x)[std::size_t(t - 1)];
    const double e = std::exp(detail::period_index(spec, th, x)(t - 1));
    poly = shift(g_without(rep, {{1, cls}, {0, cls}}, "AME"), 1) * ((B - 1.0) * e);
    break;
  }
  case FunctionalKind::PosteriorMeanA: {
    const Eigen::Index j = history_index(spec, f.history);
    if (std::all_of(f.history.begin(), f.history.end(), [](int y) { return y == 1; }))
      throw InadmissibleFunctional("posterior mean of A is not identified for the all-ones history");
    if (rep.G(j, n - 1) != 0.0)
      throw InadmissibleFunctional("posterior mean: A * row of G exceeds deg(g)");
    out.eta = VectorXd::Zero(n);
    out.eta.tail(n - 1) = rep.G.row(j).head(n - 1).transpose();
    out.divide_by_P = true;
    out.history_index = j;
    return out;
  }
  case FunctionalKind::CounterfactualNoDynamics: {
    if (spec.y0 != 0) throw InadmissibleFunctional("counterfactual without dynamics requires y0 = 0");
    const Eigen::Index j = history_index(spec, f.history);
    const auto cls = detail::period_class(spec, x);
    const VectorXd z = detail::period_index(spec, th, x);
    std::vector<std::pair<int, double>> drop;
    double scale = 1.0;
    int ones = 0;
    for (int t = 1; t <= spec.T; ++t) {
      drop.push_back({0, cls[std::size_t(t - 1)]});
      if (f.history[std::size_t(t - 1)]) {
        ++ones;
        scale *= std::exp(z(t - 1));
      }
    }
    poly = shift(g_without(rep, drop, "counterfactual without dynamics"), ones) * scale;
    out.history_index = j;
    break;
  }
  }
  if (poly.degree() > rep.d) throw InadmissibleFunctional("psi * g exceeds deg(g)");
  out.eta = poly.padded(n).head(n);
  return out;
}

double functional_psi(const FunctionalSpec& f, const ModelSpec& spec_in, const Theta& th, const VectorXd& x,
                      double A) {
  const ModelSpec spec = normalized(spec_in);
  const double B = std::exp(th.beta(0));
  switch (f.kind) {
  case FunctionalKind::AME_NoCov: return A * B / (1 + A * B) - A / (1 + A);
  case FunctionalKind::AME_Cov: {
    const double e = std::exp(detail::period_index(spec, th, x)(ame_period(f, spec, x) - 1));
    return A * B * e / (1 + A * B * e) - A * e / (1 + A * e);
  }
  case FunctionalKind::PosteriorMeanA: return A * likelihood_direct(spec, th, x, f.history, A);
  case FunctionalKind::CounterfactualNoDynamics: {
    const VectorXd z = detail::period_index(spec, th, x);
    double v = 1.0;
    for (int t = 1; t <= spec.T; ++t) {
      const double e = A * std::exp(z(t - 1));
      v *= (f.history[std::size_t(t - 1)] ? e : 1.0) / (1 + e);
    }
    return v;
  }
  }
  return 0.0;
}

double functional_point_value(const FunctionalSpec& f, const ModelSpec& spec, const Theta& th, const VectorXd& x,
                              const VectorXd& r, const VectorXd& p) {
  const EtaVector e = eta_vector(f, spec, th, x);
  if (e.eta.size() != r.size()) throw InputError("moment vector length does not match deg(g)+1");
  double v = e.eta.dot(r);
  if (e.divide_by_P) {
    const double pj = p(e.history_index);
    if (!(pj > 0)) throw InputError("conditioning history has zero probability");
    v /= pj;
  }
  return v;
}

double functional_truth(const FunctionalSpec& f, const ModelSpec& spec_in, const Theta& th,
                        const DiscreteMixture& mix, const VectorXd& x) {
  const ModelSpec spec = normalized(spec_in);
  mix.validate();
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < mix.alphas.size(); ++k) {
    const double A = std::exp(mix.alphas(k));
    num += mix.weights(k) * functional_psi(f, spec, th, x, A);
    if (f.kind == FunctionalKind::PosteriorMeanA) den += mix.weights(k) * likelihood_direct(spec, th, x, f.history, A);
  }
  return f.kind == FunctionalKind::PosteriorMeanA ? num / den : num;
}

FunctionalEval evaluate_functional(const FunctionalSpec& f, const ModelSpec& spec_in, const Theta& th,
                                   const PopulationProbs& P) {
  const ModelSpec spec = normalized(with_initial(spec_in, f.y0));
  const CellProbs* cell = P.find(f.x_index, f.y0);
  if (!cell) throw InputError("no probabilities for the requested (x, y0) cell");
  const VectorXd x = spec.x_at(f.x_index);
  const Representation rep = build_representation(spec, th, x);
  FunctionalEval out;
  out.theta = th;
  out.eta = eta_vector(f, spec, th, x).eta;
  // a vanishing eta fixes the value at zero, so rank loss of G is harmless there
  out.r = moment_vector(rep, build_H(rep, out.eta.isZero(0.0)), cell->p).r;
  out.value = functional_point_value(f, spec, th, x, out.r, cell->p);
  return out;
}

FunctionalBounds functional_bounds(const FunctionalSpec& f, const ModelSpec& spec_in, const IdentifiedSet& set,
                                   const PopulationProbs& P) {
  if (set.empty()) throw EmptyIdentifiedSet("functional bounds over an empty identified set");
  if (set.kind == SetKind::Curve)
    throw InputError("functional bounds need a point, finite set, interval or grid region, not an equality curve");
  const ModelSpec spec = normalized(spec_in);
  std::vector<Theta> thetas;
  if (set.kind == SetKind::Interval) {
    if (spec.n_params() != 1) throw InputError("interval sets carry a single parameter");
    // the B interval may touch 0; stay strictly positive
    const double lo = std::max(set.B.lo, 1e-9 * std::max(1.0, set.B.hi));
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
      const double B = lo + (set.B.hi - lo) * double(i) / n;
      thetas.push_back(make_theta({std::log(B)}));
    }
  } else {
    thetas = set.members;
  }
  // check admissibility once so the error surfaces with its own message
  (void)eta_vector(f, with_initial(spec, f.y0), thetas.front(), spec.x_at(f.x_index));

  std::vector<FunctionalEval> evals(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) evals[i] = evaluate_functional(f, spec, thetas[i], P);
  });
  FunctionalBounds out;
  out.lo = std::numeric_limits<double>::infinity();
  out.hi = -std::numeric_limits<double>::infinity();
  for (const auto& ev : evals) {
    if (ev.value < out.lo) {
      out.lo = ev.value;
      out.at_lo = ev;
    }
    if (ev.value > out.hi) {
      out.hi = ev.value;
      out.at_hi = ev;
    }
  }
  out.evaluated = evals.size();
  out.point = set.kind == SetKind::Point || out.lo == out.hi;
  return out;
}

} // namespace panelid
