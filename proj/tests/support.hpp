#pragma once

#include "panelid/dgp.hpp"
#include "panelid/model.hpp"
#include "panelid/philox.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace panelid::testing {

/// Seeded uniform draws on [lo, hi) for reproducible random tests.
class Draws {
public:
  explicit Draws(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = rng_.uniforms(0, n_++)[0];
    return lo + (hi - lo) * u;
  }
  /// Bounded away from zero, where G loses rank.
  double nonzero(double lo, double hi, double gap = 0.1) {
    double v = 0.0;
    do v = uniform(lo, hi);
    while (std::abs(v) < gap);
    return v;
  }

private:
  Philox4x32 rng_;
  std::uint64_t n_ = 0;
};

struct NamedSpec {
  std::string name;
  ModelSpec spec;
  VectorXd x; // covariate path used for that family
};

inline std::vector<NamedSpec> model_families() {
  std::vector<NamedSpec> out;
  auto add = [&](std::string name, Family fam, int T, CovariateKind cov, VectorXd x) {
    ModelSpec s;
    s.family = fam;
    s.T = T;
    s.covariates = cov;
    if (cov == CovariateKind::Series) s.support_X.push_back(x);
    s = normalized(s);
    out.push_back({std::move(name), s, cov == CovariateKind::TimeDummies ? VectorXd() : s.x_at(0)});
  };
  add("AR1 T=2", Family::AR1, 2, CovariateKind::None, {});
  add("AR1 T=3", Family::AR1, 3, CovariateKind::None, {});
  add("AR1 T=4", Family::AR1, 4, CovariateKind::None, {});
  add("AR1 T=2 series", Family::AR1, 2, CovariateKind::Series, (VectorXd(2) << 1.0, 0.0).finished());
  add("AR1 T=3 series", Family::AR1, 3, CovariateKind::Series, (VectorXd(3) << 0.0, 0.5, -1.0).finished());
  add("AR1 T=3 time trend", Family::AR1, 3, CovariateKind::TimeTrend, {});
  add("AR1 T=3 time dummies", Family::AR1, 3, CovariateKind::TimeDummies, {});
  add("AR2 T=3", Family::AR2, 3, CovariateKind::None, {});
  add("AR2 T=3 series", Family::AR2, 3, CovariateKind::Series, (VectorXd(3) << 0.0, 1.0, -1.0).finished());
  return out;
}

inline Theta random_theta(const ModelSpec& spec, Draws& d) {
  Theta th;
  th.beta.resize(spec.n_beta());
  for (Eigen::Index i = 0; i < th.beta.size(); ++i) th.beta(i) = d.nonzero(-1.5, 1.5);
  th.gamma.resize(spec.n_gamma());
  for (Eigen::Index i = 0; i < th.gamma.size(); ++i) th.gamma(i) = d.nonzero(-1.0, 1.0);
  return th;
}

/// Mixture with `atoms` distinct support points on [-3, 3] and Dirichlet-like weights.
inline DiscreteMixture random_mixture(int atoms, Draws& d) {
  std::vector<double> a;
  while (int(a.size()) < atoms) {
    const double v = d.uniform(-3.0, 3.0);
    bool far = true;
    for (double u : a) far = far && std::abs(u - v) > 0.2;
    if (far) a.push_back(v);
  }
  std::sort(a.begin(), a.end());
  DiscreteMixture m;
  m.alphas = Eigen::Map<VectorXd>(a.data(), Eigen::Index(a.size()));
  m.weights.resize(atoms);
  for (int i = 0; i < atoms; ++i) m.weights(i) = 0.2 + d.uniform(0.0, 1.0);
  m.weights /= m.weights.sum();
  return m;
}

} // namespace panelid::testing
