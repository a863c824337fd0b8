#include "panelid/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace panelid {

ModelSpec normalized(ModelSpec spec) {
  if (spec.T < 1) throw InputError("T must be at least 1");
  if (spec.T > 16) throw InputError("T above 16 is not supported (2^T histories)");
  if ((spec.y0 != 0 && spec.y0 != 1) || (spec.y_minus1 != 0 && spec.y_minus1 != 1))
    throw InputError("initial conditions must be 0 or 1");
  if (spec.family == Family::AR2 && spec.T < 2) throw InputError("AR2 needs T >= 2");
  switch (spec.covariates) {
  case CovariateKind::None:
    if (!spec.support_X.empty()) throw InputError("support_X given for a model without covariates");
    break;
  case CovariateKind::TimeTrend: {
    VectorXd trend = VectorXd::LinSpaced(spec.T, 1.0, double(spec.T));
    if (spec.support_X.empty()) spec.support_X.push_back(trend);
    if (spec.support_X.size() != 1 || spec.support_X[0] != trend)
      throw InputError("time trend support must be the single point (1, ..., T)");
    break;
  }
  case CovariateKind::TimeDummies:
    // the dummies are implicit; a single placeholder cell keeps indexing uniform
    spec.support_X.clear();
    break;
  case CovariateKind::Series:
    if (spec.support_X.empty()) throw InputError("Series covariates need a non-empty support_X");
    for (const auto& x : spec.support_X)
      if (x.size() != spec.T) throw InputError("each covariate vector must have length T");
    break;
  }
  return spec;
}

ModelSpec with_initial(ModelSpec spec, int y0) {
  spec.y0 = y0;
  return spec;
}

Theta make_theta(std::initializer_list<double> beta, std::initializer_list<double> gamma) {
  Theta th;
  th.beta = Eigen::Map<const VectorXd>(beta.begin(), Eigen::Index(beta.size()));
  th.gamma = Eigen::Map<const VectorXd>(gamma.begin(), Eigen::Index(gamma.size()));
  return th;
}

VectorXd flatten(const Theta& th) {
  VectorXd v(th.beta.size() + th.gamma.size());
  v << th.beta, th.gamma;
  return v;
}

Theta unflatten(const ModelSpec& spec, const VectorXd& v) {
  if (v.size() != spec.n_params()) throw InputError("parameter vector has the wrong length");
  return Theta{v.head(spec.n_beta()), v.tail(spec.n_gamma())};
}

void check_theta(const ModelSpec& spec, const Theta& th) {
  if (th.beta.size() != spec.n_beta())
    throw InputError("beta must have " + std::to_string(spec.n_beta()) + " entries");
  if (th.gamma.size() != spec.n_gamma())
    throw InputError("gamma must have " + std::to_string(spec.n_gamma()) + " entries");
  if (!flatten(th).allFinite()) throw InputError("theta must be finite");
}

std::vector<History> enumerate_histories(int T) {
  std::vector<History> out;
  const std::uint32_t n = 1u << T;
  out.reserve(n);
  for (std::uint32_t code = 0; code < n; ++code) {
    History h(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) h[std::size_t(t)] = int((code >> (T - 1 - t)) & 1u);
    out.push_back(std::move(h));
  }
  return out;
}

std::uint32_t history_code(const History& h) {
  std::uint32_t c = 0;
  for (int y : h) c = (c << 1) | std::uint32_t(y);
  return c;
}

std::string history_string(const History& h) {
  std::string s;
  for (int y : h) s.push_back(y ? '1' : '0');
  return s;
}

History parse_history(const std::string& s) {
  History h;
  for (char ch : s) {
    if (ch == '0' || ch == '1') h.push_back(ch - '0');
    else if (ch != ',' && ch != ' ' && ch != '(' && ch != ')') throw InputError("bad history string: " + s);
  }
  if (h.empty()) throw InputError("empty history");
  return h;
}

std::vector<std::size_t> order_permutation(int T, HistoryOrder order) {
  const std::size_t n = std::size_t(1) << T;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto ones = [](std::size_t c) { return __builtin_popcountll(c); };
  switch (order) {
  case HistoryOrder::Canonical: break;
  case HistoryOrder::Descending: std::reverse(perm.begin(), perm.end()); break;
  case HistoryOrder::Graded:
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      if (ones(a) != ones(b)) return ones(a) < ones(b);
      return a > b;
    });
    break;
  }
  return perm;
}

RepresentationPattern make_pattern(const ModelSpec& spec_in, const VectorXd& x_in) {
  RepresentationPattern pat;
  pat.spec = normalized(spec_in);
  const ModelSpec& spec = pat.spec;
  pat.x = x_in;
  if (spec.covariates == CovariateKind::TimeTrend && pat.x.size() == 0) pat.x = spec.support_X.front();
  if ((spec.covariates == CovariateKind::Series || spec.covariates == CovariateKind::TimeTrend) &&
      pat.x.size() != spec.T)
    throw InputError("covariate vector must have length T");

  const std::vector<double> cls = detail::period_class(spec, pat.x);
  pat.histories = enumerate_histories(spec.T);
  const Theta probe{VectorXd::Zero(spec.n_beta()), VectorXd::Zero(spec.n_gamma())};

  std::map<std::pair<int, double>, int> index;
  std::vector<std::vector<int>> mult(pat.histories.size());
  for (std::size_t j = 0; j < pat.histories.size(); ++j) {
    const History& h = pat.histories[j];
    std::vector<int> used;
    int ones = 0;
    std::vector<int> num;
    for (int t = 1; t <= spec.T; ++t) {
      const int state = detail::period_term(spec, probe, h, t).state;
      const std::pair<int, double> key{state, cls[std::size_t(t - 1)]};
      auto it = index.find(key);
      int k;
      if (it == index.end()) {
        k = int(pat.keys.size());
        index.emplace(key, k);
        pat.keys.push_back({state, key.second, t});
        pat.power.push_back(0);
      } else {
        k = it->second;
      }
      if (used.size() <= std::size_t(k)) used.resize(std::size_t(k) + 1, 0);
      pat.power[std::size_t(k)] = std::max(pat.power[std::size_t(k)], ++used[std::size_t(k)]);
      if (h[std::size_t(t - 1)]) {
        ++ones;
        num.push_back(k);
      }
    }
    mult[j] = std::move(used);
    pat.ones.push_back(ones);
    pat.numerator.push_back(std::move(num));
  }
  pat.d = 0;
  for (int p : pat.power) pat.d += p;
  for (std::size_t j = 0; j < pat.histories.size(); ++j) {
    std::vector<int> cof(pat.keys.size());
    for (std::size_t k = 0; k < pat.keys.size(); ++k)
      cof[k] = pat.power[k] - (k < mult[j].size() ? mult[j][k] : 0);
    pat.cofactor.push_back(std::move(cof));
  }
  return pat;
}

RepresentationPattern merge_coincident(const RepresentationPattern& pat, const Theta& th, double rel_tol) {
  const VectorXd c = detail::factor_constants(pat, th);
  const std::size_t nk = pat.keys.size();
  std::vector<int> group(nk, -1);
  RepresentationPattern out = pat;
  out.keys.clear();
  for (std::size_t k = 0; k < nk; ++k) {
    if (group[k] >= 0) continue;
    group[k] = int(out.keys.size());
    for (std::size_t l = k + 1; l < nk; ++l)
      if (group[l] < 0 && std::abs(c(Eigen::Index(k)) - c(Eigen::Index(l))) <=
                              rel_tol * std::max(c(Eigen::Index(k)), c(Eigen::Index(l))))
        group[l] = group[k];
    out.keys.push_back(pat.keys[k]);
  }
  const std::size_t ng = out.keys.size();
  // own multiplicity of each merged key per history
  std::vector<std::vector<int>> own(pat.histories.size(), std::vector<int>(ng, 0));
  out.power.assign(ng, 0);
  for (std::size_t j = 0; j < pat.histories.size(); ++j) {
    for (std::size_t k = 0; k < nk; ++k)
      own[j][std::size_t(group[k])] += pat.power[k] - pat.cofactor[j][k];
    for (std::size_t g = 0; g < ng; ++g) out.power[g] = std::max(out.power[g], own[j][g]);
    for (int& k : out.numerator[j]) k = group[std::size_t(k)];
  }
  out.d = 0;
  for (int p : out.power) out.d += p;
  for (std::size_t j = 0; j < pat.histories.size(); ++j) {
    out.cofactor[j].assign(ng, 0);
    for (std::size_t g = 0; g < ng; ++g) out.cofactor[j][g] = out.power[g] - own[j][g];
  }
  return out;
}

namespace detail {

VectorXd factor_constants(const RepresentationPattern& pat, const Theta& th) {
  const VectorXd z = period_index(pat.spec, th, pat.x);
  VectorXd c(Eigen::Index(pat.keys.size()));
  for (std::size_t k = 0; k < pat.keys.size(); ++k) {
    const auto& key = pat.keys[k];
    double lag = th.beta(0) * (key.state & 1);
    if (pat.spec.family == Family::AR2) lag += th.beta(1) * ((key.state >> 1) & 1);
    c(Eigen::Index(k)) = std::exp(lag + z(key.period - 1));
  }
  return c;
}

VectorXd period_index(const ModelSpec& spec, const Theta& th, const VectorXd& x) {
  VectorXd z = VectorXd::Zero(spec.T);
  switch (spec.covariates) {
  case CovariateKind::None: break;
  case CovariateKind::Series:
  case CovariateKind::TimeTrend: z = th.gamma(0) * x; break;
  case CovariateKind::TimeDummies: z.tail(spec.T - 1) = th.gamma; break;
  }
  return z;
}

std::vector<double> period_class(const ModelSpec& spec, const VectorXd& x) {
  std::vector<double> cls(std::size_t(spec.T), 0.0);
  for (int t = 0; t < spec.T; ++t) {
    if (spec.covariates == CovariateKind::Series) cls[std::size_t(t)] = x(t);
    else if (spec.covariates != CovariateKind::None) cls[std::size_t(t)] = t + 1;
  }
  return cls;
}

PeriodTerm period_term(const ModelSpec& spec, const Theta& th, const History& h, int t) {
  auto lagged = [&](int s) { // outcome at period s, s may be 0 or -1
    if (s >= 1) return h[std::size_t(s - 1)];
    return s == 0 ? spec.y0 : spec.y_minus1;
  };
  const int y1 = lagged(t - 1);
  if (spec.family == Family::AR1) return {y1, th.beta(0) * y1};
  const int y2 = lagged(t - 2);
  return {y1 + 2 * y2, th.beta(0) * y1 + th.beta(1) * y2};
}

bool degenerate_theta(const ModelSpec& spec, const Theta& th, const VectorXd& x, std::string* why) {
  std::string msg;
  for (Eigen::Index i = 0; i < th.beta.size(); ++i)
    if (th.beta(i) == 0.0) msg += "beta" + std::to_string(i + 1) + " = 0 (B = 1): static logit, G loses rank; ";
  bool varying = false;
  if (spec.covariates == CovariateKind::Series)
    varying = x.size() > 0 && x.maxCoeff() != x.minCoeff();
  else if (spec.covariates != CovariateKind::None)
    varying = true;
  if (varying)
    for (Eigen::Index i = 0; i < th.gamma.size(); ++i)
      if (th.gamma(i) == 0.0) msg += "gamma" + std::to_string(i + 1) + " = 0 (C = 1): covariate effect vanishes; ";
  if (why) *why = msg;
  return !msg.empty();
}

} // namespace detail
} // namespace panelid
