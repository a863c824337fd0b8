#include "panelid/equalities.hpp"

#include "panelid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace panelid {

NullBasis left_null_basis(const Representation& rep, bool allow_degenerate) {
  Eigen::JacobiSVD<MatrixXd> svd(rep.G, Eigen::ComputeFullU);
  const VectorXd& sv = svd.singularValues();
  NullBasis nb;
  nb.tol_rank = 1e-10 * (sv.size() ? sv(0) : 0.0);
  nb.rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > nb.tol_rank) ++nb.rank;
  if (!allow_degenerate && (nb.rank < rep.G.cols() || rep.rank_deficient)) {
    std::ostringstream os;
    os << "G is rank deficient (rank " << nb.rank << " of " << rep.G.cols() << " columns)";
    if (!rep.warning.empty()) os << ": " << rep.warning;
    throw DegenerateModel(os.str());
  }
  nb.vectors = svd.matrixU().rightCols(rep.G.rows() - nb.rank);
  return nb;
}

VectorXd equality_residuals(const ModelSpec& spec, const Theta& th, const PopulationProbs& P, bool allow_degenerate) {
  std::vector<double> out;
  for (const auto& cell : P.cells) {
    const ModelSpec s = normalized(with_initial(spec, cell.y0));
    const auto rep = build_representation(s, th, s.x_at(cell.x_index));
    const auto nb = left_null_basis(rep, allow_degenerate);
    const VectorXd r = nb.vectors.transpose() * cell.p;
    out.insert(out.end(), r.data(), r.data() + r.size());
  }
  return Eigen::Map<VectorXd>(out.data(), Eigen::Index(out.size()));
}

namespace {

double max_abs_residual(const ModelSpec& spec, const Theta& th, const PopulationProbs& P) {
  try {
    const VectorXd r = equality_residuals(spec, th, P);
    return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  } catch (const DegenerateModel&) {
    return std::numeric_limits<double>::infinity();
  }
}

const CellProbs& require_cell(const PopulationProbs& P, std::size_t x, int y0, const char* what) {
  const CellProbs* c = P.find(x, y0);
  if (!c) throw InputError(std::string(what) + ": probabilities for y0 = " + std::to_string(y0) + " are required");
  return *c;
}

std::size_t code_of(const char* bits) { return history_code(parse_history(bits)); }

RootSet single_root(const ModelSpec& spec, const PopulationProbs& P, Theta th, const std::string& method,
                    std::vector<int> free_params = {}, std::string note = {}) {
  RootSet rs;
  rs.method = method;
  RootCandidate c;
  c.theta = std::move(th);
  c.free_params = std::move(free_params);
  c.note = std::move(note);
  Theta probe = c.theta;
  for (int k : c.free_params) {
    // equalities do not involve this coordinate; evaluate the residual off the degenerate value
    if (k < probe.beta.size()) probe.beta(k) = 1.0;
    else probe.gamma(k - probe.beta.size()) = 1.0;
  }
  c.residual = max_abs_residual(spec, probe, P);
  if (!std::isfinite(flatten(c.theta).sum())) {
    rs.diagnostic = "closed form undefined at these probabilities";
    return rs;
  }
  rs.candidates.push_back(std::move(c));
  return rs;
}

} // namespace

std::optional<RootSet> solve_closed_forms(const ModelSpec& spec_in, const PopulationProbs& P) {
  const ModelSpec spec = normalized(spec_in);
  if (spec.T != 3 || !P.has_y0(0)) return std::nullopt;
  if (spec.family == Family::AR1 && spec.covariates == CovariateKind::None) {
    const VectorXd& p = require_cell(P, 0, 0, "closed form").p;
    const double beta = std::log(p(Eigen::Index(code_of("011")))) - std::log(p(Eigen::Index(code_of("101"))));
    return single_root(spec, P, make_theta({beta}), "closed-form: beta = log P(011) - log P(101)");
  }
  if (spec.family == Family::AR1 && spec.covariates == CovariateKind::Series) {
    for (std::size_t i = 0; i < spec.support_X.size(); ++i) {
      const VectorXd& x = spec.support_X[i];
      const CellProbs* cell = P.find(i, 0);
      if (!cell || x(1) != x(2) || x(0) == x(1)) continue;
      const VectorXd& p = cell->p;
      auto lp = [&](const char* h) { return std::log(p(Eigen::Index(code_of(h)))); };
      const double gamma = (lp("100") - lp("010")) / (x(0) - x(1));
      const double beta = lp("100") - lp("010") - lp("101") + lp("011");
      return single_root(spec, P, make_theta({beta}, {gamma}),
                         "closed-form: covariate path with x2 = x3 at support point " + std::to_string(i));
    }
    return std::nullopt;
  }
  if (spec.family == Family::AR2 && spec.covariates == CovariateKind::None && spec.y_minus1 == 0) {
    const VectorXd& p = require_cell(P, 0, 0, "closed form").p;
    auto at = [&](const char* h) { return p(Eigen::Index(code_of(h))); };
    const double B1 = at("011") / (at("100") - at("010") + at("101"));
    RootSet rs = single_root(spec, P, make_theta({std::log(B1), 0.0}), "closed-form: B1 from the single equality",
                             {1}, "beta2 is not restricted by the equality");
    return rs;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// generic root finding

std::pair<VectorXd, double> newton_fd(const SystemFn& F, VectorXd x, const NumericOptions& opt) {
  const Eigen::Index k = x.size();
  VectorXd f = F(x);
  double res = f.allFinite() ? f.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.newton_iters && res >= opt.newton_tol && std::isfinite(res); ++it) {
    MatrixXd J(f.size(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
      VectorXd xp = x, xm = x;
      xp(c) += opt.fd_step;
      xm(c) -= opt.fd_step;
      J.col(c) = (F(xp) - F(xm)) / (2.0 * opt.fd_step);
    }
    if (!J.allFinite()) break;
    VectorXd dx = J.colPivHouseholderQr().solve(-f);
    if (!dx.allFinite()) break;
    const double n = dx.norm();
    if (n > 0.5) dx *= 0.5 / n; // keep iterates near the bracketing cell
    x += dx;
    f = F(x);
    res = f.allFinite() ? f.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
  }
  return {x, res};
}

ScanResult grid_scan_roots(const SystemFn& scan, const SystemFn& refine, const SearchBox& box,
                           const NumericOptions& opt, const std::function<bool(const VectorXd&)>& accept) {
  const Eigen::Index k = box.lo.size();
  if (k < 1 || k > 2) throw InputError("grid scan supports one or two unknowns");
  const SystemFn& R = refine ? refine : scan;
  std::vector<Eigen::Index> n(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c)
    n[std::size_t(c)] = Eigen::Index(std::floor((box.hi(c) - box.lo(c)) / opt.step + 1e-9)) + 1;
  const Eigen::Index nx = n[0], ny = k == 2 ? n[1] : 1;
  auto node = [&](Eigen::Index i, Eigen::Index j) {
    VectorXd p(k);
    p(0) = box.lo(0) + double(i) * opt.step;
    if (k == 2) p(1) = box.lo(1) + double(j) * opt.step;
    return p;
  };

  // signs of every component at every node
  std::vector<std::vector<signed char>> sgn(std::size_t(nx * ny));
  parallel_for(std::size_t(nx * ny), [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t idx = b; idx < e; ++idx) {
      const VectorXd v = scan(node(Eigen::Index(idx) % nx, Eigen::Index(idx) / nx));
      auto& s = sgn[idx];
      s.resize(std::size_t(v.size()));
      for (Eigen::Index c = 0; c < v.size(); ++c)
        s[std::size_t(c)] = !std::isfinite(v(c)) ? 2 : (v(c) > 0) - (v(c) < 0);
    }
  });

  std::vector<VectorXd> starts;
  const Eigen::Index cx = k == 2 ? nx - 1 : nx - 1, cy = k == 2 ? ny - 1 : 1;
  for (Eigen::Index j = 0; j < cy; ++j)
    for (Eigen::Index i = 0; i < cx; ++i) {
      std::vector<std::size_t> corners{std::size_t(j * nx + i), std::size_t(j * nx + i + 1)};
      if (k == 2) {
        corners.push_back(std::size_t((j + 1) * nx + i));
        corners.push_back(std::size_t((j + 1) * nx + i + 1));
      }
      const std::size_t m = sgn[corners[0]].size();
      bool all = m > 0;
      for (std::size_t c = 0; c < m && all; ++c) {
        bool pos = false, neg = false, zero = false;
        for (auto q : corners) {
          const auto v = sgn[q][c];
          if (v == 2) continue;
          pos |= v > 0;
          neg |= v < 0;
          zero |= v == 0;
        }
        all = (pos && neg) || zero;
      }
      if (all) starts.push_back(node(i, j) + VectorXd::Constant(k, 0.5 * opt.step));
    }

  std::vector<std::pair<VectorXd, double>> refined(starts.size());
  parallel_for(starts.size(), [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t s = b; s < e; ++s) refined[s] = newton_fd(R, starts[s], opt);
  });

  ScanResult out;
  out.candidates = starts.size();
  for (const auto& [x, res] : refined) {
    if (!(res < opt.newton_tol * 1e3) || !x.allFinite()) continue;
    if (!box.contains(x)) continue;
    if (accept && !accept(x)) continue;
    bool dup = false;
    for (std::size_t r = 0; r < out.roots.size() && !dup; ++r)
      if ((out.roots[r] - x).cwiseAbs().maxCoeff() < opt.dedupe_tol) {
        dup = true;
        if (res < out.residuals[r]) {
          out.roots[r] = x;
          out.residuals[r] = res;
        }
      }
    if (!dup) {
      out.roots.push_back(x);
      out.residuals.push_back(res);
    }
  }
  // deterministic order
  std::vector<std::size_t> idx(out.roots.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(out.roots[a].data(), out.roots[a].data() + k, out.roots[b].data(),
                                        out.roots[b].data() + k);
  });
  ScanResult sorted;
  sorted.candidates = out.candidates;
  for (auto i : idx) {
    sorted.roots.push_back(out.roots[i]);
    sorted.residuals.push_back(out.residuals[i]);
  }
  return sorted;
}

std::vector<std::vector<Eigen::Vector2d>> marching_squares(const std::function<double(const Eigen::Vector2d&)>& f,
                                                           const SearchBox& box, double step) {
  const Eigen::Index nx = Eigen::Index(std::floor((box.hi(0) - box.lo(0)) / step + 1e-9)) + 1;
  const Eigen::Index ny = Eigen::Index(std::floor((box.hi(1) - box.lo(1)) / step + 1e-9)) + 1;
  auto at = [&](Eigen::Index i, Eigen::Index j) {
    return Eigen::Vector2d(box.lo(0) + double(i) * step, box.lo(1) + double(j) * step);
  };
  std::vector<double> val(std::size_t(nx * ny));
  parallel_for(val.size(), [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t q = b; q < e; ++q) {
      const double v = f(at(Eigen::Index(q) % nx, Eigen::Index(q) / nx));
      // exact zeros are nudged so every crossing lies strictly inside an edge
      val[q] = v == 0.0 ? std::numeric_limits<double>::min() : v;
    }
  });
  auto V = [&](Eigen::Index i, Eigen::Index j) { return val[std::size_t(j * nx + i)]; };

  // edge ids: horizontal (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1
  std::map<long long, Eigen::Vector2d> crossing;
  auto edge = [&](Eigen::Index i, Eigen::Index j, bool vertical) -> long long {
    const long long id = 2LL * (j * nx + i) + (vertical ? 1 : 0);
    if (!crossing.count(id)) {
      const Eigen::Index i2 = vertical ? i : i + 1, j2 = vertical ? j + 1 : j;
      const double a = V(i, j), b = V(i2, j2);
      const double t = a / (a - b);
      crossing[id] = at(i, j) + t * (at(i2, j2) - at(i, j));
    }
    return id;
  };
  std::multimap<long long, long long> adj;
  for (Eigen::Index j = 0; j + 1 < ny; ++j)
    for (Eigen::Index i = 0; i + 1 < nx; ++i) {
      const double v00 = V(i, j), v10 = V(i + 1, j), v01 = V(i, j + 1), v11 = V(i + 1, j + 1);
      if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v01) || !std::isfinite(v11)) continue;
      std::vector<long long> e;
      if ((v00 > 0) != (v10 > 0)) e.push_back(edge(i, j, false));
      if ((v10 > 0) != (v11 > 0)) e.push_back(edge(i + 1, j, true));
      if ((v01 > 0) != (v11 > 0)) e.push_back(edge(i, j + 1, false));
      if ((v00 > 0) != (v01 > 0)) e.push_back(edge(i, j, true));
      if (e.size() == 2) {
        adj.emplace(e[0], e[1]);
        adj.emplace(e[1], e[0]);
      } else if (e.size() == 4) {
        // saddle: resolve with the centre value
        const double c = 0.25 * (v00 + v10 + v01 + v11);
        const bool join_first = (c > 0) == (v00 > 0);
        const int pairs[2][4] = {{0, 3, 1, 2}, {0, 1, 2, 3}};
        const int* pr = pairs[join_first ? 1 : 0];
        for (int s = 0; s < 4; s += 2) {
          adj.emplace(e[std::size_t(pr[s])], e[std::size_t(pr[s + 1])]);
          adj.emplace(e[std::size_t(pr[s + 1])], e[std::size_t(pr[s])]);
        }
      }
    }

  std::vector<std::vector<Eigen::Vector2d>> lines;
  std::map<long long, bool> seen;
  auto walk = [&](long long start) {
    std::vector<Eigen::Vector2d> pts{crossing[start]};
    seen[start] = true;
    long long cur = start;
    for (;;) {
      long long next = -1;
      auto range = adj.equal_range(cur);
      for (auto it = range.first; it != range.second; ++it)
        if (!seen[it->second]) {
          next = it->second;
          break;
        }
      if (next < 0) {
        // close loops
        for (auto it = range.first; it != range.second; ++it)
          if (it->second == start && pts.size() > 2) pts.push_back(crossing[start]);
        break;
      }
      seen[next] = true;
      pts.push_back(crossing[next]);
      cur = next;
    }
    return pts;
  };
  // open chains first (start at endpoints), then loops
  for (const auto& [id, p] : crossing)
    if (!seen[id] && adj.count(id) == 1) lines.push_back(walk(id));
  for (const auto& [id, p] : crossing)
    if (!seen[id] && adj.count(id) > 0) lines.push_back(walk(id));
  return lines;
}

// ---------------------------------------------------------------------------
// time-dummy reduction

namespace time_dummies {

VectorXd reference_layout(const VectorXd& canonical) {
  if (canonical.size() != 8) throw InputError("time-dummy reduction needs T = 3");
  VectorXd p(9);
  p(0) = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= 8; ++k) p(k) = canonical(8 - k);
  return p;
}

double Reduced::B_initial0(const VectorXd& p, double C, double D) {
  return (-D * D * p(4) + D * (p(5) + p(6)) + (-C + D) * p(7)) / (C * D * p(3));
}

double Reduced::B_initial1(const VectorXd& p, double C, double D) {
  return ((C - D) * p(2) + C * (p(3) + p(4)) - C * p(5) / D) / p(6);
}

double Reduced::F0(const VectorXd& p, double C, double D) {
  const double lead = (-C * D + D * D) * p(2) - C * D * (p(3) + p(4)) + D * p(6);
  const double den = -D * D * p(4) + D * (p(5) + p(6)) + (-C + D) * p(7);
  return lead * den + C * C * D * p(3) * p(5);
}

double Reduced::F1(const VectorXd& p, double C, double D) {
  const double lead = C * D * p(3) - D * (p(5) + p(6)) + (C - D) * p(7);
  const double den = (C - D) * D * p(2) + C * D * (p(3) + p(4)) - C * p(5);
  return lead * den + D * D * D * p(4) * p(6);
}

} // namespace time_dummies

namespace {

// Bounded positive weight with the same zero set; F0 and F1 are quartic in (C, D).
double quartic_scale(double C, double D) { return std::pow(1.0 + C + D, 4); }

RootSet solve_time_dummies([[maybe_unused]] const ModelSpec& spec, const PopulationProbs& P, const SearchBox& box,
                           const NumericOptions& opt) {
  using time_dummies::Reduced;
  RootSet rs;
  rs.box = box;
  const VectorXd p0 = time_dummies::reference_layout(require_cell(P, 0, 0, "time-dummy reduction").p);
  const CellProbs* c1 = P.find(0, 1);
  SearchBox sub{box.lo.tail(2), box.hi.tail(2)};

  auto theta_at = [&](double g, double d) {
    const double B = Reduced::B_initial0(p0, std::exp(g), std::exp(d));
    return make_theta({std::log(B)}, {g, d});
  };
  auto outside_ball = [&](const Theta& th) {
    const VectorXd v = flatten(th);
    return v.allFinite() && v.norm() > opt.trivial_radius;
  };

  if (!c1) {
    rs.method = "time-dummy reduction, y0 = 0 only: B eliminated, solution curve in (C, D)";
    auto f = [&](const Eigen::Vector2d& q) {
      const double C = std::exp(q(0)), D = std::exp(q(1));
      return Reduced::F0(p0, C, D) / quartic_scale(C, D);
    };
    for (const auto& line : marching_squares(f, sub, opt.step)) {
      Polyline pl;
      for (Eigen::Vector2d q : line) {
        // snap onto the zero set along the gradient
        for (int it = 0; it < 8; ++it) {
          const double v = f(q);
          Eigen::Vector2d gr;
          for (int c = 0; c < 2; ++c) {
            Eigen::Vector2d a = q, b = q;
            a(c) += opt.fd_step;
            b(c) -= opt.fd_step;
            gr(c) = (f(a) - f(b)) / (2 * opt.fd_step);
          }
          if (gr.squaredNorm() == 0.0 || std::abs(v) < 1e-15) break;
          q -= v * gr / gr.squaredNorm();
        }
        const Theta th = theta_at(q(0), q(1));
        if (!flatten(th).allFinite()) {
          if (pl.vertices.size() > 1) rs.curves.push_back(pl);
          pl.vertices.clear();
          continue;
        }
        pl.vertices.push_back(flatten(th));
      }
      if (pl.vertices.size() > 1) rs.curves.push_back(pl);
    }
    if (rs.curves.empty()) rs.diagnostic = "no sign change of the y0 = 0 equality in the box";
    return rs;
  }

  rs.method = "time-dummy reduction: y0 = 0 curve intersected with the y0 = 1 curve";
  const VectorXd p1 = time_dummies::reference_layout(c1->p);
  SystemFn F = [&](const VectorXd& q) {
    const double C = std::exp(q(0)), D = std::exp(q(1));
    const double s = quartic_scale(C, D);
    return VectorXd((VectorXd(2) << Reduced::F0(p0, C, D) / s, Reduced::F1(p1, C, D) / s).finished());
  };
  auto accept = [&](const VectorXd& q) {
    const double C = std::exp(q(0)), D = std::exp(q(1));
    return Reduced::B_initial0(p0, C, D) > 0 && Reduced::B_initial1(p1, C, D) > 0 && outside_ball(theta_at(q(0), q(1)));
  };
  const ScanResult sr = grid_scan_roots(F, F, sub, opt, accept);
  for (std::size_t i = 0; i < sr.roots.size(); ++i) {
    const double g = sr.roots[i](0), d = sr.roots[i](1);
    RootCandidate c;
    c.theta = theta_at(g, d);
    c.residual = sr.residuals[i];
    std::ostringstream os;
    os.precision(12);
    os << "B from the y0 = 0 rule " << Reduced::B_initial0(p0, std::exp(g), std::exp(d)) << ", from the y0 = 1 rule "
       << Reduced::B_initial1(p1, std::exp(g), std::exp(d));
    c.note = os.str();
    rs.candidates.push_back(c);
  }
  if (rs.candidates.empty()) rs.diagnostic = "no intersection of the two equality curves in the box";
  return rs;
}

// Per-cell canonical residuals e_j = P_j - G_j G_I^{-1} P_I over non-pivot rows.
struct CellSystem {
  RepresentationPattern pat;
  VectorXd p;
  std::vector<Eigen::Index> pivots, others;
};

struct Equation {
  std::size_t cell;
  std::size_t row; // index into others
};

class CanonicalSystem {
public:
  CanonicalSystem(const ModelSpec& spec, const PopulationProbs& P) : spec_(spec) {
    VectorXd ref(spec.n_params());
    for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = 0.37 + 0.13 * double(i);
    const Theta th_ref = unflatten(spec, ref);
    for (const auto& cell : P.cells) {
      const ModelSpec s = normalized(with_initial(spec, cell.y0));
      CellSystem cs{make_pattern(s, s.x_at(cell.x_index)), cell.p, {}, {}};
      MatrixXd G;
      fill_G(cs.pat, th_ref, G);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(G.transpose());
      const auto& perm = qr.colsPermutation().indices();
      std::vector<bool> is_pivot(std::size_t(G.rows()), false);
      for (Eigen::Index i = 0; i < G.cols(); ++i) is_pivot[std::size_t(perm(i))] = true;
      for (Eigen::Index j = 0; j < G.rows(); ++j) (is_pivot[std::size_t(j)] ? cs.pivots : cs.others).push_back(j);
      std::sort(cs.pivots.begin(), cs.pivots.end());
      cells_.push_back(std::move(cs));
    }
    // keep equations that actually move with theta
    std::vector<VectorXd> probes;
    for (int k = 0; k < 3; ++k) {
      VectorXd v(spec.n_params());
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 0.21 + 0.29 * k - 0.17 * double(i) + 0.05 * k * double(i);
      probes.push_back(v);
    }
    for (std::size_t c = 0; c < cells_.size(); ++c)
      for (std::size_t r = 0; r < cells_[c].others.size(); ++r) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& v : probes) {
          const double e = residual(c, unflatten(spec, v))(Eigen::Index(r));
          lo = std::min(lo, e);
          hi = std::max(hi, e);
        }
        if (hi - lo > 1e-12 * (1.0 + std::abs(hi))) eqs_.push_back({c, r});
        else invariant_.push_back({c, r});
      }
  }

  std::size_t n_equations() const { return eqs_.size(); }
  std::size_t n_invariant() const { return invariant_.size(); }

  /// Residual vector e for one cell at theta, plus the sign of det(G_I).
  VectorXd residual(std::size_t c, const Theta& th, double* det_sign = nullptr) const {
    const CellSystem& cs = cells_[c];
    MatrixXd G;
    fill_G(cs.pat, th, G);
    const Eigen::Index n = Eigen::Index(cs.pivots.size());
    MatrixXd GI(n, G.cols());
    VectorXd pI(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      GI.row(i) = G.row(cs.pivots[std::size_t(i)]);
      pI(i) = cs.p(cs.pivots[std::size_t(i)]);
    }
    Eigen::PartialPivLU<MatrixXd> lu(GI);
    const VectorXd w = lu.solve(pI);
    VectorXd e(Eigen::Index(cs.others.size()));
    for (std::size_t r = 0; r < cs.others.size(); ++r)
      e(Eigen::Index(r)) = cs.p(cs.others[r]) - G.row(cs.others[r]).dot(w);
    if (det_sign) *det_sign = lu.determinant() >= 0 ? 1.0 : -1.0;
    return e;
  }

  /// Selected square subsystem; with `signed_scan` each residual carries sign(det G_I),
  /// which removes the spurious sign flips at poles of G_I^{-1}.
  VectorXd evaluate(const VectorXd& v, std::size_t k, bool signed_scan) const {
    const Theta th = unflatten(spec_, v);
    VectorXd out(static_cast<Eigen::Index>(k));
    std::size_t cached = std::numeric_limits<std::size_t>::max();
    VectorXd e;
    double sgn = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (eqs_[i].cell != cached) {
        e = residual(eqs_[i].cell, th, &sgn);
        cached = eqs_[i].cell;
      }
      out(Eigen::Index(i)) = (signed_scan ? sgn : 1.0) * e(Eigen::Index(eqs_[i].row));
    }
    return out;
  }

private:
  ModelSpec spec_;
  std::vector<CellSystem> cells_;
  std::vector<Equation> eqs_, invariant_;
};

} // namespace

RootSet solve_numeric(const ModelSpec& spec_in, const PopulationProbs& P, const SearchBox& box,
                      const NumericOptions& opt) {
  const ModelSpec spec = normalized(spec_in);
  const Eigen::Index k = spec.n_params();
  if (box.lo.size() != k || box.hi.size() != k) throw InputError("search box dimension must match the parameter count");
  if (!(opt.step > 0)) throw InputError("grid step must be positive");
  if (spec.family == Family::AR1 && spec.covariates == CovariateKind::TimeDummies && spec.T == 3)
    return solve_time_dummies(spec, P, box, opt);

  RootSet rs;
  rs.box = box;
  const CanonicalSystem sys(spec, P);
  std::ostringstream diag;
  if (sys.n_invariant() > 0)
    diag << sys.n_invariant() << " equalities do not involve theta and only test the data; ";

  if (sys.n_equations() == 0) {
    rs.method = "numeric";
    rs.diagnostic = diag.str() + "no theta-dependent equalities; the equalities do not restrict theta";
    return rs;
  }

  if (Eigen::Index(sys.n_equations()) < k) {
    if (k != 2 || sys.n_equations() != 1) {
      rs.method = "numeric";
      rs.diagnostic = diag.str() + "underdetermined system outside the supported one-equation, two-unknown case";
      return rs;
    }
    rs.method = "numeric: marching squares on the single equality";
    auto f = [&](const Eigen::Vector2d& q) { return sys.evaluate(q, 1, true)(0); };
    for (const auto& line : marching_squares(f, box, opt.step)) {
      Polyline pl;
      for (const auto& q : line) pl.vertices.push_back(q);
      rs.curves.push_back(pl);
    }
    if (rs.curves.empty()) rs.diagnostic = diag.str() + "no sign change found in the box";
    return rs;
  }

  if (k > 2) {
    rs.method = "numeric";
    rs.diagnostic = diag.str() + "grid scans support at most two unknowns";
    return rs;
  }

  rs.method = "numeric: sign scan and Newton refinement";
  const std::size_t m = std::size_t(k);
  SystemFn scan = [&](const VectorXd& v) { return sys.evaluate(v, m, true); };
  SystemFn refine = [&](const VectorXd& v) { return sys.evaluate(v, m, false); };
  auto accept = [&](const VectorXd& v) {
    if (v.norm() <= opt.trivial_radius) return false;
    return max_abs_residual(spec, unflatten(spec, v), P) < opt.accept_tol;
  };
  const ScanResult sr = grid_scan_roots(scan, refine, box, opt, accept);
  for (std::size_t i = 0; i < sr.roots.size(); ++i) {
    RootCandidate c;
    c.theta = unflatten(spec, sr.roots[i]);
    c.residual = max_abs_residual(spec, c.theta, P);
    rs.candidates.push_back(c);
  }
  if (rs.candidates.empty()) rs.diagnostic = diag.str() + "no root found in the box";
  else rs.diagnostic = diag.str();
  return rs;
}

RootSet solve_equalities(const ModelSpec& spec, const PopulationProbs& P, const SearchBox& box,
                         const NumericOptions& opt) {
  if (auto cf = solve_closed_forms(spec, P)) {
    cf->box = box;
    return *cf;
  }
  return solve_numeric(spec, P, box, opt);
}

} // namespace panelid
