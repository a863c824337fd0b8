#include "panelid/idset.hpp"

#include "panelid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace panelid {

const char* to_string(SetKind k) {
  switch (k) {
  case SetKind::Empty: return "empty";
  case SetKind::Point: return "point";
  case SetKind::FiniteSet: return "finite_set";
  case SetKind::Interval: return "interval";
  case SetKind::GridRegion: return "grid_region";
  case SetKind::Curve: return "curve";
  }
  return "unknown";
}

IdentifiedSet sharp_bounds_T2(const VectorXd& p) {
  if (p.size() != 4) throw InputError("sharp_bounds_T2 needs the four T = 2 probabilities");
  if ((p.array() <= 0.0).any()) throw InputError("sharp_bounds_T2 needs strictly positive probabilities");
  // labels follow the (00),(10),(01),(11) layout
  const double p0 = p(0), p1 = p(2), p2 = p(1), p3 = p(3);
  if (p1 == p2) throw DegenerateModel("P(1,0) = P(0,1): beta0 = 0, the static case has no interval");
  const double q0 = p1 * p1 - p1 * p2 + p1 * p3 + p2 * p3;
  const double q1 = p0 * p2 - p0 * p1 + p1 * p2 + p2 * p2;
  const double a0 = 2.0 * p1 * (p1 - p2 + p3);
  const double d0 = std::sqrt(std::max(0.0, q0 * q0 - 4.0 * p1 * p2 * p3 * (p1 - p2 + p3)));
  const double a1 = 2.0 * p1 * p2;
  const double d1 = std::sqrt(std::max(0.0, q1 * q1 + 4.0 * p1 * p2 * (p0 * p1 - p0 * p2 - p2 * p2)));

  IdentifiedSet s;
  s.kind = SetKind::Interval;
  if (p2 > p1) {
    s.beta_sign = 1;
    s.B = {(q0 + d0) / a0, (q1 + d1) / a1};
    s.provenance = "closed form, beta0 > 0: lower end from r0 r2 - r1^2 = 0, upper end from r1 r3 - r2^2 = 0";
  } else {
    s.beta_sign = -1;
    s.B = {std::max(0.0, (q1 - d1) / a1), (q0 - d0) / a0};
    s.provenance = "closed form, beta0 < 0: lower end from r1 r3 - r2^2 = 0 (clipped at 0), upper end from r0 r2 - r1^2 = 0";
  }
  s.bounds = {{s.B.lo > 0 ? std::log(s.B.lo) : -std::numeric_limits<double>::infinity(), std::log(s.B.hi)}};
  if (!(s.B.lo <= s.B.hi)) {
    s.kind = SetKind::Empty;
    s.diagnostic = "closed-form bounds cross: probabilities are not rationalised by the model";
  }
  return s;
}

IdentifiedSet filter_roots(const RootSet& roots, const ModelSpec& spec, const PopulationProbs& P,
                           const MembershipOptions& opt) {
  IdentifiedSet s;
  std::ostringstream diag;
  std::size_t partial = 0;
  std::vector<Theta> degenerate_roots;
  for (const auto& c : roots.candidates) {
    if (!c.free_params.empty()) {
      ++partial;
      continue;
    }
    const auto tm = theta_membership(spec, c.theta, P, opt);
    if (tm.member) s.members.push_back(c.theta);
    bool degenerate = false;
    for (const auto& cell : tm.cells) degenerate = degenerate || cell.degenerate;
    if (degenerate && !opt.allow_degenerate) degenerate_roots.push_back(c.theta);
  }
  if (s.members.empty() && !degenerate_roots.empty()) {
    std::ostringstream os;
    os << "the root at (" << flatten(degenerate_roots.front()).transpose().format(Eigen::IOFormat(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", "))
       << ") makes G rank deficient; set identify.allow_degenerate to test it on the merged representation";
    throw DegenerateModel(os.str());
  }
  if (!degenerate_roots.empty()) diag << degenerate_roots.size() << " degenerate roots were not tested. ";
  if (partial) diag << partial << " candidates leave coordinates free; use the grid scan over them. ";
  s.provenance = roots.method + "; moment inequalities on every (x, y0) cell";
  if (s.members.empty() && !roots.curves.empty()) {
    s.kind = SetKind::Curve;
    s.curves = roots.curves;
    diag << "the equalities leave " << roots.curves.size()
         << " curve(s); vertices are not exact roots, so the inequalities are reported per vertex only";
  } else if (s.members.empty()) {
    s.kind = SetKind::Empty;
    if (!roots.candidates.empty() && partial < roots.candidates.size())
      diag << "no root satisfies the moment inequalities: with exact probabilities the model is misspecified";
    else if (roots.candidates.empty())
      diag << "no root of the moment equalities: " << roots.diagnostic;
  } else {
    s.kind = s.members.size() == 1 ? SetKind::Point : SetKind::FiniteSet;
    const VectorXd first = flatten(s.members.front());
    for (Eigen::Index i = 0; i < first.size(); ++i) {
      Interval iv{first(i), first(i)};
      for (const auto& m : s.members) {
        const double v = flatten(m)(i);
        iv.lo = std::min(iv.lo, v);
        iv.hi = std::max(iv.hi, v);
      }
      s.bounds.push_back(iv);
    }
  }
  s.diagnostic = diag.str();
  return s;
}

namespace {

bool has_equalities(const ModelSpec& spec, const PopulationProbs& P) {
  VectorXd ref(spec.n_params());
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref(i) = 0.37 + 0.13 * double(i);
  const Theta th = unflatten(spec, ref);
  for (const auto& cell : P.cells) {
    const ModelSpec s = normalized(with_initial(spec, cell.y0));
    const auto rep = build_representation(s, th, s.x_at(cell.x_index));
    if (rep.G.rows() > rep.G.cols()) return true;
  }
  return false;
}

} // namespace

IdentifiedSet grid_identify(const ModelSpec& spec_in, const PopulationProbs& P, const SearchBox& box,
                            const GridOptions& opt) {
  const ModelSpec spec = normalized(spec_in);
  const Eigen::Index k = spec.n_params();
  if (box.lo.size() != k || box.hi.size() != k) throw InputError("grid box dimension must match the parameter count");
  if (!(opt.step > 0)) throw InputError("grid step must be positive");
  if ((box.hi.array() < box.lo.array()).any()) throw InputError("grid box bounds are reversed");

  IdentifiedSet s;
  VectorXd base = 0.5 * (box.lo + box.hi);
  std::vector<int> dims;
  for (int i = 0; i < k; ++i) dims.push_back(i);
  std::string pin_note;
  if (opt.pin_equalities && has_equalities(spec, P)) {
    if (auto cf = solve_closed_forms(spec, P); cf && !cf->candidates.empty()) {
      const auto& c = cf->candidates.front();
      base = flatten(c.theta);
      dims = c.free_params;
      pin_note = "coordinates pinned by " + cf->method + "; ";
    } else {
      pin_note = "equalities enforced at tolerance " + std::to_string(opt.membership.eq_tol) + " on grid nodes; ";
    }
  }
  s.scanned = dims;

  std::vector<Eigen::Index> n;
  for (int d : dims) n.push_back(Eigen::Index(std::floor((box.hi(d) - box.lo(d)) / opt.step + 1e-9)) + 1);
  std::size_t total = 1;
  for (auto v : n) total *= std::size_t(v);
  auto node = [&](std::size_t idx) {
    VectorXd p = base;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      const std::size_t i = idx % std::size_t(n[a]);
      idx /= std::size_t(n[a]);
      p(dims[a]) = box.lo(dims[a]) + double(i) * opt.step;
    }
    return p;
  };

  const auto patterns = cell_patterns(spec, P);
  s.cells.resize(total);
  parallel_for(total, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t idx = b; idx < e; ++idx) {
      GridCell& c = s.cells[idx];
      c.params = node(idx);
      const auto tm = theta_membership(patterns, unflatten(spec, c.params), P, opt.membership);
      c.member = tm.member;
      c.min_slack = tm.min_slack;
      c.binding = tm.binding;
    }
  });

  // boundary flags from the grid neighbourhood
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!s.cells[idx].member) continue;
    std::size_t stride = 1, rest = idx;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      const std::size_t i = rest % std::size_t(n[a]);
      rest /= std::size_t(n[a]);
      const bool lo_out = i == 0 || !s.cells[idx - stride].member;
      const bool hi_out = i + 1 == std::size_t(n[a]) || !s.cells[idx + stride].member;
      if (lo_out || hi_out) s.cells[idx].boundary = true;
      stride *= std::size_t(n[a]);
    }
  }

  // sorted lexicographically by parameter vector for deterministic output
  std::stable_sort(s.cells.begin(), s.cells.end(), [](const GridCell& a, const GridCell& b) {
    return std::lexicographical_compare(a.params.data(), a.params.data() + a.params.size(), b.params.data(),
                                        b.params.data() + b.params.size());
  });

  for (const auto& c : s.cells)
    if (c.member) s.members.push_back(unflatten(spec, c.params));
  s.kind = s.members.empty() ? SetKind::Empty : SetKind::GridRegion;
  if (!s.members.empty()) {
    for (Eigen::Index i = 0; i < k; ++i) {
      Interval iv{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      for (const auto& m : s.members) {
        const double v = flatten(m)(i);
        iv.lo = std::min(iv.lo, v);
        iv.hi = std::max(iv.hi, v);
      }
      s.bounds.push_back(iv);
    }
  }
  std::ostringstream prov;
  prov << pin_note << "grid step " << opt.step << " over " << total << " nodes; membership intersected over "
       << P.cells.size() << " (x, y0) cells";
  s.provenance = prov.str();
  if (s.kind == SetKind::Empty) s.diagnostic = "no grid node passes the moment conditions";
  return s;
}

} // namespace panelid
