#include "panelid/inequalities.hpp"

#include "panelid/equalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace panelid {

namespace {

struct Spectrum {
  VectorXd values;
  MatrixXd vectors;
};

Spectrum spectrum(const MatrixXd& M) {
  if (M.rows() == 0) return {VectorXd(), MatrixXd()};
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  return {es.eigenvalues(), es.eigenvectors()};
}

// Distance from s to the span of eigenvectors whose eigenvalue exceeds thr.
double range_distance(const Spectrum& sp, const VectorXd& s, double thr) {
  VectorXd rest = s;
  for (Eigen::Index i = 0; i < sp.values.size(); ++i)
    if (sp.values(i) > thr) rest -= sp.vectors.col(i) * sp.vectors.col(i).dot(s);
  return rest.norm();
}

} // namespace

MembershipReport stieltjes_membership(const VectorXd& r, double slack) {
  if (r.size() < 2) throw InputError("membership needs at least two moments");
  MembershipReport rep;
  const Eigen::Index m = r.size() - 1;
  const Eigen::Index k = m / 2;
  const double scale = r.cwiseAbs().maxCoeff();
  rep.eps_psd = 1e-9 * std::max(1.0, scale) + slack;
  // rank cutoff near the floating point noise floor of the Hankel eigenvalues
  const double singular_thr = 1e-12 * scale;

  const MatrixXd Hk = hankel(r, 0, k + 1);
  const MatrixXd Bk = (m % 2 == 1) ? hankel(r, 1, k + 1) : hankel(r, 1, k);
  const Spectrum sh = spectrum(Hk), sb = spectrum(Bk);
  rep.min_eig_H = sh.values.size() ? sh.values.minCoeff() : 0.0;
  rep.min_eig_B = sb.values.size() ? sb.values.minCoeff() : std::numeric_limits<double>::infinity();

  // the range condition uses H_k for odd m and B_{k-1} for even m
  const Spectrum& rel = (m % 2 == 1) ? sh : sb;
  const double rel_min = (m % 2 == 1) ? rep.min_eig_H : rep.min_eig_B;
  const VectorXd shifted = r.segment(k + 1, m - k);
  bool range_ok = true;
  if (rel.values.size() && rel_min < singular_thr) {
    rep.singular_case = true;
    rep.range_residual = range_distance(rel, shifted, singular_thr);
    // a genuine moment sequence leaves |u's| <= sqrt(lambda_u * c_{m+1}) along each
    // eigenvector; c_{m+1} is estimated by log-convexity from the top two moments
    const double next = r(m - 1) > 0 ? std::max(r(m), r(m) * r(m) / r(m - 1)) : std::abs(r(m));
    rep.eps_range = 1e-7 * shifted.norm() + 10.0 * std::sqrt(singular_thr * std::max(next, 0.0));
    range_ok = rep.range_residual <= rep.eps_range;
  }
  if (!std::isfinite(rep.min_eig_B)) rep.min_eig_B = 0.0;
  rep.is_member = r.allFinite() && rep.min_eig_H >= -rep.eps_psd && rep.min_eig_B >= -rep.eps_psd && range_ok;
  return rep;
}

namespace {
void require_full_rank(const Representation& rep, bool allow_degenerate) {
  if (allow_degenerate) return;
  // throws with the degeneracy named when G has lost rank
  (void)left_null_basis(rep, false);
}
} // namespace

MatrixXd build_H(const Representation& rep, bool allow_degenerate) {
  require_full_rank(rep, allow_degenerate);
  return rep.G.completeOrthogonalDecomposition().pseudoInverse();
}

std::vector<Eigen::Index> pivot_rows(const Representation& rep) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(rep.G.transpose());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < rep.G.cols(); ++i) rows.push_back(qr.colsPermutation().indices()(i));
  std::sort(rows.begin(), rows.end());
  return rows;
}

MatrixXd build_H_lu(const Representation& rep, const std::vector<Eigen::Index>& rows, bool allow_degenerate) {
  require_full_rank(rep, allow_degenerate);
  const Eigen::Index n = rep.G.cols();
  if (Eigen::Index(rows.size()) != n) throw InputError("row selection must pick deg(g)+1 histories");
  MatrixXd GI(n, n);
  for (Eigen::Index i = 0; i < n; ++i) GI.row(i) = rep.G.row(rows[std::size_t(i)]);
  Eigen::FullPivLU<MatrixXd> lu(GI);
  if (!lu.isInvertible()) throw DegenerateModel("selected rows of G are linearly dependent");
  const MatrixXd inv = lu.inverse();
  MatrixXd H = MatrixXd::Zero(n, rep.G.rows());
  for (Eigen::Index i = 0; i < n; ++i) H.col(rows[std::size_t(i)]) = inv.col(i);
  return H;
}

MomentVector moment_vector(const Representation& rep, const MatrixXd& H, const VectorXd& p) {
  if (H.cols() != p.size() || H.rows() != rep.G.cols()) throw InputError("moment_vector: dimension mismatch");
  return MomentVector{H * p, rep.theta, rep.x, rep.spec.y0};
}

std::vector<RepresentationPattern> cell_patterns(const ModelSpec& spec, const PopulationProbs& P) {
  std::vector<RepresentationPattern> out;
  for (const auto& cell : P.cells) {
    const ModelSpec s = normalized(with_initial(spec, cell.y0));
    out.push_back(make_pattern(s, s.x_at(cell.x_index)));
  }
  return out;
}

ThetaMembership theta_membership(const std::vector<RepresentationPattern>& patterns, const Theta& th,
                                 const PopulationProbs& P, const MembershipOptions& opt) {
  ThetaMembership out;
  out.member = true;
  out.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < P.cells.size(); ++c) {
    const auto& cell = P.cells[c];
    CellMembership cm;
    cm.x_index = cell.x_index;
    cm.y0 = cell.y0;
    Representation rep = build_representation(patterns[c], th);
    auto numerical_rank = [](const Eigen::JacobiSVD<MatrixXd>& svd) {
      const VectorXd& sv = svd.singularValues();
      Eigen::Index rank = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
      return rank;
    };
    Eigen::JacobiSVD<MatrixXd> svd(rep.G, Eigen::ComputeFullU);
    Eigen::Index rank = numerical_rank(svd);
    cm.degenerate = rank < rep.G.cols() || rep.rank_deficient;
    if (cm.degenerate && !opt.allow_degenerate) {
      cm.eq_ok = false;
      cm.report.is_member = false;
      out.member = false;
      out.cells.push_back(cm);
      continue;
    }
    if (cm.degenerate) {
      // merged factors give the minimal representation at this theta
      rep = build_representation(merge_coincident(patterns[c], th), th);
      svd.compute(rep.G, Eigen::ComputeFullU);
      rank = numerical_rank(svd);
    }
    const MatrixXd N = svd.matrixU().rightCols(rep.G.rows() - rank);
    cm.eq_residual = N.cols() ? (N.transpose() * cell.p).cwiseAbs().maxCoeff() : 0.0;
    cm.eq_ok = cm.eq_residual <= opt.eq_tol;
    const MatrixXd H = rep.G.completeOrthogonalDecomposition().pseudoInverse();
    cm.moments = moment_vector(rep, H, cell.p);
    cm.report = stieltjes_membership(cm.moments.r, opt.psd_slack);
    out.member = out.member && cm.eq_ok && cm.report.is_member;
    std::ostringstream lab;
    lab << "x" << cell.x_index << "/y0=" << cell.y0 << ":";
    const Eigen::Index m = cm.moments.r.size() - 1;
    if (cm.report.min_eig_H < out.min_slack) {
      out.min_slack = cm.report.min_eig_H;
      out.binding = lab.str() + "H" + std::to_string(m / 2);
    }
    if (cm.report.min_eig_B < out.min_slack) {
      out.min_slack = cm.report.min_eig_B;
      out.binding = lab.str() + "B" + std::to_string(m % 2 == 1 ? m / 2 : m / 2 - 1);
    }
    out.cells.push_back(std::move(cm));
  }
  if (!std::isfinite(out.min_slack)) out.min_slack = 0.0;
  return out;
}

ThetaMembership theta_membership(const ModelSpec& spec, const Theta& th, const PopulationProbs& P,
                                 const MembershipOptions& opt) {
  return theta_membership(cell_patterns(spec, P), th, P, opt);
}

} // namespace panelid
