#include "panelid/oracle.hpp"

#include "panelid/philox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace panelid {

void FeasibilityGrid::validate() const {
  if (alpha_grid.size() < 2) throw InputError("feasibility grid needs at least two atoms");
  for (Eigen::Index i = 1; i < alpha_grid.size(); ++i)
    if (!(alpha_grid(i) > alpha_grid(i - 1))) throw InputError("feasibility grid must be strictly increasing");
  if (!(tol_feas > 0)) throw InputError("feasibility tolerance must be positive");
}

NnlsResult nnls(const MatrixXd& A, const VectorXd& b, int max_iter) {
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = int(3 * n + 50);
  NnlsResult out;
  out.x = VectorXd::Zero(n);
  std::vector<bool> passive(std::size_t(n), false);
  const double tol = 10 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().maxCoeff() *
                     double(std::max(A.rows(), n));

  auto solve_passive = [&](VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[std::size_t(j)]) idx.push_back(j);
    MatrixXd Ap(A.rows(), Eigen::Index(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(Eigen::Index(k)) = A.col(idx[k]);
    const VectorXd sp = Ap.colPivHouseholderQr().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(Eigen::Index(k));
  };

  VectorXd w = A.transpose() * (b - A * out.x);
  VectorXd s(n);
  while (out.iterations < max_iter) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[std::size_t(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    if (t < 0) {
      out.converged = true;
      break;
    }
    ++out.iterations;
    passive[std::size_t(t)] = true;
    solve_passive(s);
    // inner loop: step back until the passive solution is feasible
    for (int inner = 0; inner < 3 * n; ++inner) {
      double alpha = 1.0;
      bool bad = false;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[std::size_t(j)] && s(j) <= 0) {
          bad = true;
          alpha = std::min(alpha, out.x(j) / (out.x(j) - s(j)));
        }
      if (!bad) break;
      out.x += alpha * (s - out.x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[std::size_t(j)] && out.x(j) <= tol) {
          passive[std::size_t(j)] = false;
          out.x(j) = 0.0;
        }
      solve_passive(s);
    }
    out.x = s;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[std::size_t(j)]) out.x(j) = 0.0;
    w = A.transpose() * (b - A * out.x);
  }
  out.residual = (A * out.x - b).norm();
  return out;
}

Feasibility feasibility_check(const ModelSpec& spec_in, const Theta& th, const PopulationProbs& P,
                              const FeasibilityGrid& grid) {
  grid.validate();
  Feasibility out;
  out.feasible = true;
  const auto histories = enumerate_histories(spec_in.T);
  for (const auto& cell : P.cells) {
    const ModelSpec spec = normalized(with_initial(spec_in, cell.y0));
    const VectorXd x = spec.x_at(cell.x_index);
    const Eigen::Index m = Eigen::Index(histories.size());
    // likelihood columns already sum to one; a heavier row stalls the active set short of tol
    const double wsum = 1.0;
    MatrixXd L(m + 1, grid.alpha_grid.size());
    for (Eigen::Index l = 0; l < grid.alpha_grid.size(); ++l) {
      const double A = std::exp(grid.alpha_grid(l));
      for (Eigen::Index j = 0; j < m; ++j) L(j, l) = likelihood_direct(spec, th, x, histories[std::size_t(j)], A);
      L(m, l) = wsum;
    }
    VectorXd b(m + 1);
    b << cell.p, wsum;
    const NnlsResult sol = nnls(L, b);
    CellFeasibility cf;
    cf.x_index = cell.x_index;
    cf.y0 = cell.y0;
    cf.weights = sol.x;
    cf.residual = (L.topRows(m) * sol.x - cell.p).norm();
    cf.feasible = cf.residual < grid.tol_feas && std::abs(sol.x.sum() - 1.0) < grid.tol_feas;
    out.feasible = out.feasible && cf.feasible;
    out.residual = std::max(out.residual, cf.residual);
    out.cells.push_back(std::move(cf));
  }
  return out;
}

namespace {

struct WeightSolve {
  VectorXd w;
  double tol; // forward error bound; weights above -tol count as nonnegative
};

WeightSolve solve_weights(const Representation& rep, const VectorXd& r, const VectorXd& support) {
  const Eigen::Index n = rep.d + 1;
  MatrixXd M(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double a = support(l);
    const double ga = rep.g(a);
    double ak = 1.0;
    for (Eigen::Index k = 0; k < n; ++k, ak *= a) M(k, l) = ak / ga;
  }
  M.row(0).setOnes();
  VectorXd rhs = r;
  rhs(0) = 1.0;
  // moment rows span many orders of magnitude; equilibrate before solving
  const VectorXd rs = M.cwiseAbs().rowwise().maxCoeff().cwiseInverse();
  M = rs.asDiagonal() * M;
  rhs = rs.asDiagonal() * rhs;
  Eigen::FullPivLU<MatrixXd> lu(M);
  if (!lu.isInvertible()) throw InputError("reconstruction system is singular: support points must be distinct");
  WeightSolve out{lu.solve(rhs), 0.0};
  const double rcond = lu.rcond();
  // solve rounding plus the rounding already carried by r = H P
  const double rel = 110.0 * double(n) * std::numeric_limits<double>::epsilon();
  out.tol = std::max(1e-12, rel / std::max(rcond, 1e-300)) * out.w.cwiseAbs().maxCoeff();
  return out;
}

} // namespace

Reconstruction reconstruct_Q(const Representation& rep, const VectorXd& r, const VectorXd& support,
                             std::uint64_t seed) {
  const Eigen::Index n = rep.d + 1;
  if (r.size() != n) throw InputError("moment vector length does not match deg(g)+1");
  if (support.size() != n) throw InputError("support must have deg(g)+1 points");
  if ((support.array() <= 0).any()) throw InputError("support points must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (support(i) == support(j)) throw InputError("support points must be distinct");

  Reconstruction best;
  best.support = support;
  WeightSolve ws = solve_weights(rep, r, support);
  best.weights = ws.w;
  best.nonnegative = ws.w.minCoeff() >= -ws.tol;
  if (best.nonnegative) return best;

  const Philox4x32 rng(seed);
  for (int attempt = 1; attempt <= 32; ++attempt) {
    VectorXd alpha(n);
    for (Eigen::Index i = 0; i < n; ++i) alpha(i) = -6.0 + 12.0 * rng.uniforms(std::uint64_t(attempt), std::uint64_t(i))[0];
    std::sort(alpha.data(), alpha.data() + n);
    const VectorXd s = alpha.array().exp();
    try {
      ws = solve_weights(rep, r, s);
    } catch (const InputError&) {
      continue;
    }
    best.attempts = attempt + 1;
    const bool ok = ws.w.minCoeff() >= -ws.tol;
    if (ok || ws.w.minCoeff() > best.weights.minCoeff()) {
      best.support = s;
      best.weights = ws.w;
    }
    if (ok) {
      best.nonnegative = true;
      break;
    }
  }
  return best;
}

VectorXd mixture_probs(const Representation& rep, const VectorXd& support, const VectorXd& weights) {
  VectorXd p = VectorXd::Zero(rep.n_hist());
  for (Eigen::Index l = 0; l < support.size(); ++l) p += weights(l) * likelihood_vector(rep, support(l));
  return p;
}

} // namespace panelid
