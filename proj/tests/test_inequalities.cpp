#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "panelid/equalities.hpp"
#include "panelid/inequalities.hpp"
#include "support.hpp"

using namespace panelid;
using panelid::testing::Draws;

namespace {

VectorXd raw_moments(const VectorXd& atoms, const VectorXd& w, Eigen::Index m) {
  VectorXd c = VectorXd::Zero(m + 1);
  for (Eigen::Index i = 0; i < atoms.size(); ++i) c += w(i) * powers(atoms(i), m);
  return c;
}

// Lowers the top moment until the Hankel matrix holding it is indefinite by a clear margin.
VectorXd push_top_moment_down(VectorXd c, double eps) {
  const Eigen::Index m = c.size() - 1;
  const Eigen::Index n = m / 2 + 1;
  const MatrixXd X = hankel(c, m % 2, n);
  const MatrixXd M = X.topLeftCorner(n - 1, n - 1);
  const VectorXd h = X.col(n - 1).head(n - 1);
  VectorXd v = VectorXd::Ones(n);
  if (n > 1) v.head(n - 1) = -M.completeOrthogonalDecomposition().solve(h);
  const double schur = v.dot(X * v);
  c(m) -= schur + 10.0 * eps * v.squaredNorm() + 1e-8;
  return c;
}

PopulationProbs probs(const ModelSpec& spec, const Theta& th, const DiscreteMixture& mix, std::vector<int> y0s) {
  PopulationProbs P;
  P.T = spec.T;
  for (int y0 : y0s)
    for (std::size_t i = 0; i < spec.n_support(); ++i) P.add(population_cell(spec, th, mix, i, y0));
  return P;
}

} // namespace

TEST_CASE("Hankel helper") {
  const VectorXd c = VectorXd::LinSpaced(5, 0, 4);
  const MatrixXd H = hankel(c, 1, 2);
  CHECK(H(0, 0) == 1);
  CHECK(H(1, 1) == 3);
  CHECK(H(0, 1) == H(1, 0));
}

TEST_CASE("moments of positive discrete measures pass, lowered top moments fail") {
  Draws d(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + int(d.uniform(0.0, 6.0));
    VectorXd a(n), w(n);
    for (int i = 0; i < n; ++i) {
      a(i) = std::exp(d.uniform(-1.5, 1.2));
      w(i) = 0.1 + d.uniform(0.0, 1.0);
    }
    w /= w.sum();
    const Eigen::Index m = 1 + Eigen::Index(d.uniform(0.0, 11.0));
    CAPTURE(n);
    CAPTURE(m);
    const VectorXd c = raw_moments(a, w, m);
    const MembershipReport ok = stieltjes_membership(c);
    CHECK(ok.is_member);
    const VectorXd bad = push_top_moment_down(c, ok.eps_psd);
    CHECK_FALSE(stieltjes_membership(bad).is_member);
  }
}

TEST_CASE("mass on negative values violates the shifted Hankel condition") {
  VectorXd a(2), w(2);
  a << -1.0, 0.5;
  w << 0.5, 0.5;
  CHECK_FALSE(stieltjes_membership(raw_moments(a, w, 4)).is_member);
}

TEST_CASE("point mass sits in the singular case and passes the range check") {
  const VectorXd c = raw_moments(VectorXd::Constant(1, 2.0), VectorXd::Ones(1), 5);
  const MembershipReport r = stieltjes_membership(c);
  CHECK(r.is_member);
  CHECK(r.singular_case);
  VectorXd off = c;
  off(5) += 1.0; // positive definite direction but outside the range of the rank-one H
  CHECK_FALSE(stieltjes_membership(off).is_member);
}

TEST_CASE("moment vector equals the mixture expectation of V / g") {
  ModelSpec s;
  s.T = 3;
  s = normalized(s);
  const Theta th = make_theta({0.5});
  const auto mix = DiscreteMixture::equal({-2.0, 1.0});
  const auto rep = build_representation(s, th);
  const VectorXd p = population_probs(s, th, mix);
  VectorXd expect = VectorXd::Zero(rep.d + 1);
  for (Eigen::Index i = 0; i < mix.alphas.size(); ++i) {
    const double A = std::exp(mix.alphas(i));
    expect += mix.weights(i) * powers(A, rep.d) / rep.g(A);
  }
  const MomentVector mv = moment_vector(rep, build_H(rep), p);
  CHECK((mv.r - expect).cwiseAbs().maxCoeff() < 1e-12);
  const MatrixXd H_lu = build_H_lu(rep, pivot_rows(rep));
  CHECK((H_lu * rep.G - MatrixXd::Identity(rep.d + 1, rep.d + 1)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((moment_vector(rep, H_lu, p).r - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate H requires an explicit opt-in") {
  ModelSpec s;
  s.T = 3;
  const auto rep = build_representation(s, make_theta({0.0}));
  CHECK_THROWS_AS(build_H(rep), DegenerateModel);
  CHECK_NOTHROW(build_H(rep, true));
}

TEST_CASE("time-trend: truth is a member, the false root is rejected") {
  ModelSpec s;
  s.T = 3;
  s.covariates = CovariateKind::TimeTrend;
  s = normalized(s);
  const auto P = probs(s, make_theta({0.5}, {0.8}), DiscreteMixture::equal({-2.0, 1.0}), {0});
  CHECK(theta_membership(s, make_theta({0.5}, {0.8}), P).member);
  const RootSet rs = solve_equalities(s, P, SearchBox::cube(2, -4.0, 4.0));
  int members = 0;
  for (const auto& c : rs.candidates) {
    const ThetaMembership tm = theta_membership(s, c.theta, P);
    members += tm.member;
    if (!tm.member) {
      CHECK(tm.min_slack < 0.0);
      CHECK(!tm.binding.empty());
    }
  }
  CHECK(members == 1);
}

TEST_CASE("membership checks every supplied initial condition") {
  ModelSpec s;
  s.T = 3;
  s = normalized(s);
  const auto P = probs(s, make_theta({0.5}), DiscreteMixture::equal({-2.0, 1.0}), {0, 1});
  const ThetaMembership tm = theta_membership(s, make_theta({0.5}), P);
  CHECK(tm.member);
  CHECK(tm.cells.size() == 2);
  CHECK_FALSE(theta_membership(s, make_theta({0.8}), P).member);
}

TEST_CASE("prebuilt patterns give the same verdict") {
  ModelSpec s;
  s.T = 2;
  s.covariates = CovariateKind::Series;
  s.support_X = {(VectorXd(2) << 1.0, 0.0).finished(), (VectorXd(2) << 0.0, 0.0).finished()};
  s = normalized(s);
  const auto P = probs(s, make_theta({0.5}, {0.8}), DiscreteMixture::equal({-2.0, 1.0}), {0});
  const auto pats = cell_patterns(s, P);
  for (double b : {0.2, 0.5, 0.9})
    CHECK(theta_membership(pats, make_theta({b}, {0.8}), P).member ==
          theta_membership(s, make_theta({b}, {0.8}), P).member);
}
