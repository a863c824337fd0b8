#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "panelid/functionals.hpp"
#include "support.hpp"

using namespace panelid;

namespace {

const DiscreteMixture kMix = DiscreteMixture::equal({-2.0, 1.0});

ModelSpec ar1(int T) {
  ModelSpec s;
  s.T = T;
  return normalized(s);
}

ModelSpec series(std::vector<VectorXd> xs) {
  ModelSpec s;
  s.T = Eigen::Index(xs.front().size());
  s.covariates = CovariateKind::Series;
  s.support_X = std::move(xs);
  return normalized(s);
}

PopulationProbs probs(const ModelSpec& spec, const Theta& th, std::vector<int> y0s = {0}) {
  PopulationProbs P;
  P.T = spec.T;
  for (int y0 : y0s)
    for (std::size_t i = 0; i < spec.n_support(); ++i) P.add(population_cell(spec, th, kMix, i, y0));
  return P;
}

FunctionalSpec make(FunctionalKind k, const std::string& h = "", std::optional<double> xt = std::nullopt) {
  FunctionalSpec f;
  f.kind = k;
  if (!h.empty()) f.history = parse_history(h);
  f.x_tilde = xt;
  return f;
}

double eval_poly(const VectorXd& c, double A) {
  double v = 0.0;
  for (Eigen::Index k = c.size() - 1; k >= 0; --k) v = v * A + c(k);
  return v;
}

} // namespace

TEST_CASE("kind names round trip") {
  for (auto k : {FunctionalKind::AME_NoCov, FunctionalKind::AME_Cov, FunctionalKind::PosteriorMeanA,
                 FunctionalKind::CounterfactualNoDynamics})
    CHECK(parse_functional_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_functional_kind("nope"), InputError);
}

TEST_CASE("eta is the coefficient vector of psi times g") {
  const ModelSpec s3 = ar1(3);
  const ModelSpec sx = series({(VectorXd(3) << 0.0, 0.5, -1.0).finished()});
  const Theta th = make_theta({0.5});
  const Theta thx = make_theta({0.5}, {0.8});
  struct Case {
    FunctionalSpec f;
    const ModelSpec* spec;
    Theta th;
  };
  std::vector<Case> cases = {
      {make(FunctionalKind::AME_NoCov), &s3, th},
      {make(FunctionalKind::PosteriorMeanA, "001"), &s3, th},
      {make(FunctionalKind::PosteriorMeanA, "010"), &s3, th},
      {make(FunctionalKind::CounterfactualNoDynamics, "111"), &s3, th},
      {make(FunctionalKind::CounterfactualNoDynamics, "010"), &s3, th},
      {make(FunctionalKind::AME_Cov, "", 0.5), &sx, thx},
      {make(FunctionalKind::AME_Cov, "", -1.0), &sx, thx},
  };
  for (const auto& c : cases) {
    const std::string kind = to_string(c.f.kind);
    CAPTURE(kind);
    const VectorXd x = c.spec->x_at(0);
    const auto rep = build_representation(*c.spec, c.th, x);
    const EtaVector e = eta_vector(c.f, *c.spec, c.th, x);
    CHECK(e.eta.size() == rep.d + 1);
    for (double A : {0.1, 0.7, 1.0, 2.5, 9.0}) {
      // for posterior means psi is the numerator A L_j(A)
      const double psi_g = functional_psi(c.f, *c.spec, c.th, x, A) * rep.g(A);
      CHECK(eval_poly(e.eta, A) == doctest::Approx(psi_g).epsilon(1e-12));
    }
  }
}

TEST_CASE("T = 3 AME: closed form, mixture and eta'r agree") {
  const ModelSpec s = ar1(3);
  const Theta th = make_theta({0.5});
  const auto P = probs(s, th);
  const auto p = P.cells[0].p;
  const auto f = make(FunctionalKind::AME_NoCov);
  const double closed = (std::exp(0.5) - 1.0) * (p(history_code(parse_history("010"))) + p(history_code(parse_history("101"))));
  CHECK(std::abs(evaluate_functional(f, s, th, P).value - closed) < 1e-10);
  CHECK(std::abs(functional_truth(f, s, th, kMix) - closed) < 1e-10);
}

TEST_CASE("posterior mean and counterfactual match the mixture") {
  const ModelSpec s = ar1(3);
  const Theta th = make_theta({0.5});
  const auto P = probs(s, th);
  for (const std::string h : {"000", "001", "010", "100", "011", "101", "110"}) {
    const auto f = make(FunctionalKind::PosteriorMeanA, h);
    CHECK(std::abs(evaluate_functional(f, s, th, P).value - functional_truth(f, s, th, kMix)) < 1e-9);
  }
  for (const std::string h : {"000", "010", "111", "101"}) {
    const auto f = make(FunctionalKind::CounterfactualNoDynamics, h);
    CHECK(std::abs(evaluate_functional(f, s, th, P).value - functional_truth(f, s, th, kMix)) < 1e-10);
  }
}

TEST_CASE("inadmissible requests name the violated condition") {
  const ModelSpec s = ar1(3);
  const Theta th = make_theta({0.5});
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::PosteriorMeanA, "111"), s, th), InadmissibleFunctional);
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::CounterfactualNoDynamics, "111"), with_initial(s, 1), th),
                  InadmissibleFunctional);
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::AME_Cov, "", 0.5), s, th), InadmissibleFunctional);
  const ModelSpec sx = series({(VectorXd(3) << 0.0, 0.5, -1.0).finished()});
  const Theta thx = make_theta({0.5}, {0.8});
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::AME_Cov), sx, thx, sx.x_at(0)), InadmissibleFunctional);
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::AME_Cov, "", 0.0), sx, thx, sx.x_at(0)), InadmissibleFunctional);
  CHECK_THROWS_AS(eta_vector(make(FunctionalKind::AME_NoCov), sx, thx, sx.x_at(0)), InadmissibleFunctional);
}

TEST_CASE("beta = 0 gives a zero AME") {
  const ModelSpec s = ar1(3);
  const Theta th = make_theta({0.0});
  const auto P = probs(s, th);
  CHECK(evaluate_functional(make(FunctionalKind::AME_NoCov), s, th, P).value == 0.0);
}

TEST_CASE("covariate AME bounds contain the truth") {
  const ModelSpec s = series({(VectorXd(2) << 1.0, 0.0).finished(), (VectorXd(2) << 0.0, 0.0).finished()});
  const Theta th = make_theta({0.5}, {0.8});
  const auto P = probs(s, th);
  GridOptions opt;
  opt.step = 0.02;
  const SearchBox box{(VectorXd(2) << 0.0, 0.4).finished(), (VectorXd(2) << 1.0, 1.2).finished()};
  const IdentifiedSet set = grid_identify(s, P, box, opt);
  REQUIRE(set.kind == SetKind::GridRegion);
  for (std::size_t i = 0; i < 2; ++i) {
    FunctionalSpec f = make(FunctionalKind::AME_Cov, "", 0.0);
    f.x_index = i;
    const FunctionalBounds b = functional_bounds(f, s, set, P);
    const double truth = functional_truth(f, s, th, kMix, s.x_at(i));
    CHECK(b.lo <= truth);
    CHECK(b.hi >= truth);
    CHECK(b.evaluated == set.members.size());
  }
}

TEST_CASE("T = 2 interval bounds of the AME are ordered and contain the truth") {
  const ModelSpec s = ar1(2);
  const Theta th = make_theta({std::log(1.5)});
  const auto P = probs(s, th);
  const IdentifiedSet set = sharp_bounds_T2(P.cells[0].p);
  const auto f = make(FunctionalKind::AME_NoCov);
  const FunctionalBounds b = functional_bounds(f, s, set, P);
  CHECK(b.lo < b.hi);
  const double truth = functional_truth(f, s, th, kMix);
  CHECK(b.lo <= truth);
  CHECK(b.hi >= truth);
}

TEST_CASE("bounds over an empty set are refused") {
  IdentifiedSet empty;
  const ModelSpec s = ar1(3);
  CHECK_THROWS_AS(functional_bounds(make(FunctionalKind::AME_NoCov), s, empty, probs(s, make_theta({0.5}))),
                  EmptyIdentifiedSet);
}
