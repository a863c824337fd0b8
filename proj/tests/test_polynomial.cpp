#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "panelid/philox.hpp"
#include "panelid/polynomial.hpp"

using namespace panelid;
using P = Polynomial<double>;

TEST_CASE("product of linear factors matches the expanded coefficients") {
  const P q = P::linear(2.0) * P::linear(3.0); // (1 + 2A)(1 + 3A)
  CHECK(q.degree() == 2);
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(5.0));
  CHECK(q[2] == doctest::Approx(6.0));
  CHECK(q[7] == 0.0);
}

TEST_CASE("Horner evaluation agrees with the factored form") {
  const P q = pow(P::linear(0.7), 4) * P::linear(1.9);
  for (double a : {0.0, 0.3, 1.0, 4.5})
    CHECK(q(a) == doctest::Approx(std::pow(1 + 0.7 * a, 4) * (1 + 1.9 * a)).epsilon(1e-14));
}

TEST_CASE("shift multiplies by a power of A") {
  const P q = shift(P{1.0, 2.0}, 2);
  CHECK(q.degree() == 3);
  CHECK(q(2.0) == doctest::Approx(4.0 * 5.0));
}

TEST_CASE("sum, difference and trimming") {
  const P a{1.0, 2.0, 3.0};
  const P b{1.0, 2.0};
  const P d = a - b;
  CHECK(d.degree() == 2);
  CHECK((a - P{1.0, 2.0, 3.0}).degree() == 0);
  CHECK((a + b)(1.0) == doctest::Approx(9.0));
  CHECK(P{1.0, 0.0, 0.0}.trimmed().size() == 1);
  CHECK(a.padded(5).size() == 5);
  CHECK(a.padded(1).size() == 3);
}

TEST_CASE("powers vector") {
  const VectorXd v = powers(2.0, 3);
  CHECK(v.size() == 4);
  CHECK(v(3) == 8.0);
}

TEST_CASE("polynomial is templated on the scalar") {
  const Polynomial<long double> q = Polynomial<long double>::linear(0.5L) * Polynomial<long double>::linear(0.5L);
  CHECK(double(q(2.0L)) == doctest::Approx(4.0));
}

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32(0)(B{0, 0, 0, 0}) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32(~std::uint64_t(0))(B{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
        B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST_CASE("Philox uniforms are in [0, 1) and stateless") {
  const Philox4x32 g(42);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto u = g.uniforms(7, i);
    CHECK(u[0] >= 0.0);
    CHECK(u[0] < 1.0);
    CHECK(u[1] < 1.0);
  }
  CHECK(g.uniforms(3, 5) == Philox4x32(42).uniforms(3, 5));
  CHECK(g.uniforms(3, 5) != g.uniforms(4, 5));
}
