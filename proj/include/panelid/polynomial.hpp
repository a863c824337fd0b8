#pragma once

#include "panelid/types.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace panelid {

/// Dense polynomial in A; coeffs()[k] multiplies A^k.
template <typename Scalar>
class Polynomial {
public:
  using Coeffs = Vec<Scalar>;
  using Index = Eigen::Index;

  Polynomial() : c_(Coeffs::Zero(1)) {}
  explicit Polynomial(Coeffs c) : c_(std::move(c)) {
    if (c_.size() == 0) c_ = Coeffs::Zero(1);
  }
  Polynomial(std::initializer_list<Scalar> c) : c_(Coeffs(static_cast<Eigen::Index>(c.size()))) {
    std::copy(c.begin(), c.end(), c_.data());
    if (c_.size() == 0) c_ = Coeffs::Zero(1);
  }

  static Polynomial constant(Scalar v) { return Polynomial(Coeffs::Constant(1, v)); }

  /// c * A^k
  static Polynomial monomial(Index k, Scalar c) {
    Coeffs v = Coeffs::Zero(k + 1);
    v(k) = c;
    return Polynomial(std::move(v));
  }

  /// 1 + c*A
  static Polynomial linear(Scalar c) { return Polynomial{Scalar(1), c}; }

  const Coeffs& coeffs() const { return c_; }
  Index size() const { return c_.size(); }
  Scalar operator[](Index k) const { return k < c_.size() ? c_(k) : Scalar(0); }

  Index degree() const {
    Index d = c_.size() - 1;
    while (d > 0 && c_(d) == Scalar(0)) --d;
    return d;
  }

  Polynomial trimmed() const { return Polynomial(Coeffs(c_.head(degree() + 1))); }

  /// Coefficients zero-padded (never truncated) to length n.
  Coeffs padded(Index n) const {
    Coeffs out = Coeffs::Zero(std::max(n, c_.size()));
    out.head(c_.size()) = c_;
    return out;
  }

  Scalar operator()(Scalar a) const {
    Scalar acc = c_(c_.size() - 1);
    for (Index k = c_.size() - 2; k >= 0; --k) acc = acc * a + c_(k);
    return acc;
  }

  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }
  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }

  friend Polynomial operator+(const Polynomial& p, const Polynomial& q) {
    Index n = std::max(p.size(), q.size());
    return Polynomial(Coeffs(p.padded(n) + q.padded(n)));
  }
  friend Polynomial operator-(const Polynomial& p, const Polynomial& q) {
    Index n = std::max(p.size(), q.size());
    return Polynomial(Coeffs(p.padded(n) - q.padded(n)));
  }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    Coeffs out = Coeffs::Zero(p.size() + q.size() - 1);
    for (Index i = 0; i < p.size(); ++i)
      out.segment(i, q.size()) += p.c_(i) * q.c_;
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(Scalar s, const Polynomial& p) { return Polynomial(Coeffs(s * p.c_)); }
  friend Polynomial operator*(const Polynomial& p, Scalar s) { return s * p; }

private:
  Coeffs c_;
};

template <typename Scalar>
Polynomial<Scalar> pow(const Polynomial<Scalar>& p, int e) {
  Polynomial<Scalar> out = Polynomial<Scalar>::constant(Scalar(1));
  for (int i = 0; i < e; ++i) out *= p;
  return out;
}

/// Multiply by A^k.
template <typename Scalar>
Polynomial<Scalar> shift(const Polynomial<Scalar>& p, Eigen::Index k) {
  Vec<Scalar> out = Vec<Scalar>::Zero(p.size() + k);
  out.tail(p.size()) = p.coeffs();
  return Polynomial<Scalar>(std::move(out));
}

/// Powers (1, a, ..., a^d).
template <typename Scalar>
Vec<Scalar> powers(Scalar a, Eigen::Index d) {
  Vec<Scalar> v(d + 1);
  v(0) = Scalar(1);
  for (Eigen::Index k = 1; k <= d; ++k) v(k) = v(k - 1) * a;
  return v;
}

} // namespace panelid
