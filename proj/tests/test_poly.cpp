#include "doctest.h"

#include "perfseer/poly.hpp"

using namespace perfseer;

namespace {
Poly sym(const std::string& s) { return Poly::symbol(s); }
}  // namespace

TEST_CASE("polynomial arithmetic and canonical printing") {
  Poly n = sym("n"), p = sym("p");
  Poly q = (n - p) * (n - p + Poly::constant(1)) * Rational(1, 2);
  CHECK(q.str() == "(n^2 - 2*n*p + p^2 + n - p)/2");
  CHECK(q.eval({{"n", 5}, {"p", 1}}) == Rational(10));
  CHECK((n * n - n * n).is_zero());
  CHECK(Poly().str() == "0");
  CHECK((n * Rational(0)).is_zero());
}

TEST_CASE("substitution") {
  Poly n = sym("n");
  Poly q = n * n + n;
  CHECK(q.substitute("n", Poly::constant(4)).constant_value() == 20);
  CHECK(q.substitute("n", sym("m") + Poly::constant(1)).eval({{"m", 3}}) == 20);
}

TEST_CASE("range summation matches direct sums") {
  // sum_{i=0}^{m} i^2 = m(m+1)(2m+1)/6
  Poly i = sym("i"), m = sym("m");
  Poly s = sum_over_range(i * i, "i", Poly::constant(0), m);
  for (long long v : {0, 1, 2, 7, 20}) {
    long long direct = 0;
    for (long long x = 0; x <= v; ++x) direct += x * x;
    CHECK(s.eval({{"m", v}}) == Rational(direct));
  }

  // Empty range lo = hi + 1 sums to zero.
  Poly zero = sum_over_range(i * i + i, "i", Poly::constant(5), Poly::constant(4));
  CHECK(zero.is_zero());

  // Triangular: sum over i in p..n-1 of (i - p + 1).
  Poly inner = sum_over_range(Poly::constant(1), "j", sym("p"), i);
  Poly outer = sum_over_range(inner, "i", sym("p"), sym("n") - Poly::constant(1));
  CHECK(outer.str() == "(n^2 - 2*n*p + p^2 + n - p)/2");
}

TEST_CASE("exact polynomial division") {
  Poly n = sym("n");
  Poly q;
  CHECK(try_divide(n * n * n * Rational(1, 16), n * n, q));
  CHECK(q == n * Rational(1, 16));
  CHECK_FALSE(try_divide(n * n + Poly::constant(1), n, q));

  PolyRatio r = PolyRatio::of(n * n * n, n * n);
  CHECK(r.is_poly());
  CHECK(r.num == n);
  PolyRatio irr = PolyRatio::of(n * n * Rational(5), n * n + n * Rational(4));
  CHECK_FALSE(irr.is_poly());
  CHECK(irr.eval({{"n", 4}}) == Rational(80, 32));
}

TEST_CASE("rationals stay exact") {
  Poly n = sym("n");
  Poly q = n * Rational(1, 3) + n * Rational(1, 6);
  CHECK(q == n * Rational(1, 2));
  CHECK(q.eval({{"n", 7}}) == Rational(7, 2));
  CHECK_FALSE(is_integer(q.eval({{"n", 7}})));
  CHECK(is_integer(q.eval({{"n", 8}})));
}
