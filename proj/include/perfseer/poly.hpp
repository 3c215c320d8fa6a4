#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "perfseer/errors.hpp"

namespace perfseer {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

/// Product of symbol powers, e.g. {n:2, p:1} for n^2*p.
struct Monomial {
  std::map<std::string, int> exps;  // exponents, all >= 1

  int degree() const {
    int d = 0;
    for (const auto& [s, e] : exps) d += e;
    return d;
  }
  bool operator<(const Monomial& o) const { return exps < o.exps; }
  bool operator==(const Monomial& o) const { return exps == o.exps; }

  Monomial operator*(const Monomial& o) const {
    Monomial r = *this;
    for (const auto& [s, e] : o.exps) r.exps[s] += e;
    return r;
  }
};

/// Multivariate polynomial with exact rational coefficients. Counts stay
/// exact from projection to evaluation; floating point enters only at the
/// final numeric step.
class Poly {
public:
  Poly() = default;
  static Poly constant(const Rational& c) {
    Poly p;
    if (c != 0) p.terms_[Monomial{}] = c;
    return p;
  }
  static Poly constant(long long c) { return constant(Rational(c)); }
  static Poly symbol(const std::string& name) {
    Poly p;
    Monomial m;
    m.exps[name] = 1;
    p.terms_[m] = 1;
    return p;
  }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.exps.empty());
  }
  Rational constant_value() const {
    if (terms_.empty()) return Rational(0);
    if (!is_constant()) throw EvalError("polynomial is not constant: " + str());
    return terms_.begin()->second;
  }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  std::set<std::string> symbols() const {
    std::set<std::string> out;
    for (const auto& [m, c] : terms_)
      for (const auto& [s, e] : m.exps) out.insert(s);
    return out;
  }

  Poly operator+(const Poly& o) const {
    Poly r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
  }
  Poly operator-() const {
    Poly r;
    for (const auto& [m, c] : terms_) r.terms_[m] = -c;
    return r;
  }
  Poly operator*(const Poly& o) const {
    Poly r;
    for (const auto& [m1, c1] : terms_)
      for (const auto& [m2, c2] : o.terms_) r.add_term(m1 * m2, c1 * c2);
    return r;
  }
  Poly operator*(const Rational& c) const {
    if (c == 0) return Poly();
    Poly r;
    for (const auto& [m, k] : terms_) r.terms_[m] = k * c;
    return r;
  }
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator-=(const Poly& o) { return *this = *this - o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  Poly pow(unsigned e) const {
    Poly r = constant(1);
    for (unsigned i = 0; i < e; ++i) r = r * *this;
    return r;
  }

  bool operator==(const Poly& o) const { return terms_ == o.terms_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  /// Replaces a symbol by a polynomial.
  Poly substitute(const std::string& name, const Poly& value) const {
    Poly r;
    for (const auto& [m, c] : terms_) {
      Poly term = constant(c);
      for (const auto& [s, e] : m.exps) {
        if (s == name)
          term = term * value.pow(static_cast<unsigned>(e));
        else
          term = term * symbol(s).pow(static_cast<unsigned>(e));
      }
      r += term;
    }
    return r;
  }

  Rational eval(const std::map<std::string, long long>& env) const {
    Rational total = 0;
    for (const auto& [m, c] : terms_) {
      Rational v = c;
      for (const auto& [s, e] : m.exps) {
        auto it = env.find(s);
        if (it == env.end()) throw EvalError("unbound symbol '" + s + "' in " + str());
        Rational base(it->second);
        for (int i = 0; i < e; ++i) v *= base;
      }
      total += v;
    }
    return total;
  }

  /// Canonical form: terms by total degree descending, then lexicographic;
  /// a common denominator is factored out, e.g. "(n^2 - 2*n*p + p^2 + n - p)/2".
  std::string str() const;

  const std::map<Monomial, Rational>& terms() const { return terms_; }

private:
  void add_term(const Monomial& m, const Rational& c) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      if (c != 0) terms_[m] = c;
    } else {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  std::map<Monomial, Rational> terms_;
};

inline Poly operator*(const Rational& c, const Poly& p) { return p * c; }

/// Exact ratio of two polynomials; normalizes to denominator 1 when the
/// division is exact. Used for access-to-footprint ratios, which need not be
/// polynomial (e.g. counts over a padded footprint).
struct PolyRatio {
  Poly num;
  Poly den = Poly::constant(1);

  static PolyRatio exact(const Poly& p) { return PolyRatio{p, Poly::constant(1)}; }
  static PolyRatio of(const Poly& n, const Poly& d);

  bool is_poly() const { return den == Poly::constant(1); }
  Rational eval(const std::map<std::string, long long>& env) const {
    Rational d = den.eval(env);
    if (d == 0) throw EvalError("footprint evaluates to zero in ratio " + str());
    return num.eval(env) / d;
  }
  bool operator==(const PolyRatio& o) const { return num == o.num && den == o.den; }
  std::string str() const {
    if (is_poly()) return num.str();
    return "(" + num.str() + ")/(" + den.str() + ")";
  }
};

/// Attempts exact multivariate division num/den; returns true on success.
bool try_divide(const Poly& num, const Poly& den, Poly& quotient);

/// Sum of `p` over integer values lo..hi of `iname`, computed with closed-form
/// power sums. Exact whenever hi >= lo-1 (an empty range sums to zero).
Poly sum_over_range(const Poly& p, const std::string& iname, const Poly& lo, const Poly& hi);

/// One guarded piece of a piecewise polynomial count.
struct PolyPiece {
  std::vector<std::string> guards;  // human-readable guard conjuncts
  Poly poly;
};

/// Piecewise polynomial over size parameters. The counting engine produces
/// single-piece values whose validity region is the kernel's assumption set;
/// the guards record that region.
struct PiecewisePoly {
  std::vector<PolyPiece> pieces;

  static PiecewisePoly single(const Poly& p, std::vector<std::string> guards = {}) {
    return PiecewisePoly{{PolyPiece{std::move(guards), p}}};
  }
  const Poly& poly() const {
    if (pieces.size() != 1) throw EvalError("expected single-piece polynomial");
    return pieces[0].poly;
  }
  Rational eval(const std::map<std::string, long long>& env) const { return poly().eval(env); }
  std::string str() const { return poly().str(); }
};

}  // namespace perfseer
