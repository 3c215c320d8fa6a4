#pragma once

#include <map>
#include <set>
#include <string>

#include "perfseer/poly.hpp"

namespace perfseer {

/// Expression linear in loop indices with coefficients that are polynomials
/// over size parameters, e.g. n*(16*i_out + i_in) + k. Source-level domain
/// constraints and declared shapes are restricted to the strictly affine
/// subset (constant index coefficients, degree-1 offset); rational index
/// coefficients such as n/16 arise from loop splitting under divisibility
/// assumptions.
struct AffineExpr {
  std::map<std::string, Poly> lin;  // loop index -> coefficient, no zero entries
  Poly off;

  static AffineExpr constant(const Rational& c) { return AffineExpr{{}, Poly::constant(c)}; }
  static AffineExpr constant(long long c) { return constant(Rational(c)); }
  static AffineExpr index(const std::string& name) {
    AffineExpr a;
    a.lin[name] = Poly::constant(1);
    return a;
  }
  static AffineExpr param(const std::string& name) {
    return AffineExpr{{}, Poly::symbol(name)};
  }

  bool is_index_free() const { return lin.empty(); }
  bool is_constant() const { return lin.empty() && off.is_constant(); }

  AffineExpr operator+(const AffineExpr& o) const {
    AffineExpr r = *this;
    for (const auto& [s, c] : o.lin) {
      auto it = r.lin.find(s);
      if (it == r.lin.end()) {
        r.lin[s] = c;
      } else {
        it->second += c;
        if (it->second.is_zero()) r.lin.erase(it);
      }
    }
    r.off += o.off;
    return r;
  }
  AffineExpr operator-() const {
    AffineExpr r;
    for (const auto& [s, c] : lin) r.lin[s] = -c;
    r.off = -off;
    return r;
  }
  AffineExpr operator-(const AffineExpr& o) const { return *this + (-o); }

  AffineExpr scaled(const Rational& k) const { return scaled(Poly::constant(k)); }

  /// Multiplies by an index-free scale.
  AffineExpr scaled(const Poly& k) const {
    if (k.is_zero()) return AffineExpr{};
    AffineExpr r;
    for (const auto& [s, c] : lin) r.lin[s] = c * k;
    r.off = off * k;
    return r;
  }

  /// Product; at least one side must be index-free, otherwise the result is
  /// not linear in the indices.
  AffineExpr times(const AffineExpr& o) const {
    if (o.is_index_free()) return scaled(o.off);
    if (is_index_free()) return o.scaled(off);
    throw SemanticError("non-affine product of index expressions");
  }

  AffineExpr substitute_index(const std::string& name, const AffineExpr& value) const {
    auto it = lin.find(name);
    if (it == lin.end()) return *this;
    AffineExpr r = *this;
    Poly coeff = it->second;
    r.lin.erase(name);
    return r + value.scaled(coeff);
  }

  /// Replaces a parameter symbol (inside coefficients and offset) by a value.
  AffineExpr substitute_param(const std::string& name, const Rational& value) const {
    AffineExpr r;
    Poly v = Poly::constant(value);
    for (const auto& [s, c] : lin) {
      Poly nc = c.substitute(name, v);
      if (!nc.is_zero()) r.lin[s] = nc;
    }
    r.off = off.substitute(name, v);
    return r;
  }

  Poly to_poly() const {
    Poly p = off;
    for (const auto& [s, c] : lin) p += c * Poly::symbol(s);
    return p;
  }

  Rational eval(const std::map<std::string, long long>& env) const { return to_poly().eval(env); }

  std::set<std::string> index_symbols() const {
    std::set<std::string> out;
    for (const auto& [s, c] : lin) out.insert(s);
    return out;
  }

  std::set<std::string> all_symbols() const {
    std::set<std::string> out = index_symbols();
    for (const auto& s : off.symbols()) out.insert(s);
    for (const auto& [s, c] : lin)
      for (const auto& ps : c.symbols()) out.insert(ps);
    return out;
  }

  /// True when every index coefficient is a rational constant and the offset
  /// has degree <= 1 (the source-language form).
  bool strictly_affine() const {
    for (const auto& [s, c] : lin)
      if (!c.is_constant()) return false;
    return off.degree() <= 1;
  }

  /// True when all index coefficients and the offset's coefficients are
  /// integers (parsed constraints satisfy this; split introduces rationals).
  bool integer_coefficients() const {
    for (const auto& [s, c] : lin) {
      if (!c.is_constant() || !is_integer(c.constant_value())) return false;
    }
    for (const auto& [m, c] : off.terms())
      if (!is_integer(c)) return false;
    return true;
  }

  bool operator==(const AffineExpr& o) const { return lin == o.lin && off == o.off; }
  bool operator!=(const AffineExpr& o) const { return !(*this == o); }

  std::string str() const { return to_poly().str(); }
};

}  // namespace perfseer
