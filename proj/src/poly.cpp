#include "perfseer/poly.hpp"

#include <algorithm>
#include <sstream>

namespace perfseer {

namespace {

// Print order: total degree descending, then exponent vectors compared
// lexicographically over the sorted symbol universe, higher first.
// Yields e.g. n^2, n*p, p^2, n, p.
struct PrintOrder {
  const std::vector<std::string>& universe;
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da > db;
    for (const auto& s : universe) {
      auto ia = a.exps.find(s), ib = b.exps.find(s);
      int ea = ia == a.exps.end() ? 0 : ia->second;
      int eb = ib == b.exps.end() ? 0 : ib->second;
      if (ea != eb) return ea > eb;
    }
    return false;
  }
};

std::string monomial_str(const Monomial& m) {
  std::string out;
  for (const auto& [s, e] : m.exps) {
    if (!out.empty()) out += "*";
    out += s;
    if (e > 1) out += "^" + std::to_string(e);
  }
  return out;
}

}  // namespace

std::string Poly::str() const {
  if (terms_.empty()) return "0";

  BigInt common_den = 1;
  for (const auto& [m, c] : terms_) common_den = lcm(common_den, denominator(c));

  auto syms = symbols();
  std::vector<std::string> universe(syms.begin(), syms.end());
  std::vector<Monomial> order;
  order.reserve(terms_.size());
  for (const auto& [m, c] : terms_) order.push_back(m);
  std::sort(order.begin(), order.end(), PrintOrder{universe});

  std::ostringstream os;
  bool first = true;
  for (const auto& m : order) {
    Rational scaled = terms_.at(m) * Rational(common_den);
    BigInt coef = numerator(scaled);  // integral after scaling
    bool neg = coef < 0;
    BigInt mag = neg ? BigInt(-coef) : coef;
    if (first) {
      if (neg) os << "-";
      first = false;
    } else {
      os << (neg ? " - " : " + ");
    }
    std::string ms = monomial_str(m);
    if (ms.empty()) {
      os << mag.str();
    } else if (mag == 1) {
      os << ms;
    } else {
      os << mag.str() << "*" << ms;
    }
  }
  if (common_den == 1) return os.str();
  return "(" + os.str() + ")/" + common_den.str();
}

namespace {

// Lexicographic monomial order over alphabetically sorted symbols; compatible
// with multiplication, so leading-term elimination terminates.
bool lex_greater(const Monomial& a, const Monomial& b) {
  auto ia = a.exps.begin();
  auto ib = b.exps.begin();
  while (ia != a.exps.end() && ib != b.exps.end()) {
    if (ia->first < ib->first) return true;
    if (ib->first < ia->first) return false;
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  return ia != a.exps.end();
}

std::pair<Monomial, Rational> lex_leading(const Poly& p) {
  auto best = p.terms().begin();
  for (auto it = std::next(p.terms().begin()); it != p.terms().end(); ++it)
    if (lex_greater(it->first, best->first)) best = it;
  return *best;
}

}  // namespace

bool try_divide(const Poly& num, const Poly& den, Poly& quotient) {
  if (den.is_zero()) return false;
  if (num.is_zero()) {
    quotient = Poly();
    return true;
  }
  if (den.is_constant()) {
    quotient = num * (Rational(1) / den.constant_value());
    return true;
  }
  Poly rem = num;
  Poly q;
  auto [dm, dc] = lex_leading(den);
  while (!rem.is_zero()) {
    auto [rm, rc] = lex_leading(rem);
    // If num = q*den exactly, the leading monomial of every remainder is
    // divisible by den's leading monomial.
    Monomial qm = rm;
    for (const auto& [s, e] : dm.exps) {
      auto it = qm.exps.find(s);
      if (it == qm.exps.end() || it->second < e) return false;
      it->second -= e;
      if (it->second == 0) qm.exps.erase(it);
    }
    Poly t = Poly::constant(rc / dc);
    for (const auto& [s, e] : qm.exps)
      t = t * Poly::symbol(s).pow(static_cast<unsigned>(e));
    q += t;
    rem -= t * den;
  }
  quotient = q;
  return true;
}

PolyRatio PolyRatio::of(const Poly& n, const Poly& d) {
  Poly q;
  if (try_divide(n, d, q)) return PolyRatio{q, Poly::constant(1)};
  return PolyRatio{n, d};
}

namespace {

// power_sum(k) = S_k(x) = sum_{i=0..x} i^k as a polynomial in "x".
const Poly& power_sum(int k) {
  static std::vector<Poly> cache;
  while (static_cast<int>(cache.size()) <= k) {
    int j = static_cast<int>(cache.size());
    Poly x = Poly::symbol("x");
    if (j == 0) {
      cache.push_back(x + Poly::constant(1));
      continue;
    }
    // S_k(x) = ((x+1)^(k+1) - sum_{j<k} C(k+1,j) S_j(x)) / (k+1)
    Poly acc = (x + Poly::constant(1)).pow(static_cast<unsigned>(j + 1));
    BigInt binom = 1;  // C(k+1, 0)
    for (int i = 0; i < j; ++i) {
      acc -= cache[static_cast<size_t>(i)] * Rational(binom);
      binom = binom * (j + 1 - i) / (i + 1);
    }
    cache.push_back(acc * (Rational(1) / Rational(j + 1)));
  }
  return cache[static_cast<size_t>(k)];
}

Poly compose(const Poly& p_in_x, const Poly& value) {
  return p_in_x.substitute("x", value);
}

}  // namespace

Poly sum_over_range(const Poly& p, const std::string& iname, const Poly& lo, const Poly& hi) {
  // Split p by the power of iname; coefficients must not mention iname after
  // extraction (they may mention outer indices and parameters).
  std::map<int, Poly> by_power;
  for (const auto& [m, c] : p.terms()) {
    Monomial rest = m;
    int k = 0;
    auto it = rest.exps.find(iname);
    if (it != rest.exps.end()) {
      k = it->second;
      rest.exps.erase(it);
    }
    Poly term = Poly::constant(c);
    for (const auto& [s, e] : rest.exps)
      term = term * Poly::symbol(s).pow(static_cast<unsigned>(e));
    auto [pos, inserted] = by_power.emplace(k, term);
    if (!inserted) pos->second += term;
  }

  Poly lo_minus_1 = lo - Poly::constant(1);
  Poly result;
  for (const auto& [k, coeff] : by_power) {
    const Poly& sk = power_sum(k);
    result += coeff * (compose(sk, hi) - compose(sk, lo_minus_1));
  }
  return result;
}

}  // namespace perfseer
