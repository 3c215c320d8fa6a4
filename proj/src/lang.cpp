#include "perfseer/lang.hpp"

#include <cctype>
#include <functional>
#include <optional>
#include <sstream>

namespace perfseer {

namespace {

enum class Tok {
  end, ident, integer, floating,
  lbrace, rbrace, lbracket, rbracket, lparen, rparen,
  comma, colon, dollar, assign,
  plus, minus, star, slash,
  le, lt, ge, gt, eq,
  kw_and, kw_sum, kw_mod,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  size_t line = 1, col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }
  bool at(Tok k) const { return tok_.kind == k; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  Token expect(Tok k, const std::string& what) {
    if (!at(k)) fail("expected " + what);
    return take();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(tok_.line, tok_.col, msg + (tok_.kind == Tok::end
                                                     ? " at end of input"
                                                     : " before '" + tok_.text + "'"));
  }

private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = Token{Tok::end, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        bump();
      std::string word = src_.substr(start, pos_ - start);
      Tok k = Tok::ident;
      if (word == "and") k = Tok::kw_and;
      else if (word == "sum") k = Tok::kw_sum;
      else if (word == "mod") k = Tok::kw_mod;
      tok_ = Token{k, word, tok_.line, tok_.col};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      bool is_float = false;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      if (pos_ < src_.size() && src_[pos_] == '.') {
        is_float = true;
        bump();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        is_float = true;
        bump();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      }
      tok_ = Token{is_float ? Tok::floating : Tok::integer, src_.substr(start, pos_ - start),
                   tok_.line, tok_.col};
      return;
    }
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    Tok k;
    int len = 1;
    if (two('<', '=')) { k = Tok::le; len = 2; }
    else if (two('>', '=')) { k = Tok::ge; len = 2; }
    else if (two('=', '=')) { k = Tok::eq; len = 2; }
    else switch (c) {
      case '{': k = Tok::lbrace; break;
      case '}': k = Tok::rbrace; break;
      case '[': k = Tok::lbracket; break;
      case ']': k = Tok::rbracket; break;
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      case ',': k = Tok::comma; break;
      case ':': k = Tok::colon; break;
      case '$': k = Tok::dollar; break;
      case '=': k = Tok::assign; break;
      case '+': k = Tok::plus; break;
      case '-': k = Tok::minus; break;
      case '*': k = Tok::star; break;
      case '/': k = Tok::slash; break;
      case '<': k = Tok::lt; break;
      case '>': k = Tok::gt; break;
      default:
        throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
    }
    std::string text = src_.substr(pos_, static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) bump();
    tok_ = Token{k, text, tok_.line, tok_.col};
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  size_t line_ = 1, col_ = 1;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Affine expression parsing (domains, subscripts, shapes).

struct AffineCtx {
  const std::set<std::string>* inames;
  const std::set<std::string>* params;  // null: any non-iname ident is a parameter
  std::set<std::string>* seen_params = nullptr;
};

AffineExpr parse_affine_sum(Lexer& lx, const AffineCtx& ctx);

AffineExpr parse_affine_atom(Lexer& lx, const AffineCtx& ctx) {
  if (lx.at(Tok::integer)) {
    Token t = lx.take();
    return AffineExpr::constant(Rational(BigInt(t.text)));
  }
  if (lx.at(Tok::ident)) {
    Token t = lx.take();
    if (ctx.inames->count(t.text)) return AffineExpr::index(t.text);
    if (ctx.params && !ctx.params->count(t.text)) lx.fail("unknown symbol '" + t.text + "'");
    if (ctx.seen_params) ctx.seen_params->insert(t.text);
    return AffineExpr::param(t.text);
  }
  if (lx.accept(Tok::lparen)) {
    AffineExpr e = parse_affine_sum(lx, ctx);
    lx.expect(Tok::rparen, "')'");
    return e;
  }
  if (lx.accept(Tok::minus)) return -parse_affine_atom(lx, ctx);
  lx.fail("expected integer, identifier, or '('");
}

AffineExpr parse_affine_term(Lexer& lx, const AffineCtx& ctx) {
  AffineExpr e = parse_affine_atom(lx, ctx);
  for (;;) {
    if (lx.accept(Tok::star)) {
      AffineExpr r = parse_affine_atom(lx, ctx);
      e = e.times(r);
    } else if (lx.accept(Tok::slash)) {
      Token t = lx.peek();
      if (!lx.at(Tok::integer)) lx.fail("affine division requires an integer literal divisor");
      lx.take();
      BigInt d(t.text);
      if (d == 0) throw ParseError(t.line, t.col, "division by zero");
      e = e.scaled(Rational(1) / Rational(d));
    } else {
      return e;
    }
  }
}

AffineExpr parse_affine_sum(Lexer& lx, const AffineCtx& ctx) {
  AffineExpr e = parse_affine_term(lx, ctx);
  for (;;) {
    if (lx.accept(Tok::plus))
      e = e + parse_affine_term(lx, ctx);
    else if (lx.accept(Tok::minus))
      e = e - parse_affine_term(lx, ctx);
    else
      return e;
  }
}

// ---------------------------------------------------------------------------
// Domain parsing.

struct Constraint {
  AffineExpr lhs;
  Tok rel;  // le, lt, ge, gt, eq
  AffineExpr rhs;
  size_t line, col;
};

// Rewrites a constraint as a bound on its innermost iname and installs it.
void install_constraint(const Constraint& c, LoopDomain& d,
                        std::map<std::string, std::optional<AffineExpr>>& lows,
                        std::map<std::string, std::optional<AffineExpr>>& highs) {
  // diff = lhs - rhs; relation `lhs REL rhs` becomes `diff REL 0`.
  AffineExpr diff = c.lhs - c.rhs;
  int innermost = -1;
  std::string target;
  for (const auto& [sym, coeff] : diff.lin) {
    int idx = d.index_of(sym);
    if (idx < 0) continue;
    if (idx > innermost) {
      innermost = idx;
      target = sym;
    }
  }
  if (innermost < 0)
    throw ParseError(c.line, c.col, "constraint involves no iname");

  Poly coeff = diff.lin.at(target);
  if (!coeff.is_constant())
    throw ParseError(c.line, c.col, "non-affine constraint on '" + target + "'");
  Rational cv = coeff.constant_value();
  if (cv != 1 && cv != -1)
    throw ParseError(c.line, c.col,
                     "iname '" + target + "' must have coefficient 1 or -1 in constraints");

  AffineExpr rest = diff;
  rest.lin.erase(target);

  auto set_low = [&](const AffineExpr& lo) {
    auto& slot = lows[target];
    if (slot && !(*slot == lo))
      throw ParseError(c.line, c.col, "conflicting lower bounds for '" + target + "'");
    slot = lo;
  };
  auto set_high = [&](const AffineExpr& hi) {
    auto& slot = highs[target];
    if (slot && !(*slot == hi))
      throw ParseError(c.line, c.col, "conflicting upper bounds for '" + target + "'");
    slot = hi;
  };

  const AffineExpr one = AffineExpr::constant(1);
  if (c.rel == Tok::eq) {
    if (cv == 1) {
      set_low(-rest);
      set_high(-rest);
    } else {
      set_low(rest);
      set_high(rest);
    }
    return;
  }
  // Normalize to target <= bound or target >= bound.
  bool upper;  // true: target <= bound
  AffineExpr bound;
  if (cv == 1) {
    // target + rest REL 0
    upper = (c.rel == Tok::le || c.rel == Tok::lt);
    bound = -rest;
    if (c.rel == Tok::lt) bound = bound - one;
    if (c.rel == Tok::gt) bound = bound + one;
  } else {
    // -target + rest REL 0  =>  target REL' rest
    upper = (c.rel == Tok::ge || c.rel == Tok::gt);
    bound = rest;
    if (c.rel == Tok::gt) bound = bound - one;
    if (c.rel == Tok::lt) bound = bound + one;
  }
  if (upper)
    set_high(bound);
  else
    set_low(bound);
}

LoopDomain parse_domain_impl(Lexer& lx) {
  LoopDomain d;
  lx.expect(Tok::lbrace, "'{'");
  lx.expect(Tok::lbracket, "'['");
  for (;;) {
    Token t = lx.expect(Tok::ident, "iname");
    if (d.has_iname(t.text))
      throw ParseError(t.line, t.col, "duplicate iname '" + t.text + "'");
    d.inames.push_back(t.text);
    if (!lx.accept(Tok::comma)) break;
  }
  lx.expect(Tok::rbracket, "']'");
  lx.expect(Tok::colon, "':'");

  std::set<std::string> iname_set(d.inames.begin(), d.inames.end());
  AffineCtx ctx{&iname_set, nullptr, &d.parameters};

  std::map<std::string, std::optional<AffineExpr>> lows, highs;
  do {
    // Comparison chain: sum (REL sum-list)+ with commas expanding pairwise.
    std::vector<std::vector<AffineExpr>> groups;
    std::vector<Tok> rels;
    std::vector<std::pair<size_t, size_t>> positions;
    auto parse_group = [&]() {
      std::vector<AffineExpr> g;
      g.push_back(parse_affine_sum(lx, ctx));
      while (lx.accept(Tok::comma)) g.push_back(parse_affine_sum(lx, ctx));
      return g;
    };
    groups.push_back(parse_group());
    while (lx.at(Tok::le) || lx.at(Tok::lt) || lx.at(Tok::ge) || lx.at(Tok::gt) ||
           lx.at(Tok::eq)) {
      Token rel = lx.take();
      rels.push_back(rel.kind);
      positions.emplace_back(rel.line, rel.col);
      groups.push_back(parse_group());
    }
    if (rels.empty()) lx.fail("expected comparison in constraint");
    for (size_t i = 0; i < rels.size(); ++i)
      for (const auto& a : groups[i])
        for (const auto& b : groups[i + 1])
          install_constraint(Constraint{a, rels[i], b, positions[i].first, positions[i].second},
                             d, lows, highs);
  } while (lx.accept(Tok::kw_and));
  lx.expect(Tok::rbrace, "'}'");

  for (const auto& iname : d.inames) {
    auto lo = lows.find(iname);
    auto hi = highs.find(iname);
    if ((lo == lows.end() || !lo->second) && (hi == highs.end() || !hi->second))
      throw ParseError(1, 1, "iname '" + iname + "' appears in no constraint");
    if (lo == lows.end() || !lo->second)
      throw ParseError(1, 1, "iname '" + iname + "' has no lower bound");
    if (hi == highs.end() || !hi->second)
      throw ParseError(1, 1, "iname '" + iname + "' has no upper bound");
    d.bounds[iname] = Bound{*lo->second, *hi->second};
  }

  // Nesting discipline: bounds reference strictly outer inames only.
  for (size_t i = 0; i < d.inames.size(); ++i) {
    const Bound& b = d.bounds.at(d.inames[i]);
    for (const AffineExpr* e : {&b.lo, &b.hi})
      for (const auto& sym : e->index_symbols())
        if (d.index_of(sym) >= static_cast<int>(i))
          throw ParseError(1, 1, "bound on '" + d.inames[i] + "' references inner iname '" +
                                     sym + "'");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Instruction parsing.

struct InstrCtx {
  const LoopDomain* domain;
  std::set<std::string> iname_set;
  std::set<std::string> binders_in_scope;
};

ExprPtr parse_expr(Lexer& lx, InstrCtx& ctx);

Access parse_access_or_name(Lexer& lx, InstrCtx& ctx, std::string name) {
  Access a;
  a.array = std::move(name);
  if (lx.accept(Tok::dollar)) {
    Token t = lx.expect(Tok::ident, "access tag");
    a.tag = t.text;
  }
  if (lx.accept(Tok::lbracket)) {
    std::set<std::string> visible = ctx.iname_set;
    for (const auto& b : ctx.binders_in_scope) visible.insert(b);
    AffineCtx actx{&visible, nullptr, nullptr};
    // Parameters inside subscripts: any identifier that is not an iname.
    std::set<std::string> params;
    actx.seen_params = &params;
    for (;;) {
      a.subs.push_back(parse_affine_sum(lx, actx));
      if (!lx.accept(Tok::comma)) break;
    }
    lx.expect(Tok::rbracket, "']'");
  } else if (!a.tag.empty()) {
    lx.fail("access tag requires a subscripted access");
  }
  return a;
}

ExprPtr parse_factor(Lexer& lx, InstrCtx& ctx) {
  if (lx.at(Tok::integer) || lx.at(Tok::floating)) {
    Token t = lx.take();
    if (t.kind == Tok::integer) return Expr::make_number(Rational(BigInt(t.text)), false);
    // Exact decimal-to-rational conversion.
    std::string digits = t.text;
    size_t epos = digits.find_first_of("eE");
    long long exp10 = 0;
    if (epos != std::string::npos) {
      exp10 = std::stoll(digits.substr(epos + 1));
      digits = digits.substr(0, epos);
    }
    size_t dot = digits.find('.');
    if (dot != std::string::npos) {
      exp10 -= static_cast<long long>(digits.size() - dot - 1);
      digits.erase(dot, 1);
    }
    Rational v{BigInt(digits.empty() ? "0" : digits)};
    for (long long i = 0; i < exp10; ++i) v *= 10;
    for (long long i = 0; i > exp10; --i) v /= 10;
    return Expr::make_number(v, true);
  }
  if (lx.accept(Tok::minus)) {
    // Negative literal or negated factor: normalize to 0 - x? Keep a literal
    // when possible so -4*u stays a multiply by the literal -4.
    ExprPtr f = parse_factor(lx, ctx);
    if (f->kind == Expr::Kind::number) return Expr::make_number(-f->number, f->number_is_float);
    return Expr::make_binary(BinOp::sub, Expr::make_number(Rational(0), false), f);
  }
  if (lx.accept(Tok::lparen)) {
    ExprPtr e = parse_expr(lx, ctx);
    lx.expect(Tok::rparen, "')'");
    return e;
  }
  if (lx.at(Tok::kw_sum)) {
    Token t = lx.take();
    lx.expect(Tok::lparen, "'(' after sum");
    Token iname = lx.expect(Tok::ident, "reduction iname");
    if (!ctx.iname_set.count(iname.text))
      throw ParseError(iname.line, iname.col, "unknown iname '" + iname.text + "'");
    if (ctx.binders_in_scope.count(iname.text))
      throw ParseError(iname.line, iname.col, "nested rebinding of '" + iname.text + "'");
    lx.expect(Tok::comma, "',' in sum");
    ctx.binders_in_scope.insert(iname.text);
    ExprPtr body = parse_expr(lx, ctx);
    ctx.binders_in_scope.erase(iname.text);
    lx.expect(Tok::rparen, "')' closing sum");
    (void)t;
    return Expr::make_reduction(iname.text, body);
  }
  if (lx.at(Tok::ident)) {
    Token t = lx.take();
    if (lx.at(Tok::dollar) || lx.at(Tok::lbracket)) {
      Access a = parse_access_or_name(lx, ctx, t.text);
      return Expr::make_access(std::move(a));
    }
    if (ctx.iname_set.count(t.text) || ctx.binders_in_scope.count(t.text))
      throw ParseError(t.line, t.col, "iname '" + t.text + "' used as a value");
    return Expr::make_scalar(t.text);
  }
  lx.fail("expected expression");
}

ExprPtr parse_term(Lexer& lx, InstrCtx& ctx) {
  ExprPtr e = parse_factor(lx, ctx);
  for (;;) {
    if (lx.accept(Tok::star))
      e = Expr::make_binary(BinOp::mul, e, parse_factor(lx, ctx));
    else if (lx.at(Tok::slash)) {
      Token slash = lx.take();
      ExprPtr r = parse_factor(lx, ctx);
      if (r->kind != Expr::Kind::number || r->number == 0)
        throw ParseError(slash.line, slash.col, "division only by nonzero literals");
      e = Expr::make_binary(BinOp::div, e, r);
    } else
      return e;
  }
}

ExprPtr parse_expr(Lexer& lx, InstrCtx& ctx) {
  ExprPtr e = parse_term(lx, ctx);
  for (;;) {
    if (lx.accept(Tok::plus))
      e = Expr::make_binary(BinOp::add, e, parse_term(lx, ctx));
    else if (lx.accept(Tok::minus))
      e = Expr::make_binary(BinOp::sub, e, parse_term(lx, ctx));
    else
      return e;
  }
}

void collect_referenced_inames(const ExprPtr& e, const LoopDomain& d, std::set<std::string>& out,
                               std::set<std::string>& binders) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::access:
      for (const auto& sub : e->access.subs)
        for (const auto& s : sub.index_symbols())
          if (d.has_iname(s)) out.insert(s);
      return;
    case Expr::Kind::binary:
      collect_referenced_inames(e->lhs, d, out, binders);
      collect_referenced_inames(e->rhs, d, out, binders);
      return;
    case Expr::Kind::reduction:
      binders.insert(e->red_iname);
      collect_referenced_inames(e->body, d, out, binders);
      return;
    default:
      return;
  }
}

}  // namespace

AffineExpr parse_affine(const std::string& src, const std::set<std::string>& inames,
                        const std::set<std::string>& params) {
  Lexer lx(src);
  AffineCtx ctx{&inames, &params, nullptr};
  AffineExpr e = parse_affine_sum(lx, ctx);
  if (!lx.at(Tok::end)) lx.fail("trailing input after affine expression");
  return e;
}

AffineExpr parse_affine_params(const std::string& src) {
  Lexer lx(src);
  std::set<std::string> no_inames;
  AffineCtx ctx{&no_inames, nullptr, nullptr};
  AffineExpr e = parse_affine_sum(lx, ctx);
  if (!lx.at(Tok::end)) lx.fail("trailing input after affine expression");
  return e;
}

LoopDomain parse_domain(const std::string& src) {
  Lexer lx(src);
  LoopDomain d = parse_domain_impl(lx);
  if (!lx.at(Tok::end)) lx.fail("trailing input after domain");
  return d;
}

Statement parse_instruction(const std::string& src, const LoopDomain& domain,
                            const std::string& id) {
  Lexer lx(src);
  InstrCtx ctx;
  ctx.domain = &domain;
  ctx.iname_set = std::set<std::string>(domain.inames.begin(), domain.inames.end());

  Statement s;
  s.id = id;
  Token first = lx.expect(Tok::ident, "assignment target");
  s.lhs = parse_access_or_name(lx, ctx, first.text);
  lx.expect(Tok::assign, "'='");
  s.rhs = parse_expr(lx, ctx);
  if (!lx.at(Tok::end)) lx.fail("trailing input after instruction");

  // within = nesting closure of the referenced inames (binders excluded).
  std::set<std::string> referenced, binders;
  collect_referenced_inames(s.rhs, domain, referenced, binders);
  for (const auto& sub : s.lhs.subs)
    for (const auto& sym : sub.index_symbols())
      if (domain.has_iname(sym)) referenced.insert(sym);
  for (const auto& b : binders) referenced.erase(b);
  int innermost = -1;
  for (const auto& r : referenced) innermost = std::max(innermost, domain.index_of(r));
  for (int i = 0; i <= innermost; ++i) {
    const std::string& iname = domain.inames[static_cast<size_t>(i)];
    if (!binders.count(iname)) s.within.insert(iname);
  }
  for (const auto& b : binders)
    if (s.within.count(b))
      throw ParseError(1, 1, "reduction binder '" + b + "' is also referenced outside the sum");
  return s;
}

Kernel make_kernel(const std::string& domain_src, const std::vector<std::string>& instructions,
                   const std::vector<ArgSpec>& args, const std::string& name) {
  Kernel k;
  k.name = name;
  k.domain = parse_domain(domain_src);

  std::set<std::string> iname_set(k.domain.inames.begin(), k.domain.inames.end());
  for (const auto& a : args) {
    ArgDecl decl;
    decl.name = a.name;
    if (iname_set.count(a.name) || k.domain.parameters.count(a.name))
      throw SemanticError("argument '" + a.name + "' collides with an iname or parameter");
    decl.dtype = a.dtype;
    decl.space = MemSpace::global;
    for (const auto& s : a.shape) {
      // Shapes may introduce parameters not mentioned in the domain.
      Lexer lx(s);
      std::set<std::string> no_inames;
      AffineCtx ctx{&no_inames, nullptr, &k.domain.parameters};
      AffineExpr shape = parse_affine_sum(lx, ctx);
      if (!lx.at(Tok::end)) lx.fail("trailing input after shape expression");
      if (!shape.strictly_affine() || !shape.is_index_free())
        throw SemanticError("shape of '" + a.name + "' is not affine in parameters");
      decl.shape.push_back(shape);
    }
    k.args.push_back(std::move(decl));
  }

  std::vector<std::string> errors;
  for (size_t i = 0; i < instructions.size(); ++i) {
    try {
      k.statements.push_back(
          parse_instruction(instructions[i], k.domain, "insn_" + std::to_string(i)));
    } catch (const Error& e) {
      errors.push_back("instruction " + std::to_string(i) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    throw SemanticError(joined);
  }

  // Register parameters that appear only in subscripts.
  for (const auto& s : k.statements) {
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
      if (!e) return;
      if (e->kind == Expr::Kind::access)
        for (const auto& sub : e->access.subs)
          for (const auto& sym : sub.all_symbols())
            if (!k.domain.has_iname(sym)) k.domain.parameters.insert(sym);
      if (e->kind == Expr::Kind::binary) {
        walk(e->lhs);
        walk(e->rhs);
      }
      if (e->kind == Expr::Kind::reduction) walk(e->body);
    };
    walk(s.rhs);
    for (const auto& sub : s.lhs.subs)
      for (const auto& sym : sub.all_symbols())
        if (!k.domain.has_iname(sym)) k.domain.parameters.insert(sym);
  }

  // Auto-declare written private temporaries.
  for (const auto& s : k.statements) {
    if (s.lhs.is_scalar() && !k.find_arg(s.lhs.array)) {
      if (iname_set.count(s.lhs.array) || k.domain.parameters.count(s.lhs.array))
        throw SemanticError("cannot assign to iname or parameter '" + s.lhs.array + "'");
      k.args.push_back(ArgDecl{s.lhs.array, Dtype::float32, {}, MemSpace::private_mem});
    }
  }
  auto types = infer_types(k);
  for (auto& a : k.args)
    if (a.space == MemSpace::private_mem && types.count(a.name)) a.dtype = types.at(a.name);

  validate(k);
  return k;
}

std::string pretty_print(const Kernel& k) {
  std::ostringstream os;
  os << "{[";
  for (size_t i = 0; i < k.domain.inames.size(); ++i) {
    if (i) os << ", ";
    os << k.domain.inames[i];
  }
  os << "]: ";
  bool first = true;
  for (const auto& iname : k.domain.inames) {
    const Bound& b = k.domain.bound(iname);
    if (!first) os << " and ";
    first = false;
    os << b.lo.str() << " <= " << iname << " <= " << b.hi.str();
  }
  os << "}\n";
  for (const auto& s : k.statements) {
    if (s.is_barrier) continue;
    Access a = s.lhs;
    std::string lhs = a.array;
    if (!a.tag.empty()) lhs += "$" + a.tag;
    if (!a.subs.empty()) {
      lhs += "[";
      for (size_t i = 0; i < a.subs.size(); ++i) {
        if (i) lhs += ", ";
        lhs += a.subs[i].str();
      }
      lhs += "]";
    }
    os << lhs << " = " << expr_str(s.rhs) << "\n";
  }
  for (const auto& a : k.args) {
    if (a.space != MemSpace::global) continue;
    os << "arg " << a.name << " " << dtype_str(a.dtype);
    if (!a.shape.empty()) {
      os << " [";
      for (size_t i = 0; i < a.shape.size(); ++i) {
        if (i) os << ", ";
        os << a.shape[i].str();
      }
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

Kernel parse_kernel_text(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  std::string line;
  std::string domain;
  std::vector<std::string> instructions;
  std::vector<ArgSpec> args;
  while (std::getline(is, line)) {
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::string trimmed = line.substr(b);
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' '))
      trimmed.pop_back();
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (domain.empty()) {
      domain = trimmed;
      continue;
    }
    if (trimmed.rfind("arg ", 0) == 0) {
      std::istringstream as(trimmed.substr(4));
      ArgSpec spec;
      std::string dtype;
      as >> spec.name >> dtype;
      if (spec.name.empty() || dtype.empty())
        throw SemanticError("malformed arg declaration: " + trimmed);
      spec.dtype = dtype_from_str(dtype);
      std::string rest;
      std::getline(as, rest);
      size_t lb = rest.find('[');
      if (lb != std::string::npos) {
        size_t rb = rest.rfind(']');
        if (rb == std::string::npos || rb < lb)
          throw SemanticError("malformed shape in arg declaration: " + trimmed);
        std::string inner = rest.substr(lb + 1, rb - lb - 1);
        std::string cur;
        int depth = 0;
        for (char c : inner) {
          if (c == '(') depth++;
          if (c == ')') depth--;
          if (c == ',' && depth == 0) {
            spec.shape.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        if (!cur.empty()) spec.shape.push_back(cur);
      }
      args.push_back(std::move(spec));
      continue;
    }
    instructions.push_back(trimmed);
  }
  if (domain.empty()) throw SemanticError("kernel text has no domain line");
  return make_kernel(domain, instructions, args, name);
}

}  // namespace perfseer
