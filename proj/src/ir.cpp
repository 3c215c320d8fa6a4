#include "perfseer/ir.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace perfseer {

std::string dtype_str(Dtype t) {
  switch (t) {
    case Dtype::float32: return "float32";
    case Dtype::float64: return "float64";
    case Dtype::int32: return "int32";
  }
  return "?";
}

Dtype dtype_from_str(const std::string& s) {
  if (s == "float32") return Dtype::float32;
  if (s == "float64") return Dtype::float64;
  if (s == "int32") return Dtype::int32;
  throw SemanticError("unknown dtype '" + s + "'");
}

std::string memspace_str(MemSpace s) {
  switch (s) {
    case MemSpace::global: return "global";
    case MemSpace::local: return "local";
    case MemSpace::private_mem: return "private";
  }
  return "?";
}

MemSpace memspace_from_str(const std::string& s) {
  if (s == "global") return MemSpace::global;
  if (s == "local") return MemSpace::local;
  if (s == "private") return MemSpace::private_mem;
  throw SemanticError("unknown address space '" + s + "'");
}

std::string InameTag::str() const {
  switch (kind) {
    case Kind::sequential: return "seq";
    case Kind::local: return "l." + std::to_string(axis);
    case Kind::group: return "g." + std::to_string(axis);
  }
  return "?";
}

InameTag iname_tag_from_str(const std::string& s) {
  if (s == "seq" || s.empty()) return InameTag::seq();
  if (s.size() >= 3 && (s[0] == 'l' || s[0] == 'g') && s[1] == '.') {
    int axis = std::stoi(s.substr(2));
    return s[0] == 'l' ? InameTag::local(axis) : InameTag::group(axis);
  }
  throw SemanticError("unknown iname tag '" + s + "'");
}

std::string Assumption::str() const {
  if (kind == Kind::divisible) return param + " mod " + std::to_string(value) + " == 0";
  return param + " >= " + std::to_string(value);
}

int LoopDomain::index_of(const std::string& iname) const {
  for (size_t i = 0; i < inames.size(); ++i)
    if (inames[i] == iname) return static_cast<int>(i);
  return -1;
}

const Bound& LoopDomain::bound(const std::string& iname) const {
  auto it = bounds.find(iname);
  if (it == bounds.end()) throw SemanticError("no bounds for iname '" + iname + "'");
  return it->second;
}

std::string binop_str(BinOp op) {
  switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
  }
  return "?";
}

ExprPtr Expr::make_number(const Rational& v, bool is_float) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::number;
  e->number = v;
  e->number_is_float = is_float;
  return e;
}

ExprPtr Expr::make_scalar(const std::string& name) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::scalar_ref;
  e->name = name;
  return e;
}

ExprPtr Expr::make_access(Access a) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::access;
  e->access = std::move(a);
  return e;
}

ExprPtr Expr::make_binary(BinOp op, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::binary;
  e->op = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

ExprPtr Expr::make_reduction(const std::string& iname, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::reduction;
  e->red_iname = iname;
  e->body = std::move(body);
  return e;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::number:
      return a->number == b->number && a->number_is_float == b->number_is_float;
    case Expr::Kind::scalar_ref:
      return a->name == b->name;
    case Expr::Kind::access:
      return a->access == b->access;
    case Expr::Kind::binary:
      return a->op == b->op && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
    case Expr::Kind::reduction:
      return a->red_iname == b->red_iname && expr_equal(a->body, b->body);
  }
  return false;
}

namespace {

std::string rational_literal_str(const Rational& v, bool is_float) {
  if (!is_float) return BigInt(numerator(v)).str();
  if (is_integer(v)) return BigInt(numerator(v)).str() + ".0";
  std::ostringstream os;
  os << to_double(v);
  return os.str();
}

std::string access_str(const Access& a) {
  std::string s = a.array;
  if (!a.tag.empty()) s += "$" + a.tag;
  if (!a.subs.empty()) {
    s += "[";
    for (size_t i = 0; i < a.subs.size(); ++i) {
      if (i) s += ", ";
      s += a.subs[i].str();
    }
    s += "]";
  }
  return s;
}

int precedence(BinOp op) { return (op == BinOp::mul || op == BinOp::div) ? 2 : 1; }

std::string expr_str_prec(const ExprPtr& e, int parent_prec) {
  switch (e->kind) {
    case Expr::Kind::number:
      return rational_literal_str(e->number, e->number_is_float);
    case Expr::Kind::scalar_ref:
      return e->name;
    case Expr::Kind::access:
      return access_str(e->access);
    case Expr::Kind::reduction:
      return "sum(" + e->red_iname + ", " + expr_str_prec(e->body, 0) + ")";
    case Expr::Kind::binary: {
      int p = precedence(e->op);
      // Right child of - and / needs parens at equal precedence.
      std::string s = expr_str_prec(e->lhs, p - 1) + " " + binop_str(e->op) + " " +
                      expr_str_prec(e->rhs, p);
      if (p <= parent_prec) return "(" + s + ")";
      return s;
    }
  }
  return "?";
}

}  // namespace

std::string expr_str(const ExprPtr& e) { return expr_str_prec(e, 0); }

bool Statement::operator==(const Statement& o) const {
  return id == o.id && is_barrier == o.is_barrier && lhs == o.lhs && expr_equal(rhs, o.rhs) &&
         within == o.within && depends_on == o.depends_on && harness == o.harness;
}

const ArgDecl* Kernel::find_arg(const std::string& name) const {
  for (const auto& a : args)
    if (a.name == name) return &a;
  return nullptr;
}

const ArgDecl& Kernel::arg(const std::string& name) const {
  const ArgDecl* a = find_arg(name);
  if (!a) throw SemanticError("unknown array '" + name + "'");
  return *a;
}

bool Kernel::has_assumption(const Assumption& a) const {
  return std::find(assumptions.begin(), assumptions.end(), a) != assumptions.end();
}

std::optional<long long> Kernel::divisibility_of(const std::string& param) const {
  std::optional<long long> best;
  for (const auto& a : assumptions)
    if (a.kind == Assumption::Kind::divisible && a.param == param)
      if (!best || a.value > *best) best = a.value;
  return best;
}

std::optional<long long> Kernel::lower_bound_of(const std::string& param) const {
  std::optional<long long> best;
  for (const auto& a : assumptions)
    if (a.kind == Assumption::Kind::lower_bound && a.param == param)
      if (!best || a.value > *best) best = a.value;
  return best;
}

std::vector<std::string> Kernel::ordered_within(const Statement& s) const {
  std::vector<std::string> out;
  for (const auto& iname : domain.inames)
    if (s.within.count(iname)) out.push_back(iname);
  return out;
}

bool Kernel::operator==(const Kernel& o) const {
  return name == o.name && domain == o.domain && statements == o.statements && args == o.args &&
         assumptions == o.assumptions && iname_tags == o.iname_tags &&
         single_work_item == o.single_work_item;
}

namespace {

void collect_inames_used(const ExprPtr& e, std::set<std::string>& used,
                         std::set<std::string>& binders) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::number:
    case Expr::Kind::scalar_ref:
      return;
    case Expr::Kind::access:
      for (const auto& sub : e->access.subs)
        for (const auto& s : sub.index_symbols()) used.insert(s);
      return;
    case Expr::Kind::binary:
      collect_inames_used(e->lhs, used, binders);
      collect_inames_used(e->rhs, used, binders);
      return;
    case Expr::Kind::reduction:
      binders.insert(e->red_iname);
      collect_inames_used(e->body, used, binders);
      return;
  }
}

void collect_access_tags(const Kernel& k, const ExprPtr& e, std::set<std::string>& tags) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::access:
      if (!e->access.tag.empty()) {
        if (tags.count(e->access.tag))
          throw SemanticError("duplicate access tag '" + e->access.tag + "'");
        tags.insert(e->access.tag);
      }
      return;
    case Expr::Kind::binary:
      collect_access_tags(k, e->lhs, tags);
      collect_access_tags(k, e->rhs, tags);
      return;
    case Expr::Kind::reduction:
      collect_access_tags(k, e->body, tags);
      return;
    default:
      return;
  }
}

}  // namespace

void validate(const Kernel& k) {
  const LoopDomain& d = k.domain;
  if (d.inames.size() != d.bounds.size())
    throw SemanticError("domain iname list and bounds disagree");

  // Bounds may reference parameters and strictly outer inames only.
  for (size_t i = 0; i < d.inames.size(); ++i) {
    const auto& iname = d.inames[i];
    const Bound& b = d.bound(iname);
    for (const AffineExpr* e : {&b.lo, &b.hi}) {
      for (const auto& sym : e->index_symbols()) {
        int j = d.index_of(sym);
        if (j < 0) throw SemanticError("bound of '" + iname + "' references unknown '" + sym + "'");
        if (j >= static_cast<int>(i))
          throw SemanticError("bound of '" + iname + "' references inner iname '" + sym + "'");
      }
      for (const auto& sym : e->off.symbols())
        if (!d.parameters.count(sym) && d.index_of(sym) < 0)
          throw SemanticError("bound of '" + iname + "' references undeclared '" + sym + "'");
    }
  }

  // Axis uniqueness and contiguity of parallel tags.
  std::map<int, int> local_axes, group_axes;
  for (const auto& [iname, tag] : k.iname_tags) {
    if (!d.has_iname(iname)) throw SemanticError("tag on unknown iname '" + iname + "'");
    if (tag.kind == InameTag::Kind::local) local_axes[tag.axis]++;
    if (tag.kind == InameTag::Kind::group) group_axes[tag.axis]++;
  }
  for (const auto& axes : {local_axes, group_axes}) {
    int expect = 0;
    for (const auto& [axis, count] : axes) {
      if (count > 1) throw SemanticError("duplicate parallel axis " + std::to_string(axis));
      if (axis != expect++) throw SemanticError("parallel axes are not contiguous from 0");
    }
  }

  // Local-tagged inames need static trip counts.
  for (const auto& [iname, tag] : k.iname_tags) {
    if (tag.kind == InameTag::Kind::local) {
      AffineExpr trip = d.trip_count(iname);
      if (!trip.is_constant())
        throw SemanticError("local axis iname '" + iname + "' has parametric trip count " +
                            trip.str());
    }
  }

  // Local arrays must have parameter-free shapes.
  for (const auto& a : k.args) {
    if (a.space == MemSpace::local)
      for (const auto& s : a.shape)
        if (!s.is_constant())
          throw SemanticError("local array '" + a.name + "' has parametric shape");
  }

  std::set<std::string> ids;
  std::set<std::string> tags;
  for (const auto& s : k.statements) {
    if (!ids.insert(s.id).second) throw SemanticError("duplicate statement id '" + s.id + "'");
    for (const auto& iname : s.within)
      if (!d.has_iname(iname))
        throw SemanticError("statement '" + s.id + "' within unknown iname '" + iname + "'");
    if (s.is_barrier) continue;

    std::set<std::string> used, binders;
    collect_inames_used(s.rhs, used, binders);
    for (const auto& sub : s.lhs.subs)
      for (const auto& sym : sub.index_symbols()) used.insert(sym);
    for (const auto& iname : used) {
      if (!s.within.count(iname) && !binders.count(iname))
        throw SemanticError("statement '" + s.id + "' uses iname '" + iname +
                            "' outside its within set");
    }
    for (const auto& b : binders) {
      if (!d.has_iname(b)) throw SemanticError("reduction binds unknown iname '" + b + "'");
      if (s.within.count(b))
        throw SemanticError("reduction binder '" + b + "' is also in within set");
    }

    if (!s.lhs.tag.empty()) {
      if (tags.count(s.lhs.tag)) throw SemanticError("duplicate access tag '" + s.lhs.tag + "'");
      tags.insert(s.lhs.tag);
    }
    collect_access_tags(k, s.rhs, tags);

    // Arity of every access matches the declaration.
    auto check_access = [&](const Access& a) {
      const ArgDecl* decl = k.find_arg(a.array);
      if (!decl) throw SemanticError("access to undeclared '" + a.array + "'");
      if (a.subs.size() != decl->shape.size())
        throw SemanticError("access to '" + a.array + "' has rank " +
                            std::to_string(a.subs.size()) + ", declared rank " +
                            std::to_string(decl->shape.size()));
    };
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
      if (!e) return;
      if (e->kind == Expr::Kind::access) check_access(e->access);
      if (e->kind == Expr::Kind::binary) {
        walk(e->lhs);
        walk(e->rhs);
      }
      if (e->kind == Expr::Kind::reduction) walk(e->body);
    };
    check_access(s.lhs);
    walk(s.rhs);
  }

  for (const auto& a : k.assumptions) {
    if (a.kind == Assumption::Kind::divisible && a.value < 1)
      throw SemanticError("divisibility modulus must be >= 1");
  }

  // Dependency graph is a DAG over known ids, and statement order is
  // consistent with it.
  std::map<std::string, size_t> position;
  for (size_t i = 0; i < k.statements.size(); ++i) position[k.statements[i].id] = i;
  for (size_t i = 0; i < k.statements.size(); ++i) {
    for (const auto& dep : k.statements[i].depends_on) {
      auto it = position.find(dep);
      if (it == position.end())
        throw SemanticError("statement '" + k.statements[i].id + "' depends on unknown '" + dep +
                            "'");
      if (it->second >= i)
        throw SemanticError("statement order violates dependency '" + k.statements[i].id +
                            "' -> '" + dep + "'");
    }
  }

  infer_types(k);
}

namespace {

// Inference result for a subtree: a concrete dtype, or a flexible literal
// that adapts to its context.
struct InferredType {
  std::optional<Dtype> concrete;
  bool float_literal = false;  // meaningful when !concrete
};

InferredType combine(const InferredType& a, const InferredType& b) {
  if (a.concrete && b.concrete) {
    if (*a.concrete == *b.concrete) return a;
    bool af = *a.concrete != Dtype::int32, bf = *b.concrete != Dtype::int32;
    if (af && bf)
      throw SemanticError("mixed float32/float64 arithmetic without explicit cast");
    throw SemanticError("mixed int32/float arithmetic between declared values");
  }
  if (a.concrete) {
    if (b.float_literal && *a.concrete == Dtype::int32)
      throw SemanticError("float literal combined with int32 value");
    return a;
  }
  if (b.concrete) return combine(b, a);
  return InferredType{std::nullopt, a.float_literal || b.float_literal};
}

InferredType infer_expr(const ExprPtr& e, const Kernel& k, std::map<std::string, Dtype>& types) {
  switch (e->kind) {
    case Expr::Kind::number:
      return InferredType{std::nullopt, e->number_is_float};
    case Expr::Kind::scalar_ref: {
      auto it = types.find(e->name);
      if (it == types.end()) throw SemanticError("use of unassigned scalar '" + e->name + "'");
      return InferredType{it->second, false};
    }
    case Expr::Kind::access:
      return InferredType{k.arg(e->access.array).dtype, false};
    case Expr::Kind::binary: {
      if (e->op == BinOp::div) {
        if (e->rhs->kind != Expr::Kind::number || e->rhs->number == 0)
          throw SemanticError("division only by nonzero literals");
      }
      return combine(infer_expr(e->lhs, k, types), infer_expr(e->rhs, k, types));
    }
    case Expr::Kind::reduction:
      return infer_expr(e->body, k, types);
  }
  throw SemanticError("untypeable expression");
}

}  // namespace

std::map<std::string, Dtype> infer_types(const Kernel& k) {
  std::map<std::string, Dtype> types;
  for (const auto& a : k.args)
    if (!a.shape.empty() || a.space != MemSpace::private_mem) types[a.name] = a.dtype;
  // Declared private scalars participate too.
  for (const auto& a : k.args)
    if (a.shape.empty()) types[a.name] = a.dtype;

  for (const auto& s : k.statements) {
    if (s.is_barrier) continue;
    InferredType rhs = infer_expr(s.rhs, k, types);
    Dtype resolved;
    if (s.lhs.is_scalar() && !k.find_arg(s.lhs.array)) {
      // Locally introduced temporary: adopt rhs type.
      if (rhs.concrete)
        resolved = *rhs.concrete;
      else
        resolved = rhs.float_literal ? Dtype::float32 : Dtype::int32;
      auto it = types.find(s.lhs.array);
      if (it != types.end() && it->second != resolved)
        throw SemanticError("conflicting types for temporary '" + s.lhs.array + "'");
      types[s.lhs.array] = resolved;
    } else {
      Dtype decl = k.arg(s.lhs.array).dtype;
      combine(InferredType{decl, false}, rhs);  // throws on conflict
    }
  }
  return types;
}

Dtype expr_dtype(const ExprPtr& e, const Kernel& k, const std::map<std::string, Dtype>& types) {
  auto mutable_types = types;
  InferredType t = infer_expr(e, k, mutable_types);
  if (t.concrete) return *t.concrete;
  return t.float_literal ? Dtype::float32 : Dtype::int32;
}

}  // namespace perfseer
