#include "perfseer/transforms.hpp"

#include <algorithm>
#include <functional>

#include "perfseer/counting.hpp"

namespace perfseer {

ExprPtr substitute_iname_expr(const ExprPtr& e, const std::string& iname,
                              const AffineExpr& value) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::number:
    case Expr::Kind::scalar_ref:
      return e;
    case Expr::Kind::access: {
      Access a = e->access;
      bool changed = false;
      for (auto& sub : a.subs) {
        if (sub.lin.count(iname)) {
          sub = sub.substitute_index(iname, value);
          changed = true;
        }
      }
      return changed ? Expr::make_access(std::move(a)) : e;
    }
    case Expr::Kind::binary: {
      ExprPtr l = substitute_iname_expr(e->lhs, iname, value);
      ExprPtr r = substitute_iname_expr(e->rhs, iname, value);
      if (l == e->lhs && r == e->rhs) return e;
      return Expr::make_binary(e->op, l, r);
    }
    case Expr::Kind::reduction: {
      ExprPtr b = substitute_iname_expr(e->body, iname, value);
      if (b == e->body) return e;
      return Expr::make_reduction(e->red_iname, b);
    }
  }
  return e;
}

namespace {

std::string fresh_name(const Kernel& k, std::string base) {
  auto taken = [&](const std::string& n) {
    return k.domain.has_iname(n) || k.domain.parameters.count(n) || k.find_arg(n) != nullptr;
  };
  if (!taken(base)) return base;
  for (int i = 0;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!taken(cand)) return cand;
  }
}

// Rewrites a reduction over `iname` into nested reductions over the split
// pair, substituting in the body.
ExprPtr split_reduction(const ExprPtr& e, const std::string& iname, const std::string& outer,
                        const std::string& inner, const AffineExpr& value) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::number:
    case Expr::Kind::scalar_ref:
    case Expr::Kind::access:
      return substitute_iname_expr(e, iname, value);
    case Expr::Kind::binary: {
      ExprPtr l = split_reduction(e->lhs, iname, outer, inner, value);
      ExprPtr r = split_reduction(e->rhs, iname, outer, inner, value);
      if (l == e->lhs && r == e->rhs) return e;
      return Expr::make_binary(e->op, l, r);
    }
    case Expr::Kind::reduction: {
      ExprPtr b = split_reduction(e->body, iname, outer, inner, value);
      if (e->red_iname == iname)
        return Expr::make_reduction(outer, Expr::make_reduction(inner, b));
      if (b == e->body) return e;
      return Expr::make_reduction(e->red_iname, b);
    }
  }
  return e;
}

}  // namespace

Kernel split_iname(const Kernel& k, const std::string& iname, long long factor) {
  if (factor < 1) throw SemanticError("split factor must be positive");
  if (!k.domain.has_iname(iname)) throw SemanticError("unknown iname '" + iname + "'");
  if (!k.is_sequential(iname))
    throw SemanticError("cannot split parallel-tagged iname '" + iname + "'");

  const Bound b = k.domain.bound(iname);
  AffineExpr trip = k.domain.trip_count(iname);
  AffineExpr outer_trip = trip.scaled(Rational(1, factor));
  if (!integer_valued_under(outer_trip, k.assumptions)) {
    std::string hint;
    for (const auto& sym : trip.off.symbols()) {
      hint = "requires assumption " + sym + " mod " + std::to_string(factor) + " == 0";
      break;
    }
    if (hint.empty()) hint = "trip count " + trip.str() + " is not divisible by " +
                             std::to_string(factor);
    throw SemanticError("split_iname(" + iname + ", " + std::to_string(factor) + "): " + hint);
  }

  Kernel r = k;
  std::string outer = fresh_name(k, iname + "_out");
  std::string inner = fresh_name(k, iname + "_in");

  // i = factor*i_out + i_in + lo
  AffineExpr value = AffineExpr::index(outer).scaled(Rational(factor)) + AffineExpr::index(inner) +
                     b.lo;

  auto& inames = r.domain.inames;
  size_t pos = static_cast<size_t>(r.domain.index_of(iname));
  inames[pos] = outer;
  inames.insert(inames.begin() + static_cast<long>(pos) + 1, inner);
  r.domain.bounds.erase(iname);
  r.domain.bounds[outer] =
      Bound{AffineExpr::constant(0), outer_trip - AffineExpr::constant(1)};
  r.domain.bounds[inner] = Bound{AffineExpr::constant(0), AffineExpr::constant(factor - 1)};

  for (auto& [name, bound] : r.domain.bounds) {
    if (name == outer || name == inner) continue;
    bound.lo = bound.lo.substitute_index(iname, value);
    bound.hi = bound.hi.substitute_index(iname, value);
  }

  for (auto& s : r.statements) {
    if (s.within.count(iname)) {
      s.within.erase(iname);
      s.within.insert(outer);
      s.within.insert(inner);
    }
    if (s.is_barrier) continue;
    for (auto& sub : s.lhs.subs) sub = sub.substitute_index(iname, value);
    s.rhs = split_reduction(s.rhs, iname, outer, inner, value);
  }

  validate(r);
  return r;
}

Kernel tag_inames(const Kernel& k, const std::map<std::string, InameTag>& tags) {
  Kernel r = k;
  for (const auto& [iname, tag] : tags) {
    if (!k.domain.has_iname(iname)) throw SemanticError("unknown iname '" + iname + "'");
    auto existing = r.iname_tags.find(iname);
    if (existing != r.iname_tags.end() && existing->second.is_parallel() &&
        !(existing->second == tag))
      throw SemanticError("iname '" + iname + "' already carries tag " + existing->second.str());
    if (tag.is_parallel())
      r.iname_tags[iname] = tag;
    else
      r.iname_tags.erase(iname);
  }
  validate(r);
  return r;
}

Kernel assume(const Kernel& k, const Assumption& a) {
  if (a.kind == Assumption::Kind::divisible && a.value < 1)
    throw SemanticError("divisibility modulus must be >= 1");
  if (!k.domain.parameters.count(a.param))
    throw SemanticError("assumption on unknown parameter '" + a.param + "'");
  Kernel r = k;
  if (!r.has_assumption(a)) r.assumptions.push_back(a);
  return r;
}

Kernel assume_divisible(const Kernel& k, const std::string& param, long long modulus) {
  return assume(k, Assumption{Assumption::Kind::divisible, param, modulus});
}

Kernel assume_lower_bound(const Kernel& k, const std::string& param, long long bound) {
  return assume(k, Assumption{Assumption::Kind::lower_bound, param, bound});
}

namespace {

AffineExpr fix_param_affine(const AffineExpr& a, const std::string& param, long long value) {
  return a.substitute_param(param, Rational(value));
}

ExprPtr fix_param_expr(const ExprPtr& e, const std::string& param, long long value) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::number:
    case Expr::Kind::scalar_ref:
      return e;
    case Expr::Kind::access: {
      Access a = e->access;
      for (auto& sub : a.subs) sub = fix_param_affine(sub, param, value);
      return Expr::make_access(std::move(a));
    }
    case Expr::Kind::binary:
      return Expr::make_binary(e->op, fix_param_expr(e->lhs, param, value),
                               fix_param_expr(e->rhs, param, value));
    case Expr::Kind::reduction:
      return Expr::make_reduction(e->red_iname, fix_param_expr(e->body, param, value));
  }
  return e;
}

}  // namespace

Kernel fix_parameters(const Kernel& k, const std::map<std::string, long long>& bindings) {
  Kernel r = k;
  for (const auto& [param, value] : bindings) {
    if (!r.domain.parameters.count(param))
      throw SemanticError("fix_parameters: unknown parameter '" + param + "'");
    std::vector<Assumption> kept;
    for (const auto& a : r.assumptions) {
      if (a.param != param) {
        kept.push_back(a);
        continue;
      }
      if (a.kind == Assumption::Kind::divisible && value % a.value != 0)
        throw SemanticError("fix_parameters: " + param + "=" + std::to_string(value) +
                            " contradicts assumption " + a.str());
      if (a.kind == Assumption::Kind::lower_bound && value < a.value)
        throw SemanticError("fix_parameters: " + param + "=" + std::to_string(value) +
                            " contradicts assumption " + a.str());
    }
    r.assumptions = std::move(kept);
    for (auto& [iname, bound] : r.domain.bounds) {
      bound.lo = fix_param_affine(bound.lo, param, value);
      bound.hi = fix_param_affine(bound.hi, param, value);
    }
    for (auto& a : r.args)
      for (auto& s : a.shape) s = fix_param_affine(s, param, value);
    for (auto& s : r.statements) {
      if (s.is_barrier) continue;
      for (auto& sub : s.lhs.subs) sub = fix_param_affine(sub, param, value);
      s.rhs = fix_param_expr(s.rhs, param, value);
    }
    r.domain.parameters.erase(param);
  }
  validate(r);
  return r;
}

LaunchGeometry launch_geometry(const Kernel& k, int sub_group_size) {
  if (sub_group_size < 1) throw SemanticError("sub-group size must be >= 1");
  LaunchGeometry g;
  g.sub_group_size = sub_group_size;

  std::map<int, std::string> locals, groups;
  for (const auto& [iname, tag] : k.iname_tags) {
    if (tag.kind == InameTag::Kind::local) locals[tag.axis] = iname;
    if (tag.kind == InameTag::Kind::group) groups[tag.axis] = iname;
  }
  if (locals.empty() && groups.empty()) {
    if (!k.single_work_item)
      throw SemanticError("kernel has no parallel tags and no single-work-item marker");
    g.work_group_size = {1};
    g.num_groups = {Poly::constant(1)};
    return g;
  }
  for (const auto& [axis, iname] : locals) {
    AffineExpr trip = k.domain.trip_count(iname);
    Rational v = trip.off.constant_value();
    if (!is_integer(v) || v < 1)
      throw SemanticError("local axis trip count is not a positive integer");
    g.work_group_size.push_back(v.convert_to<long long>());
  }
  for (const auto& [axis, iname] : groups) {
    AffineExpr trip = k.domain.trip_count(iname);
    if (!trip.is_index_free())
      throw SemanticError("group axis trip count depends on an iname");
    g.num_groups.push_back(trip.off);
  }
  if (g.work_group_size.empty()) g.work_group_size = {1};
  if (g.num_groups.empty()) g.num_groups = {Poly::constant(1)};
  return g;
}

namespace {

struct SurvivingLoad {
  Access access;
  std::set<std::string> within;  // statement within + enclosing binders
  Dtype dtype;
};

void collect_loads(const Kernel& k, const ExprPtr& e, const std::set<std::string>& base_within,
                   std::set<std::string> binders, const std::set<std::string>& remove_vars,
                   const std::set<std::string>& remove_tagged, std::vector<SurvivingLoad>& out) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::number:
    case Expr::Kind::scalar_ref:
      return;
    case Expr::Kind::access: {
      const ArgDecl& decl = k.arg(e->access.array);
      if (decl.space != MemSpace::global) return;
      if (remove_vars.count(e->access.array)) return;
      if (!e->access.tag.empty() && remove_tagged.count(e->access.tag)) return;
      std::set<std::string> within = base_within;
      for (const auto& b : binders) within.insert(b);
      out.push_back(SurvivingLoad{e->access, std::move(within), decl.dtype});
      return;
    }
    case Expr::Kind::binary:
      collect_loads(k, e->lhs, base_within, binders, remove_vars, remove_tagged, out);
      collect_loads(k, e->rhs, base_within, binders, remove_vars, remove_tagged, out);
      return;
    case Expr::Kind::reduction: {
      binders.insert(e->red_iname);
      collect_loads(k, e->body, base_within, binders, remove_vars, remove_tagged, out);
      return;
    }
  }
}

}  // namespace

Kernel remove_work(const Kernel& k, const std::set<std::string>& remove_vars,
                   const std::set<std::string>& remove_tagged, bool allow_empty) {
  for (const auto& v : remove_vars)
    if (!k.find_arg(v)) throw SemanticError("remove_work: unknown array '" + v + "'");
  {
    std::set<std::string> known_tags;
    for (const auto& s : k.statements) {
      if (s.is_barrier) continue;
      if (!s.lhs.tag.empty()) known_tags.insert(s.lhs.tag);
      std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
        if (!e) return;
        if (e->kind == Expr::Kind::access && !e->access.tag.empty())
          known_tags.insert(e->access.tag);
        if (e->kind == Expr::Kind::binary) {
          walk(e->lhs);
          walk(e->rhs);
        }
        if (e->kind == Expr::Kind::reduction) walk(e->body);
      };
      walk(s.rhs);
    }
    for (const auto& t : remove_tagged)
      if (!known_tags.count(t)) throw SemanticError("remove_work: unknown access tag '" + t + "'");
  }

  Kernel r;
  r.name = k.name + "_rm";
  r.domain = k.domain;
  r.assumptions = k.assumptions;
  r.iname_tags = k.iname_tags;
  r.single_work_item = k.single_work_item;

  const std::string acc_name = fresh_name(k, "tgt_read");
  std::optional<Dtype> acc_dtype;

  struct NewStmt {
    Statement s;
    std::string origin;  // original statement id
  };
  std::vector<NewStmt> out;
  std::map<std::string, std::vector<std::string>> replacement_ids;
  int upd_counter = 0;
  bool any_store = false;

  for (const auto& s : k.statements) {
    if (s.is_barrier) continue;  // synchronization guards on-chip work; stripped with it

    std::vector<SurvivingLoad> loads;
    collect_loads(k, s.rhs, s.within, {}, remove_vars, remove_tagged, loads);

    std::vector<std::string> my_ids;
    for (const auto& ld : loads) {
      Statement ns;
      ns.id = acc_name + "_upd_" + std::to_string(upd_counter++);
      ns.lhs = Access{acc_name, "", {}};
      ns.rhs = Expr::make_binary(BinOp::add, Expr::make_scalar(acc_name),
                                 Expr::make_access(ld.access));
      ns.within = ld.within;
      ns.depends_on = s.depends_on;  // remapped below
      ns.harness = true;
      out.push_back(NewStmt{std::move(ns), s.id});
      my_ids.push_back(out.back().s.id);
      if (acc_dtype && *acc_dtype != ld.dtype)
        throw SemanticError("remove_work: surviving loads have conflicting dtypes");
      acc_dtype = ld.dtype;
    }

    bool store_survives = false;
    if (!s.lhs.is_scalar()) {
      const ArgDecl& decl = k.arg(s.lhs.array);
      store_survives = decl.space == MemSpace::global && !remove_vars.count(s.lhs.array) &&
                       (s.lhs.tag.empty() || !remove_tagged.count(s.lhs.tag));
    }
    if (store_survives) {
      Statement ns;
      ns.id = acc_name + "_st_" + std::to_string(upd_counter++);
      ns.lhs = s.lhs;
      ns.rhs = Expr::make_scalar(acc_name);
      ns.within = s.within;
      ns.depends_on = s.depends_on;
      for (const auto& id : my_ids) ns.depends_on.insert(id);
      ns.harness = true;
      out.push_back(NewStmt{std::move(ns), s.id});
      my_ids.push_back(out.back().s.id);
      any_store = true;
      if (!acc_dtype) acc_dtype = k.arg(s.lhs.array).dtype;
    }
    if (!my_ids.empty()) replacement_ids[s.id] = my_ids;
  }

  if (out.empty()) {
    if (!allow_empty) throw SemanticError("remove_work removed every access");
    validate(r);
    return r;
  }

  // Accumulator initialization; generated statements inherit mapped
  // dependencies plus a dependency on it.
  std::set<std::string> parallel_within;
  for (const auto& ns : out)
    for (const auto& iname : ns.s.within)
      if (k.tag_of(iname).is_parallel()) parallel_within.insert(iname);

  Statement init;
  init.id = acc_name + "_init";
  init.lhs = Access{acc_name, "", {}};
  init.rhs = Expr::make_number(Rational(0), *acc_dtype != Dtype::int32);
  init.within = parallel_within;
  init.harness = true;

  r.statements.push_back(init);
  for (auto& ns : out) {
    std::set<std::string> deps{init.id};
    for (const auto& d : ns.s.depends_on) {
      auto it = replacement_ids.find(d);
      if (it == replacement_ids.end()) continue;  // dependency on removed work
      for (const auto& rid : it->second)
        if (rid != ns.s.id) deps.insert(rid);
    }
    ns.s.depends_on = std::move(deps);
    r.statements.push_back(std::move(ns.s));
  }

  // Declarations for surviving arrays.
  std::set<std::string> used_arrays;
  for (const auto& s : r.statements) {
    if (!s.lhs.is_scalar()) used_arrays.insert(s.lhs.array);
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
      if (!e) return;
      if (e->kind == Expr::Kind::access) used_arrays.insert(e->access.array);
      if (e->kind == Expr::Kind::binary) {
        walk(e->lhs);
        walk(e->rhs);
      }
      if (e->kind == Expr::Kind::reduction) walk(e->body);
    };
    if (s.rhs) walk(s.rhs);
  }
  for (const auto& a : k.args)
    if (used_arrays.count(a.name)) r.args.push_back(a);
  r.args.push_back(ArgDecl{acc_name, *acc_dtype, {}, MemSpace::private_mem});

  if (!any_store) {
    // One entry per work-item, flattened with lid(0) fastest.
    std::map<int, std::string> locals, groups;
    for (const auto& [iname, tag] : r.iname_tags) {
      if (tag.kind == InameTag::Kind::local) locals[tag.axis] = iname;
      if (tag.kind == InameTag::Kind::group) groups[tag.axis] = iname;
    }
    std::vector<AffineExpr> dims, subs;
    int max_axis = -1;
    for (const auto& [a, unused] : locals) max_axis = std::max(max_axis, a);
    for (const auto& [a, unused] : groups) max_axis = std::max(max_axis, a);
    for (int axis = max_axis; axis >= 0; --axis) {  // highest axis outermost
      AffineExpr dim = AffineExpr::constant(1);
      AffineExpr sub = AffineExpr::constant(0);
      auto li = locals.find(axis);
      auto gi = groups.find(axis);
      if (li != locals.end() && gi != groups.end()) {
        AffineExpr lsize = r.domain.trip_count(li->second);
        dim = r.domain.trip_count(gi->second).times(lsize);
        sub = AffineExpr::index(gi->second).times(lsize) + AffineExpr::index(li->second) -
              r.domain.bound(gi->second).lo.times(lsize) - r.domain.bound(li->second).lo;
      } else if (li != locals.end()) {
        dim = r.domain.trip_count(li->second);
        sub = AffineExpr::index(li->second) - r.domain.bound(li->second).lo;
      } else if (gi != groups.end()) {
        dim = r.domain.trip_count(gi->second);
        sub = AffineExpr::index(gi->second) - r.domain.bound(gi->second).lo;
      }
      dims.push_back(dim);
      subs.push_back(sub);
    }
    if (dims.empty()) {
      dims.push_back(AffineExpr::constant(1));
      subs.push_back(AffineExpr::constant(0));
    }
    const std::string dest = fresh_name(r, acc_name + "_dest");
    r.args.push_back(ArgDecl{dest, *acc_dtype, dims, MemSpace::global});

    Statement st;
    st.id = dest + "_store";
    st.lhs = Access{dest, "", subs};
    st.rhs = Expr::make_scalar(acc_name);
    std::set<std::string> par;
    for (const auto& [a, iname] : locals) par.insert(iname);
    for (const auto& [a, iname] : groups) par.insert(iname);
    st.within = par;
    st.depends_on.insert(init.id);
    for (const auto& ns : r.statements)
      if (ns.id.rfind(acc_name + "_upd_", 0) == 0) st.depends_on.insert(ns.id);
    st.harness = true;
    r.statements.push_back(std::move(st));
  }

  validate(r);
  return r;
}

}  // namespace perfseer
