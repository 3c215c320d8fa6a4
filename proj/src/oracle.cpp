#include "perfseer/oracle.hpp"

#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace perfseer {

std::string NumericPattern::key() const {
  std::ostringstream os;
  os << "mem:" << mem << ":" << dir << ":" << dtype_bytes;
  os << ":tag=" << tag;
  os << ":ls={";
  bool first = true;
  for (const auto& [a, s] : lstrides) {
    if (!first) os << ";";
    first = false;
    os << a << ":" << s;
  }
  os << "}:gs={";
  first = true;
  for (const auto& [a, s] : gstrides) {
    if (!first) os << ";";
    first = false;
    os << a << ":" << s;
  }
  os << "}:loop=";
  if (has_loop_stride)
    os << loop_stride;
  else
    os << "-";
  return os.str();
}

NumericPattern evaluate_pattern(const AccessPattern& p,
                                const std::map<std::string, long long>& bindings) {
  NumericPattern n;
  n.mem = memtype_str(p.mem);
  n.dir = direction_str(p.dir);
  n.dtype_bytes = p.dtype_bytes;
  n.tag = p.tag;
  n.gran = granularity_str(p.gran);
  auto eval_ll = [&](const Poly& poly) {
    Rational v = poly.eval(bindings);
    if (!is_integer(v)) throw EvalError("stride " + poly.str() + " is not an integer");
    return numerator(v).convert_to<long long>();
  };
  for (const auto& [a, s] : p.lstrides) n.lstrides[a] = eval_ll(s);
  for (const auto& [a, s] : p.gstrides) n.gstrides[a] = eval_ll(s);
  if (p.loop_stride) {
    n.has_loop_stride = true;
    n.loop_stride = eval_ll(*p.loop_stride);
  }
  return n;
}

namespace {

using Env = std::map<std::string, long long>;

long long eval_affine(const AffineExpr& a, const Env& env) {
  Rational v = a.eval(env);
  if (!is_integer(v)) throw EvalError("affine expression " + a.str() + " is not integral");
  return numerator(v).convert_to<long long>();
}

struct SiteInfo {
  size_t id;
  Access access;
  Direction dir;
  int dtype_bytes;
  NumericPattern pattern;
};

class Enumerator {
public:
  Enumerator(const Kernel& k, const Env& bindings, long long max_points)
      : k_(k), bindings_(bindings), max_points_(max_points), types_(infer_types(k)) {
    for (const auto& [iname, tag] : k.iname_tags) {
      if (tag.kind == InameTag::Kind::local) local_axis_[tag.axis] = iname;
      if (tag.kind == InameTag::Kind::group) group_axis_[tag.axis] = iname;
    }
  }

  OracleCounts run() {
    for (const auto& s : k_.statements) {
      if (s.is_barrier) {
        tally_barrier(s);
        continue;
      }
      collect_sites(s);
      enumerate_statement(s);
    }

    OracleCounts out;
    out.ops = op_tally_;
    out.barrier_local = barrier_;
    for (const auto& [key, sites] : pattern_groups_) {
      long long count = 0;
      std::set<std::pair<std::string, std::vector<long long>>> tuples;
      for (size_t sid : sites) {
        count += site_counts_[sid];
        for (const auto& t : site_tuples_[sid])
          tuples.insert({site_infos_[sid].access.array, t});
      }
      out.access_counts[key] = count;
      out.access_footprints[key] = static_cast<long long>(tuples.size());
      out.access_gran[key] = site_infos_[sites[0]].pattern.gran;
    }
    for (const auto& [array, tuples] : array_tuples_)
      out.footprints[array] = static_cast<long long>(tuples.size());

    // Group launches: product of group-axis trip counts.
    bool ok = !group_axis_.empty() || k_.single_work_item;
    if (ok) {
      long long groups = 1;
      for (const auto& [axis, iname] : group_axis_) {
        long long lo = eval_affine(k_.domain.bound(iname).lo, bindings_);
        long long hi = eval_affine(k_.domain.bound(iname).hi, bindings_);
        groups *= (hi - lo + 1);
      }
      out.group_launch = groups;
      out.has_group_launch = true;
    } else if (!local_axis_.empty()) {
      out.group_launch = 1;
      out.has_group_launch = true;
    }
    return out;
  }

private:
  void bump_budget() {
    if (++visited_ > max_points_)
      throw EvalError("brute-force enumeration exceeds the point budget");
  }

  // --- site discovery ------------------------------------------------------

  void collect_sites(const Statement& s) {
    statement_sites_[s.id] = {};
    if (!s.lhs.is_scalar()) add_site(s, s.lhs, Direction::store, {});
    std::function<void(const ExprPtr&, std::vector<std::string>&)> walk =
        [&](const ExprPtr& e, std::vector<std::string>& binders) {
          switch (e->kind) {
            case Expr::Kind::number:
            case Expr::Kind::scalar_ref:
              return;
            case Expr::Kind::access:
              add_site(s, e->access, Direction::load, binders);
              return;
            case Expr::Kind::binary:
              walk(e->lhs, binders);
              walk(e->rhs, binders);
              return;
            case Expr::Kind::reduction: {
              binders.push_back(e->red_iname);
              walk(e->body, binders);
              binders.pop_back();
              return;
            }
          }
        };
    std::vector<std::string> binders;
    if (s.rhs) walk(s.rhs, binders);
  }

  void add_site(const Statement& s, const Access& a, Direction dir,
                const std::vector<std::string>& binders) {
    const ArgDecl& decl = k_.arg(a.array);
    if (decl.space == MemSpace::private_mem) return;
    SiteInfo info;
    info.id = site_infos_.size();
    info.access = a;
    info.dir = dir;
    info.dtype_bytes = dtype_bytes(decl.dtype);
    info.pattern = probe_pattern(s, a, dir, decl, binders);
    statement_sites_[s.id].push_back(info.id);
    pattern_groups_[info.pattern.key()].push_back(info.id);
    site_counts_.push_back(0);
    site_tuples_.emplace_back();
    site_infos_.push_back(std::move(info));
  }

  // Strides by numeric differencing of the flattened index, verified at a
  // second probe point (affine subscripts have constant differences).
  NumericPattern probe_pattern(const Statement& s, const Access& a, Direction dir,
                               const ArgDecl& decl, const std::vector<std::string>& binders) {
    NumericPattern p;
    p.mem = decl.space == MemSpace::local ? "local" : "global";
    p.dir = dir == Direction::load ? "load" : "store";
    p.dtype_bytes = dtype_bytes(decl.dtype);
    p.tag = a.tag;

    std::vector<long long> rowstride(decl.shape.size(), 1);
    for (size_t d = decl.shape.size(); d-- > 0;) {
      if (d + 1 < decl.shape.size())
        rowstride[d] = rowstride[d + 1] * eval_affine(decl.shape[d + 1], bindings_);
    }
    auto flat = [&](const Env& env) {
      long long total = 0;
      for (size_t d = 0; d < a.subs.size(); ++d)
        total += eval_affine(a.subs[d], env) * rowstride[d];
      return total;
    };
    auto diff_of = [&](const std::string& iname) {
      Env base = bindings_;
      for (const auto& other : k_.domain.inames) base[other] = 0;
      long long d1;
      {
        Env shifted = base;
        shifted[iname] += 1;
        d1 = flat(shifted) - flat(base);
      }
      Env base2 = bindings_;
      for (const auto& other : k_.domain.inames) base2[other] = 1;
      Env shifted2 = base2;
      shifted2[iname] += 1;
      long long d2 = flat(shifted2) - flat(base2);
      if (d1 != d2) throw EvalError("non-affine subscript on '" + a.array + "'");
      return d1;
    };
    for (const auto& [axis, iname] : local_axis_) p.lstrides[axis] = diff_of(iname);
    for (const auto& [axis, iname] : group_axis_) p.gstrides[axis] = diff_of(iname);

    std::vector<std::string> order = k_.ordered_within(s);
    for (const auto& b : binders) order.push_back(b);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (k_.is_sequential(*it)) {
        p.has_loop_stride = true;
        p.loop_stride = diff_of(*it);
        break;
      }
    }
    if (p.mem == "local") {
      p.gran = "sub_group";
    } else {
      auto l0 = p.lstrides.find(0);
      bool uniform = l0 != p.lstrides.end() && l0->second == 0;
      p.gran = uniform ? "sub_group" : "work_item";
    }
    return p;
  }

  // --- enumeration ---------------------------------------------------------

  void enumerate_statement(const Statement& s) {
    std::vector<std::string> order = k_.ordered_within(s);
    Env env = bindings_;
    nest(s, order, 0, env);
  }

  void nest(const Statement& s, const std::vector<std::string>& order, size_t depth, Env& env) {
    if (depth == order.size()) {
      bump_budget();
      execute_once(s, env);
      return;
    }
    const std::string& iname = order[depth];
    const Bound& b = k_.domain.bound(iname);
    long long lo = eval_affine(b.lo, env);
    long long hi = eval_affine(b.hi, env);
    if (lo > hi + 1)
      throw EvalError("negative range for iname '" + iname + "' at this binding");
    for (long long v = lo; v <= hi; ++v) {
      env[iname] = v;
      nest(s, order, depth + 1, env);
    }
    env.erase(iname);
  }

  void tally_access(const Statement& s, const Access& a, Direction dir, const Env& env) {
    const ArgDecl& decl = k_.arg(a.array);
    if (decl.space == MemSpace::private_mem) return;
    // Identify the site by structural match.
    for (size_t sid : statement_sites_[s.id]) {
      const SiteInfo& info = site_infos_[sid];
      if (info.dir == dir && info.access == a) {
        site_counts_[sid] += 1;
        std::vector<long long> tuple;
        tuple.reserve(a.subs.size());
        for (const auto& sub : a.subs) tuple.push_back(eval_affine(sub, env));
        site_tuples_[sid].insert(tuple);
        array_tuples_[a.array].insert(tuple);
        return;
      }
    }
    throw EvalError("internal: access site not registered");
  }

  void tally_op(Dtype dtype, OpName op) {
    op_tally_[OpKind{dtype, op, Granularity::sub_group}.key()] += 1;
  }

  void execute_once(const Statement& s, Env& env) {
    if (!s.lhs.is_scalar()) tally_access(s, s.lhs, Direction::store, env);
    if (s.rhs) eval_node(s, s.rhs, env);
  }

  // Walks one execution of the expression, tallying ops (madd fusion, nested
  // reductions flattened onto one accumulator) and accesses.
  void eval_node(const Statement& s, const ExprPtr& e, Env& env) {
    switch (e->kind) {
      case Expr::Kind::number:
      case Expr::Kind::scalar_ref:
        return;
      case Expr::Kind::access:
        tally_access(s, e->access, Direction::load, env);
        return;
      case Expr::Kind::binary: {
        Dtype dt = expr_dtype(e, k_, types_);
        switch (e->op) {
          case BinOp::add:
          case BinOp::sub: {
            const ExprPtr* fused = nullptr;
            if (e->rhs->kind == Expr::Kind::binary && e->rhs->op == BinOp::mul)
              fused = &e->rhs;
            else if (e->lhs->kind == Expr::Kind::binary && e->lhs->op == BinOp::mul)
              fused = &e->lhs;
            if (!s.harness) tally_op(dt, fused ? OpName::madd : OpName::add);
            if (fused) {
              eval_node(s, (*fused == e->rhs) ? e->lhs : e->rhs, env);
              eval_node(s, (*fused)->lhs, env);
              eval_node(s, (*fused)->rhs, env);
            } else {
              eval_node(s, e->lhs, env);
              eval_node(s, e->rhs, env);
            }
            return;
          }
          case BinOp::mul:
            if (!s.harness) tally_op(dt, OpName::mul);
            eval_node(s, e->lhs, env);
            eval_node(s, e->rhs, env);
            return;
          case BinOp::div:
            if (!s.harness) tally_op(dt, OpName::div);
            eval_node(s, e->lhs, env);
            eval_node(s, e->rhs, env);
            return;
        }
        return;
      }
      case Expr::Kind::reduction: {
        std::vector<std::string> binders{e->red_iname};
        ExprPtr body = e->body;
        while (body->kind == Expr::Kind::reduction) {
          binders.push_back(body->red_iname);
          body = body->body;
        }
        reduction_nest(s, body, binders, 0, env);
        return;
      }
    }
  }

  void reduction_nest(const Statement& s, const ExprPtr& body,
                      const std::vector<std::string>& binders, size_t depth, Env& env) {
    if (depth == binders.size()) {
      bump_budget();
      Dtype dt = expr_dtype(body, k_, types_);
      if (!s.harness) {
        if (body->kind == Expr::Kind::binary && body->op == BinOp::mul) {
          tally_op(dt, OpName::madd);
          eval_node(s, body->lhs, env);
          eval_node(s, body->rhs, env);
          return;
        }
        tally_op(dt, OpName::add);
      }
      eval_node(s, body, env);
      return;
    }
    const std::string& iname = binders[depth];
    const Bound& b = k_.domain.bound(iname);
    long long lo = eval_affine(b.lo, env);
    long long hi = eval_affine(b.hi, env);
    if (lo > hi + 1)
      throw EvalError("negative range for reduction iname '" + iname + "'");
    for (long long v = lo; v <= hi; ++v) {
      env[iname] = v;
      reduction_nest(s, body, binders, depth + 1, env);
    }
    env.erase(iname);
  }

  void tally_barrier(const Statement& s) {
    std::vector<std::string> seq;
    for (const auto& iname : k_.ordered_within(s))
      if (k_.is_sequential(iname)) seq.push_back(iname);
    Env env = bindings_;
    std::function<void(size_t)> rec = [&](size_t depth) {
      if (depth == seq.size()) {
        bump_budget();
        barrier_ += 1;
        return;
      }
      const Bound& b = k_.domain.bound(seq[depth]);
      long long lo = eval_affine(b.lo, env);
      long long hi = eval_affine(b.hi, env);
      for (long long v = lo; v <= hi; ++v) {
        env[seq[depth]] = v;
        rec(depth + 1);
      }
      env.erase(seq[depth]);
    };
    rec(0);
  }

  const Kernel& k_;
  Env bindings_;
  long long max_points_;
  std::map<std::string, Dtype> types_;
  std::map<int, std::string> local_axis_, group_axis_;

  long long visited_ = 0;
  std::map<std::string, long long> op_tally_;
  long long barrier_ = 0;
  std::vector<SiteInfo> site_infos_;
  std::vector<long long> site_counts_;
  std::vector<std::set<std::vector<long long>>> site_tuples_;
  std::map<std::string, std::vector<size_t>> pattern_groups_;
  std::map<std::string, std::vector<size_t>> statement_sites_;
  std::map<std::string, std::set<std::vector<long long>>> array_tuples_;
};

}  // namespace

OracleCounts brute_force_count(const Kernel& k, const std::map<std::string, long long>& bindings,
                               long long max_points) {
  // Bindings must satisfy the assumption set.
  for (const auto& a : k.assumptions) {
    auto it = bindings.find(a.param);
    if (it == bindings.end()) continue;
    if (a.kind == Assumption::Kind::divisible && it->second % a.value != 0)
      throw EvalError("binding " + a.param + "=" + std::to_string(it->second) +
                      " violates assumption " + a.str());
    if (a.kind == Assumption::Kind::lower_bound && it->second < a.value)
      throw EvalError("binding " + a.param + "=" + std::to_string(it->second) +
                      " violates assumption " + a.str());
  }
  return Enumerator(k, bindings, max_points).run();
}

}  // namespace perfseer
