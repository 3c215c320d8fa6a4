#include "perfseer/counting.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "perfseer/kernel_json.hpp"
#include "perfseer/transforms.hpp"

namespace perfseer {

std::string granularity_str(Granularity g) {
  switch (g) {
    case Granularity::work_item: return "work_item";
    case Granularity::sub_group: return "sub_group";
    case Granularity::work_group: return "work_group";
    case Granularity::kernel: return "kernel";
  }
  return "?";
}

std::string opname_str(OpName n) {
  switch (n) {
    case OpName::add: return "add";
    case OpName::mul: return "mul";
    case OpName::madd: return "madd";
    case OpName::div: return "div";
    case OpName::pow_: return "pow";
  }
  return "?";
}

std::string memtype_str(MemType m) { return m == MemType::global_mem ? "global" : "local"; }
std::string direction_str(Direction d) { return d == Direction::load ? "load" : "store"; }

std::string synckind_str(SyncKind k) {
  switch (k) {
    case SyncKind::barrier_local: return "barrier_local";
    case SyncKind::kernel_launch: return "kernel_launch";
    case SyncKind::group_launch: return "group_launch";
  }
  return "?";
}

bool AccessPattern::uniform() const {
  auto it = lstrides.find(0);
  return it != lstrides.end() && it->second.is_zero();
}

std::string AccessPattern::key() const {
  std::ostringstream os;
  os << "mem:" << memtype_str(mem) << ":" << direction_str(dir) << ":" << dtype_bytes;
  os << ":tag=" << tag;
  os << ":ls={";
  bool first = true;
  for (const auto& [a, s] : lstrides) {
    if (!first) os << ";";
    first = false;
    os << a << ":" << s.str();
  }
  os << "}:gs={";
  first = true;
  for (const auto& [a, s] : gstrides) {
    if (!first) os << ";";
    first = false;
    os << a << ":" << s.str();
  }
  os << "}:loop=" << (loop_stride ? loop_stride->str() : "-");
  return os.str();
}

std::string AccessPattern::str() const {
  return key() + ":afr=" + afr.str() + ":" + granularity_str(gran);
}

// ---------------------------------------------------------------------------
// Assumption-driven resolvability and sign reasoning.

namespace {

long long largest_modulus(const std::vector<Assumption>& assumptions, const std::string& param) {
  long long m = 1;
  for (const auto& a : assumptions)
    if (a.kind == Assumption::Kind::divisible && a.param == param) m = std::max(m, a.value);
  return m;
}

bool poly_integer_valued(const Poly& p, const std::vector<Assumption>& assumptions) {
  for (const auto& [mono, coef] : p.terms()) {
    if (is_integer(coef)) continue;
    Rational scaled = coef;
    for (const auto& [sym, exp] : mono.exps) {
      long long m = largest_modulus(assumptions, sym);
      for (int i = 0; i < exp; ++i) scaled *= m;
    }
    if (!is_integer(scaled)) return false;
  }
  return true;
}

}  // namespace

bool integer_valued_under(const AffineExpr& e, const std::vector<Assumption>& assumptions) {
  for (const auto& [sym, coef] : e.lin)
    if (!poly_integer_valued(coef, assumptions)) return false;
  return poly_integer_valued(e.off, assumptions);
}

RegionSign region_sign(const Poly& p, const std::vector<Assumption>& assumptions) {
  if (p.is_zero()) return RegionSign::zero;
  if (p.is_constant())
    return p.constant_value() >= 0 ? RegionSign::always_nonneg : RegionSign::always_neg;

  // Effective lower bound per symbol: the smallest value >= the assumed lower
  // bound that satisfies the divisibility assumptions.
  std::map<std::string, long long> lows;
  for (const auto& sym : p.symbols()) {
    std::optional<long long> lb;
    for (const auto& a : assumptions)
      if (a.kind == Assumption::Kind::lower_bound && a.param == sym)
        if (!lb || a.value > *lb) lb = a.value;
    if (!lb) return RegionSign::unknown;
    long long m = largest_modulus(assumptions, sym);
    long long v = *lb;
    if (m > 1) {
      long long q = v / m;
      if (q * m < v) q += 1;
      v = q * m;
    }
    if (v < 0) return RegionSign::unknown;  // monotonicity argument needs v >= 0
    lows[sym] = v;
  }

  bool all_nonneg = true, all_nonpos = true;
  for (const auto& [mono, coef] : p.terms()) {
    if (mono.exps.empty()) continue;
    if (coef < 0) all_nonneg = false;
    if (coef > 0) all_nonpos = false;
  }
  if (all_nonneg) {
    // Monomials nondecreasing in each symbol over [low, inf): minimum at lows.
    if (p.eval(lows) >= 0) return RegionSign::always_nonneg;
    return RegionSign::unknown;
  }
  if (all_nonpos) {
    if (p.eval(lows) < 0) return RegionSign::always_neg;
    return RegionSign::unknown;
  }
  return RegionSign::unknown;
}

// ---------------------------------------------------------------------------
// Projection counting.

namespace {
std::atomic<uint64_t> g_projections{0};
}

uint64_t projection_count() { return g_projections.load(); }

Poly count_points(const LoopDomain& d, const std::set<std::string>& subset,
                  const std::vector<Assumption>& assumptions) {
  for (const auto& iname : subset) {
    if (!d.has_iname(iname)) throw CountError("projection onto unknown iname '" + iname + "'");
    const Bound& b = d.bound(iname);
    for (const AffineExpr* e : {&b.lo, &b.hi}) {
      for (const auto& sym : e->index_symbols())
        if (!subset.count(sym))
          throw CountError("projection subset not closed under bound references: '" + iname +
                           "' depends on '" + sym + "'");
      if (!integer_valued_under(*e, assumptions))
        throw CountError("bound " + e->str() + " of '" + iname +
                         "' needs divisibility assumption");
    }
  }
  g_projections.fetch_add(1);

  Poly result = Poly::constant(1);
  for (auto it = d.inames.rbegin(); it != d.inames.rend(); ++it) {
    if (!subset.count(*it)) continue;
    const Bound& b = d.bound(*it);
    result = sum_over_range(result, *it, b.lo.to_poly(), b.hi.to_poly());
  }
  for (const auto& sym : result.symbols())
    if (d.has_iname(sym))
      throw CountError("projection left unresolved iname '" + sym + "'");
  return result;
}

// ---------------------------------------------------------------------------
// Per-kernel analysis.

namespace {

struct Site {
  Access access;
  std::set<std::string> context;  // statement within + enclosing reduction binders
  Direction dir;
  Dtype dtype;
  std::vector<std::string> loop_order;  // context in nesting order, binders innermost
};

class Analyzer {
public:
  explicit Analyzer(const Kernel& k) : k_(k), types_(infer_types(k)) {
    for (const auto& [iname, tag] : k.iname_tags) {
      if (tag.kind == InameTag::Kind::local) local_axis_[tag.axis] = iname;
      if (tag.kind == InameTag::Kind::group) group_axis_[tag.axis] = iname;
    }
  }

  // Access classification (with footprints and AFR) is the expensive,
  // assumption-hungry part; operation and synchronization counting stay
  // available on kernels whose footprints the engine cannot express.
  KernelCounts run(bool with_accesses = true) {
    KernelCounts out;
    try {
      out.geometry = launch_geometry(k_);
    } catch (const SemanticError&) {
      out.geometry = std::nullopt;
    }

    for (const auto& s : k_.statements) {
      if (s.is_barrier) {
        std::set<std::string> seq;
        for (const auto& iname : s.within)
          if (k_.is_sequential(iname)) seq.insert(iname);
        add_sync(out, SyncKind::barrier_local, proj(seq));
        continue;
      }
      // Stores.
      if (!s.lhs.is_scalar()) record_site(s, s.lhs, Direction::store, {});
      // Loads and arithmetic.
      count_node(out, s, s.rhs, {});
    }
    add_sync(out, SyncKind::kernel_launch, Poly::constant(1));
    if (out.geometry) add_sync(out, SyncKind::group_launch, out.geometry->total_groups());

    finalize_ops(out);
    if (with_accesses) {
      finalize_accesses(out);
      for (const auto& a : k_.args) {
        if (a.space == MemSpace::private_mem) continue;
        auto it = sites_by_array_.find(a.name);
        if (it == sites_by_array_.end()) continue;
        out.footprints[a.name] = union_footprint(it->second);
      }
    }
    return out;
  }

  Poly union_footprint(const std::vector<Site>& sites);

private:
  Poly proj(const std::set<std::string>& subset) {
    auto it = proj_cache_.find(subset);
    if (it != proj_cache_.end()) return it->second;
    Poly p = count_points(k_.domain, subset, k_.assumptions);
    proj_cache_[subset] = p;
    return p;
  }

  void add_sync(KernelCounts& out, SyncKind kind, const Poly& count) {
    for (auto& e : out.sync) {
      if (e.kind == kind) {
        e.count += count;
        return;
      }
    }
    out.sync.push_back(CountedSync{kind, count});
  }

  void add_op(Dtype dtype, OpName op, const Poly& count) {
    op_tally_[std::make_pair(dtype, op)] += count;
  }

  Dtype node_dtype(const ExprPtr& e) { return expr_dtype(e, k_, types_); }

  void record_site(const Statement& s, const Access& a, Direction dir,
                   const std::vector<std::string>& binders) {
    const ArgDecl& decl = k_.arg(a.array);
    if (decl.space == MemSpace::private_mem) return;
    Site site;
    site.access = a;
    site.context = s.within;
    for (const auto& b : binders) site.context.insert(b);
    site.dir = dir;
    site.dtype = decl.dtype;
    site.loop_order = k_.ordered_within(s);
    for (const auto& b : binders) site.loop_order.push_back(b);
    sites_.push_back(site);
    sites_by_array_[a.array].push_back(site);
  }

  // Emits operation counts for the expression tree rooted at e, executed once
  // per point of (s.within + binders), and records access sites.
  void count_node(KernelCounts& out, const Statement& s, const ExprPtr& e,
                  std::vector<std::string> binders) {
    switch (e->kind) {
      case Expr::Kind::number:
      case Expr::Kind::scalar_ref:
        return;
      case Expr::Kind::access:
        record_site(s, e->access, Direction::load, binders);
        return;
      case Expr::Kind::binary: {
        Poly mult = context_count(s, binders);
        switch (e->op) {
          case BinOp::add:
          case BinOp::sub: {
            // A multiply feeding an add/sub fuses into one madd.
            const ExprPtr* fused = nullptr;
            if (e->rhs->kind == Expr::Kind::binary && e->rhs->op == BinOp::mul)
              fused = &e->rhs;
            else if (e->lhs->kind == Expr::Kind::binary && e->lhs->op == BinOp::mul)
              fused = &e->lhs;
            if (!s.harness) {
              if (fused)
                add_op(node_dtype(e), OpName::madd, mult);
              else
                add_op(node_dtype(e), OpName::add, mult);
            }
            if (fused) {
              const ExprPtr& other = (*fused == e->rhs) ? e->lhs : e->rhs;
              count_node(out, s, other, binders);
              count_node(out, s, (*fused)->lhs, binders);
              count_node(out, s, (*fused)->rhs, binders);
            } else {
              count_node(out, s, e->lhs, binders);
              count_node(out, s, e->rhs, binders);
            }
            return;
          }
          case BinOp::mul:
            if (!s.harness) add_op(node_dtype(e), OpName::mul, mult);
            count_node(out, s, e->lhs, binders);
            count_node(out, s, e->rhs, binders);
            return;
          case BinOp::div:
            if (!s.harness) add_op(node_dtype(e), OpName::div, mult);
            count_node(out, s, e->lhs, binders);
            count_node(out, s, e->rhs, binders);
            return;
        }
        return;
      }
      case Expr::Kind::reduction: {
        // Directly nested reductions (a split summation loop) share a single
        // accumulator, so they flatten before the accumulation rule applies.
        ExprPtr body = e->body;
        binders.push_back(e->red_iname);
        while (body->kind == Expr::Kind::reduction) {
          binders.push_back(body->red_iname);
          body = body->body;
        }
        Poly mult = context_count(s, binders);
        // Accumulation: acc = acc + body once per iteration; a multiply at
        // the body root fuses into a madd.
        if (!s.harness) {
          if (body->kind == Expr::Kind::binary && body->op == BinOp::mul) {
            add_op(node_dtype(body), OpName::madd, mult);
            count_node(out, s, body->lhs, binders);
            count_node(out, s, body->rhs, binders);
            return;
          }
          add_op(node_dtype(body), OpName::add, mult);
        }
        count_node(out, s, body, binders);
        return;
      }
    }
  }

  Poly context_count(const Statement& s, const std::vector<std::string>& binders) {
    std::set<std::string> ctx = s.within;
    for (const auto& b : binders) ctx.insert(b);
    return proj(ctx);
  }

  void finalize_ops(KernelCounts& out) {
    for (const auto& [key, count] : op_tally_) {
      if (count.is_zero()) continue;
      out.ops.push_back(CountedOp{OpKind{key.first, key.second, Granularity::sub_group}, count});
    }
    std::sort(out.ops.begin(), out.ops.end(),
              [](const CountedOp& a, const CountedOp& b) { return a.kind.key() < b.kind.key(); });
  }

  AccessPattern pattern_of(const Site& site);
  void finalize_accesses(KernelCounts& out);

  const Kernel& k_;
  std::map<std::string, Dtype> types_;
  std::map<std::set<std::string>, Poly> proj_cache_;
  std::map<int, std::string> local_axis_, group_axis_;
  std::map<std::pair<Dtype, OpName>, Poly> op_tally_;
  std::vector<Site> sites_;
  std::map<std::string, std::vector<Site>> sites_by_array_;
};

AccessPattern Analyzer::pattern_of(const Site& site) {
  const ArgDecl& decl = k_.arg(site.access.array);

  // Flattened element-unit coefficients: row-major strides from the shape.
  std::map<std::string, Poly> flat;
  size_t rank = decl.shape.size();
  std::vector<Poly> rowstride(rank, Poly::constant(1));
  for (size_t d = rank; d-- > 0;) {
    if (d + 1 < rank) {
      if (!decl.shape[d + 1].is_index_free())
        throw CountError("shape of '" + decl.name + "' references an iname");
      rowstride[d] = rowstride[d + 1] * decl.shape[d + 1].off;
    }
  }
  for (size_t d = 0; d < rank; ++d)
    for (const auto& [sym, coef] : site.access.subs[d].lin) {
      auto [it, inserted] = flat.emplace(sym, coef * rowstride[d]);
      if (!inserted) it->second += coef * rowstride[d];
    }

  auto flat_coeff = [&](const std::string& iname) {
    auto it = flat.find(iname);
    return it == flat.end() ? Poly() : it->second;
  };

  AccessPattern p;
  p.mem = decl.space == MemSpace::local ? MemType::local_mem : MemType::global_mem;
  p.dir = site.dir;
  p.dtype_bytes = dtype_bytes(decl.dtype);
  p.tag = site.access.tag;
  for (const auto& [axis, iname] : local_axis_) p.lstrides[axis] = flat_coeff(iname);
  for (const auto& [axis, iname] : group_axis_) p.gstrides[axis] = flat_coeff(iname);
  for (auto it = site.loop_order.rbegin(); it != site.loop_order.rend(); ++it) {
    if (k_.is_sequential(*it)) {
      p.loop_stride = flat_coeff(*it);
      break;
    }
  }
  if (p.mem == MemType::local_mem) {
    p.gran = Granularity::sub_group;
  } else {
    p.gran = p.uniform() ? Granularity::sub_group : Granularity::work_item;
  }
  return p;
}

void Analyzer::finalize_accesses(KernelCounts& out) {
  struct Group {
    AccessPattern pattern;
    Poly count;
    std::map<std::string, std::vector<Site>> sites_by_array;
  };
  std::map<std::string, Group> groups;
  for (const auto& site : sites_) {
    AccessPattern p = pattern_of(site);
    std::string key = p.key();
    auto [it, inserted] = groups.emplace(key, Group{p, Poly(), {}});
    it->second.count += proj(site.context);
    it->second.sites_by_array[site.access.array].push_back(site);
  }
  for (auto& [key, g] : groups) {
    Poly fp;
    for (const auto& [array, sites] : g.sites_by_array) fp += union_footprint(sites);
    g.pattern.afr = PolyRatio::of(g.count, fp);
    out.accesses.push_back(CountedAccess{g.pattern, g.count});
  }
}

// ---------------------------------------------------------------------------
// Footprints: per-axis progressions plus inclusion-exclusion over sites.

namespace footprint_detail {

struct Progression {
  Poly offset;
  Poly step = Poly::constant(1);
  Poly span;  // step * (count - 1), in element units
  bool trivial = true;  // single point
};

struct Cmp {
  const std::vector<Assumption>& assumptions;
  // Returns true if a <= b everywhere on the assumed region.
  bool le(const Poly& a, const Poly& b) const {
    RegionSign s = region_sign(b - a, assumptions);
    if (s == RegionSign::always_nonneg || s == RegionSign::zero) return true;
    if (s == RegionSign::always_neg) return false;
    throw CountError("footprint comparison " + a.str() + " <= " + b.str() +
                     " is undecidable; needs lower-bound assumption");
  }
};

}  // namespace footprint_detail

Poly Analyzer::union_footprint(const std::vector<Site>& sites) {
  using footprint_detail::Progression;
  if (sites.empty()) return Poly();
  const ArgDecl& decl = k_.arg(sites[0].access.array);
  size_t rank = decl.shape.size();
  footprint_detail::Cmp cmp{k_.assumptions};

  // Progressions per site per axis.
  std::vector<std::vector<Progression>> progs(sites.size(), std::vector<Progression>(rank));
  for (size_t si = 0; si < sites.size(); ++si) {
    const Site& site = sites[si];
    std::set<std::string> used_anywhere;
    for (size_t d = 0; d < rank; ++d) {
      const AffineExpr& sub = site.access.subs[d];
      // Independence across axes within one site.
      for (const auto& [sym, c] : sub.lin) {
        if (used_anywhere.count(sym))
          throw CountError("non-rectangular footprint: iname '" + sym +
                           "' appears in several axes of '" + decl.name + "'");
        used_anywhere.insert(sym);
      }

      struct Term {
        Poly coeff;  // positive over region
        Poly trip;
        Poly lo_off;
      };
      std::vector<Term> terms;
      Poly offset = sub.off;
      for (const auto& [sym, coeff] : sub.lin) {
        if (!site.context.count(sym))
          throw CountError("subscript iname '" + sym + "' outside statement context");
        const Bound& b = k_.domain.bound(sym);
        if (!b.lo.is_index_free() || !b.hi.is_index_free())
          throw CountError("non-rectangular footprint: bounds of '" + sym +
                           "' depend on another iname");
        Poly trip = (b.hi - b.lo + AffineExpr::constant(1)).off;
        Poly c = coeff;
        RegionSign cs = region_sign(c, k_.assumptions);
        if (cs == RegionSign::zero) continue;
        if (cs == RegionSign::always_neg) {
          offset += c * (trip - Poly::constant(1));
          c = -c;
        } else if (cs != RegionSign::always_nonneg) {
          throw CountError("stride sign of '" + sym + "' in '" + decl.name +
                           "' is undecidable; needs lower-bound assumption");
        }
        offset += coeff * b.lo.off;
        terms.push_back(Term{c, trip, b.lo.off});
      }

      // Smallest stride first.
      std::sort(terms.begin(), terms.end(),
                [&](const Term& a, const Term& b) { return cmp.le(a.coeff, b.coeff) &&
                                                          !(a.coeff == b.coeff); });

      Progression prog;
      prog.offset = offset;
      for (const auto& t : terms) {
        if (prog.trivial) {
          prog.step = t.coeff;
          prog.span = t.coeff * (t.trip - Poly::constant(1));
          prog.trivial = false;
          continue;
        }
        // Step must divide the next stride, and copies must cover without
        // gaps: stride <= span + step.
        Poly q;
        if (!try_divide(t.coeff, prog.step, q) ||
            !poly_integer_valued(q, k_.assumptions))
          throw CountError("step-irreducible footprint for '" + decl.name + "'");
        if (!cmp.le(t.coeff, prog.span + prog.step))
          throw CountError("step-irreducible footprint for '" + decl.name +
                           "': stride " + t.coeff.str() + " leaves gaps");
        prog.span = t.coeff * (t.trip - Poly::constant(1)) + prog.span;
      }
      progs[si][d] = std::move(prog);
    }
  }

  // Align steps across sites and convert to step-unit intervals.
  // size of axis interval: [a, b] with b - a + 1 points.
  struct Interval {
    Poly a, b;
  };
  std::vector<std::vector<Interval>> intervals(sites.size(), std::vector<Interval>(rank));
  std::vector<Poly> step_per_axis(rank, Poly::constant(1));
  for (size_t d = 0; d < rank; ++d) {
    // Common step: the smallest nontrivial step; all others must match it or
    // be single points.
    std::optional<Poly> step;
    for (size_t si = 0; si < sites.size(); ++si) {
      const Progression& pr = progs[si][d];
      if (pr.trivial) continue;
      if (!step) {
        step = pr.step;
      } else if (!(pr.step == *step)) {
        throw CountError("sites with mismatched steps in footprint of '" + decl.name + "'");
      }
    }
    if (!step) step = Poly::constant(1);
    step_per_axis[d] = *step;
    const Poly& ref = progs[0][d].offset;
    for (size_t si = 0; si < sites.size(); ++si) {
      const Progression& pr = progs[si][d];
      Poly rel = pr.offset - ref;
      Poly a;
      if (!try_divide(rel, *step, a) || !poly_integer_valued(a, k_.assumptions))
        throw CountError("sites with incompatible offsets in footprint of '" + decl.name + "'");
      Poly count_minus_1;
      if (pr.trivial) {
        count_minus_1 = Poly();
      } else if (!try_divide(pr.span, *step, count_minus_1) ||
                 !poly_integer_valued(count_minus_1, k_.assumptions)) {
        throw CountError("step-irreducible footprint for '" + decl.name + "'");
      }
      intervals[si][d] = Interval{a, a + count_minus_1};
    }
  }

  // Inclusion-exclusion over non-empty site subsets.
  Poly total;
  size_t n = sites.size();
  if (n > 20) throw CountError("too many access sites for exact footprint union");
  for (size_t mask = 1; mask < (size_t(1) << n); ++mask) {
    int bits = 0;
    for (size_t si = 0; si < n; ++si)
      if (mask & (size_t(1) << si)) ++bits;
    Poly term = Poly::constant(1);
    bool empty = false;
    for (size_t d = 0; d < rank && !empty; ++d) {
      std::optional<Poly> lo, hi;
      for (size_t si = 0; si < n; ++si) {
        if (!(mask & (size_t(1) << si))) continue;
        const Interval& iv = intervals[si][d];
        if (!lo) {
          lo = iv.a;
          hi = iv.b;
          continue;
        }
        if (cmp.le(*lo, iv.a)) lo = iv.a;
        if (cmp.le(iv.b, *hi)) hi = iv.b;
      }
      Poly size = *hi - *lo + Poly::constant(1);
      if (bits == 1) {
        // A site's own extent is a count by construction.
        term = term * size;
        continue;
      }
      // When the intersection coincides with one member interval, it is that
      // site's own extent and needs no sign decision.
      bool contained = false;
      for (size_t si = 0; si < n && !contained; ++si) {
        if (!(mask & (size_t(1) << si))) continue;
        if (intervals[si][d].a == *lo && intervals[si][d].b == *hi) contained = true;
      }
      if (contained) {
        term = term * size;
        continue;
      }
      RegionSign s = region_sign(size, k_.assumptions);
      if (s == RegionSign::always_neg || s == RegionSign::zero) {
        empty = true;
      } else if (s == RegionSign::always_nonneg) {
        term = term * size;
      } else {
        throw CountError("footprint intersection size " + size.str() +
                         " is undecidable; needs lower-bound assumption");
      }
    }
    if (empty) continue;
    if (bits % 2 == 1)
      total += term;
    else
      total -= term;
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points.

std::vector<CountedOp> count_ops(const Kernel& k) { return Analyzer(k).run(false).ops; }

std::vector<CountedAccess> classify_accesses(const Kernel& k) { return Analyzer(k).run().accesses; }

std::vector<CountedSync> count_sync(const Kernel& k) { return Analyzer(k).run(false).sync; }

Poly footprint(const Kernel& k, const std::string& array) {
  KernelCounts counts = Analyzer(k).run();
  auto it = counts.footprints.find(array);
  if (it == counts.footprints.end()) {
    if (!k.find_arg(array)) throw CountError("footprint of unknown array '" + array + "'");
    return Poly();  // never accessed
  }
  return it->second;
}

KernelCounts analyze(const Kernel& k) { return Analyzer(k).run(); }

namespace {
std::mutex g_cache_mutex;
std::unordered_map<uint64_t, std::shared_ptr<const KernelCounts>> g_cache;
}  // namespace

std::shared_ptr<const KernelCounts> analyze_cached(const Kernel& k) {
  uint64_t h = kernel_hash(k);
  {
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = g_cache.find(h);
    if (it != g_cache.end()) return it->second;
  }
  auto counts = std::make_shared<KernelCounts>(analyze(k));
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  g_cache[h] = counts;  // last writer wins; values are deterministic
  return counts;
}

void clear_count_cache() {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  g_cache.clear();
}

}  // namespace perfseer
