#include "perfseer/uipick.hpp"

#include <algorithm>
#include <functional>

#include "perfseer/lang.hpp"

namespace perfseer {

const std::vector<std::string>* Generator::allowable(const std::string& arg) const {
  for (const auto& [name, values] : variant_args)
    if (name == arg) return &values;
  return nullptr;
}

MatchCondition match_condition_from_str(const std::string& s) {
  if (s == "identical") return MatchCondition::identical;
  if (s == "subset") return MatchCondition::subset_of_user;
  if (s == "superset") return MatchCondition::superset_of_user;
  if (s == "intersect") return MatchCondition::intersect;
  throw SemanticError("unknown match condition '" + s + "'");
}

FilterTagSet FilterTagSet::parse(const std::vector<std::string>& tags) {
  FilterTagSet out;
  for (const auto& tag : tags) {
    if (tag.empty()) continue;
    size_t colon = tag.find(':');
    if (colon == std::string::npos) {
      out.generator_tags.insert(tag);
      continue;
    }
    std::string arg = tag.substr(0, colon);
    std::string values = tag.substr(colon + 1);
    std::vector<std::string> list;
    std::string cur;
    for (char c : values) {
      if (c == ',') {
        list.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    list.push_back(cur);
    for (const auto& v : list)
      if (v.empty()) throw SemanticError("empty value in variant tag '" + tag + "'");
    out.variant_tags[arg] = std::move(list);
  }
  return out;
}

bool generator_matches(const Generator& g, const FilterTagSet& tags, MatchCondition cond) {
  const auto& user = tags.generator_tags;
  switch (cond) {
    case MatchCondition::identical:
      return g.tags == user;
    case MatchCondition::subset_of_user:
      return std::includes(user.begin(), user.end(), g.tags.begin(), g.tags.end());
    case MatchCondition::superset_of_user:
      return std::includes(g.tags.begin(), g.tags.end(), user.begin(), user.end());
    case MatchCondition::intersect: {
      for (const auto& t : g.tags)
        if (user.count(t)) return true;
      return false;
    }
  }
  return false;
}

std::vector<GeneratedKernel> KernelCollection::generate(const FilterTagSet& tags,
                                                        MatchCondition cond) const {
  std::vector<const Generator*> matched;
  for (const auto& g : generators_)
    if (generator_matches(g, tags, cond)) matched.push_back(&g);
  if (matched.empty()) return {};

  std::vector<GeneratedKernel> out;
  for (const Generator* g : matched) {
    // Variant tags must name known arguments of every matched generator.
    for (const auto& [arg, values] : tags.variant_tags)
      if (!g->allowable(arg))
        throw SemanticError("variant tag argument '" + arg + "' is unknown to matched generator '" +
                            g->id + "'");

    // Restrict each argument to the intersection, in allowable order.
    std::vector<std::pair<std::string, std::vector<std::string>>> domains;
    for (const auto& [arg, allowed] : g->variant_args) {
      auto user_it = tags.variant_tags.find(arg);
      if (user_it == tags.variant_tags.end()) {
        domains.emplace_back(arg, allowed);
        continue;
      }
      std::vector<std::string> restricted;
      for (const auto& v : allowed)
        if (std::find(user_it->second.begin(), user_it->second.end(), v) !=
            user_it->second.end())
          restricted.push_back(v);
      if (restricted.empty())
        throw SemanticError("variant tag empties allowable set of argument '" + arg +
                            "' on generator '" + g->id + "'");
      domains.emplace_back(arg, std::move(restricted));
    }

    std::map<std::string, std::string> assignment;
    std::function<void(size_t)> expand = [&](size_t depth) {
      if (depth == domains.size()) {
        out.push_back(g->create(assignment));
        return;
      }
      for (const auto& v : domains[depth].second) {
        assignment[domains[depth].first] = v;
        expand(depth + 1);
      }
    };
    expand(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builders.

namespace {

long long arg_int(const std::map<std::string, std::string>& args, const std::string& name) {
  auto it = args.find(name);
  if (it == args.end()) throw SemanticError("missing generator argument '" + name + "'");
  try {
    return std::stoll(it->second);
  } catch (...) {
    throw SemanticError("argument '" + name + "' is not an integer: " + it->second);
  }
}

std::string arg_str(const std::map<std::string, std::string>& args, const std::string& name) {
  auto it = args.find(name);
  if (it == args.end()) throw SemanticError("missing generator argument '" + name + "'");
  return it->second;
}

bool arg_bool(const std::map<std::string, std::string>& args, const std::string& name) {
  std::string v = arg_str(args, name);
  if (v == "True" || v == "true" || v == "1") return true;
  if (v == "False" || v == "false" || v == "0") return false;
  throw SemanticError("argument '" + name + "' is not a boolean: " + v);
}

std::string variant_id(const std::string& generator,
                       const std::map<std::string, std::string>& args) {
  std::string id = generator;
  for (const auto& [k, v] : args) id += "__" + k + "-" + v;
  return id;
}

AffineExpr cst(long long v) { return AffineExpr::constant(v); }
AffineExpr ix(const std::string& name) { return AffineExpr::index(name); }

struct KernelBuilder {
  Kernel k;

  void iname(const std::string& name, const AffineExpr& lo, const AffineExpr& hi,
             InameTag tag = InameTag::seq()) {
    k.domain.inames.push_back(name);
    k.domain.bounds[name] = Bound{lo, hi};
    if (tag.is_parallel()) k.iname_tags[name] = tag;
  }
  void param(const std::string& name) { k.domain.parameters.insert(name); }
  void arg(const std::string& name, Dtype dtype, std::vector<AffineExpr> shape, MemSpace space) {
    k.args.push_back(ArgDecl{name, dtype, std::move(shape), space});
  }
  Statement& stmt(const std::string& id, Access lhs, ExprPtr rhs,
                  std::set<std::string> within, std::set<std::string> deps = {}) {
    Statement s;
    s.id = id;
    s.lhs = std::move(lhs);
    s.rhs = std::move(rhs);
    s.within = std::move(within);
    s.depends_on = std::move(deps);
    k.statements.push_back(std::move(s));
    return k.statements.back();
  }
  void barrier(const std::string& id, std::set<std::string> within,
               std::set<std::string> deps = {}) {
    Statement s;
    s.id = id;
    s.is_barrier = true;
    s.within = std::move(within);
    s.depends_on = std::move(deps);
    k.statements.push_back(std::move(s));
  }
  GeneratedKernel finish(const std::string& generator,
                         const std::map<std::string, std::string>& args,
                         std::map<std::string, long long> bindings) {
    validate(k);
    GeneratedKernel g;
    g.id = variant_id(generator, args);
    k.name = g.id;
    g.kernel = k;
    g.bindings = std::move(bindings);
    g.geometry = launch_geometry(g.kernel);
    g.generator = generator;
    g.args = args;
    return g;
  }
};

/// Common microbenchmark launch: 16x16-style work-groups tiling a 1-D array
/// of `nelements` with the given lid strides. Requires lid_stride_0*lsize_0
/// to divide lid_stride_1 and lid_stride_1*lsize_1 to divide nelements.
struct PatternLayout {
  long long E, L0, L1, s0, s1, G0, G1;
  std::string gy = "gy", gx = "gx", ly = "ly", lx = "lx";

  static PatternLayout from_args(const std::map<std::string, std::string>& args) {
    PatternLayout p;
    p.E = arg_int(args, "nelements");
    p.L0 = arg_int(args, "lsize_0");
    p.L1 = arg_int(args, "lsize_1");
    p.s0 = arg_int(args, "lid_stride_0");
    p.s1 = arg_int(args, "lid_stride_1");
    if (p.E < 1 || p.L0 < 1 || p.L1 < 1 || p.s0 < 1 || p.s1 < 1)
      throw SemanticError("pattern layout arguments must be positive");
    if (p.s1 % (p.s0 * p.L0) != 0)
      throw SemanticError("lid_stride_1 must be a multiple of lid_stride_0*lsize_0");
    p.G0 = p.s1 / (p.s0 * p.L0);
    if (p.E % (p.s1 * p.L1) != 0)
      throw SemanticError("nelements must be a multiple of lid_stride_1*lsize_1");
    p.G1 = p.E / (p.s1 * p.L1);
    return p;
  }

  void install(KernelBuilder& b) const {
    b.iname(gy, cst(0), cst(G1 - 1), InameTag::group(1));
    b.iname(gx, cst(0), cst(G0 - 1), InameTag::group(0));
    b.iname(ly, cst(0), cst(L1 - 1), InameTag::local(1));
    b.iname(lx, cst(0), cst(L0 - 1), InameTag::local(0));
  }
  std::set<std::string> parallel() const { return {gy, gx, ly, lx}; }
  AffineExpr global_sub() const {
    return ix(lx).scaled(Rational(s0)) + ix(ly).scaled(Rational(s1)) +
           ix(gx).scaled(Rational(s0 * L0)) + ix(gy).scaled(Rational(s1 * L1));
  }
  AffineExpr local_sub() const { return ix(lx) + ix(ly).scaled(Rational(L0)); }
};

Dtype arg_dtype(const std::map<std::string, std::string>& args) {
  return dtype_from_str(arg_str(args, "dtype"));
}

ExprPtr flit(double v, Dtype dtype) {
  bool is_float = dtype != Dtype::int32;
  Rational r(static_cast<long long>(v * 1024), 1024);
  return Expr::make_number(r, is_float);
}

/// Installs an access tag on the unique access to `array` in the kernel.
void tag_access(Kernel& k, const std::string& array, const std::string& tag) {
  int found = 0;
  std::function<ExprPtr(const ExprPtr&)> rewrite = [&](const ExprPtr& e) -> ExprPtr {
    if (!e) return e;
    switch (e->kind) {
      case Expr::Kind::number:
      case Expr::Kind::scalar_ref:
        return e;
      case Expr::Kind::access: {
        if (e->access.array != array) return e;
        ++found;
        Access a = e->access;
        a.tag = tag;
        return Expr::make_access(std::move(a));
      }
      case Expr::Kind::binary:
        return Expr::make_binary(e->op, rewrite(e->lhs), rewrite(e->rhs));
      case Expr::Kind::reduction:
        return Expr::make_reduction(e->red_iname, rewrite(e->body));
    }
    return e;
  };
  for (auto& s : k.statements) {
    if (s.is_barrier) continue;
    if (s.lhs.array == array) {
      s.lhs.tag = tag;
      ++found;
    }
    s.rhs = rewrite(s.rhs);
  }
  if (found != 1)
    throw SemanticError("tag_access expected exactly one access to '" + array + "', found " +
                        std::to_string(found));
}

}  // namespace

GeneratedKernel make_gmem_pattern(const std::map<std::string, std::string>& args) {
  PatternLayout p = PatternLayout::from_args(args);
  Dtype dtype = arg_dtype(args);
  long long nin = arg_int(args, "n_input_arrays");
  if (nin < 1) throw SemanticError("n_input_arrays must be >= 1");

  KernelBuilder b;
  p.install(b);
  for (long long i = 0; i < nin; ++i)
    b.arg("in" + std::to_string(i), dtype, {cst(p.E)}, MemSpace::global);
  b.arg("result", dtype, {cst(p.E)}, MemSpace::global);

  // result[pattern] = in0[pattern] + in1[pattern] + ...
  ExprPtr rhs = Expr::make_access(Access{"in0", "", {p.global_sub()}});
  for (long long i = 1; i < nin; ++i)
    rhs = Expr::make_binary(BinOp::add, rhs,
                            Expr::make_access(Access{"in" + std::to_string(i), "",
                                                     {p.global_sub()}}));
  b.stmt("store", Access{"result", "", {p.global_sub()}}, rhs, p.parallel());
  return b.finish("gmem_pattern", args, {});
}

GeneratedKernel make_flops_pattern(const std::string& op,
                                   const std::map<std::string, std::string>& args) {
  PatternLayout p = PatternLayout::from_args(args);
  Dtype dtype = arg_dtype(args);
  long long m = arg_int(args, "m");
  if (m < 1) throw SemanticError("flops iteration count must be >= 1");
  constexpr int kVars = 32;
  constexpr int kUnroll = 64;

  KernelBuilder b;
  p.install(b);
  b.iname("t", cst(0), cst(m - 1));
  b.arg("result", dtype, {cst(p.E)}, MemSpace::global);
  for (int j = 0; j < kVars; ++j)
    b.arg("v" + std::to_string(j), dtype, {}, MemSpace::private_mem);
  b.arg("r", dtype, {}, MemSpace::private_mem);

  std::set<std::string> par = p.parallel();
  std::set<std::string> body = par;
  body.insert("t");

  std::string prev;
  for (int j = 0; j < kVars; ++j) {
    auto& s = b.stmt("init_" + std::to_string(j), Access{"v" + std::to_string(j), "", {}},
                     flit(0.5 + 0.015625 * j, dtype), par);
    prev = s.id;
  }
  std::string last_init = prev;

  // SHOC-style update order: statement i assigns v[i%32] from v[(i+27)%32]
  // and v[(i+21)%32], so no assignment depends on the most recent four
  // statements (distances are 5 and 11).
  for (int u = 0; u < kUnroll; ++u) {
    for (int j = 0; j < kVars; ++j) {
      int i = u * kVars + j;
      std::string dst = "v" + std::to_string(j);
      ExprPtr a = Expr::make_scalar("v" + std::to_string((j + 27) % kVars));
      ExprPtr c = Expr::make_scalar("v" + std::to_string((j + 21) % kVars));
      ExprPtr rhs;
      if (op == "add")
        rhs = Expr::make_binary(BinOp::add, a, c);
      else if (op == "mul")
        rhs = Expr::make_binary(BinOp::mul, a, c);
      else if (op == "madd")
        rhs = Expr::make_binary(BinOp::add, Expr::make_binary(BinOp::mul, a, c),
                                Expr::make_scalar(dst));
      else
        throw SemanticError("unknown flops op '" + op + "'");
      auto& s = b.stmt("upd_" + std::to_string(i), Access{dst, "", {}}, rhs, body,
                       {i == 0 ? last_init : prev});
      prev = s.id;
    }
  }

  ExprPtr sum = Expr::make_scalar("v0");
  for (int j = 1; j < kVars; ++j)
    sum = Expr::make_binary(BinOp::add, sum, Expr::make_scalar("v" + std::to_string(j)));
  b.stmt("reduce", Access{"r", "", {}}, sum, par, {prev});
  b.stmt("store", Access{"result", "", {p.global_sub()}}, Expr::make_scalar("r"), par,
         {"reduce"});
  return b.finish("flops_" + op + "_pattern", args, {});
}

GeneratedKernel make_lmem_shuffle(const std::map<std::string, std::string>& args) {
  PatternLayout p = PatternLayout::from_args(args);
  Dtype dtype = arg_dtype(args);
  long long m = arg_int(args, "m");
  if (m < 0) throw SemanticError("lmem iteration count must be >= 0");

  KernelBuilder b;
  p.install(b);
  b.iname("t", cst(0), cst(m - 1));
  long long wg = p.L0 * p.L1;
  b.arg("locbuf_a", dtype, {cst(wg)}, MemSpace::local);
  b.arg("locbuf_b", dtype, {cst(wg)}, MemSpace::local);
  b.arg("result", dtype, {cst(p.E)}, MemSpace::global);

  std::set<std::string> par = p.parallel();
  std::set<std::string> body = par;
  body.insert("t");

  b.stmt("init", Access{"locbuf_a", "", {p.local_sub()}}, flit(1.0, dtype), par);
  b.stmt("shuffle", Access{"locbuf_b", "", {p.local_sub()}},
         Expr::make_access(Access{"locbuf_a", "", {p.local_sub()}}), body, {"init"});
  b.stmt("store", Access{"result", "", {p.global_sub()}},
         Expr::make_access(Access{"locbuf_b", "", {p.local_sub()}}), par, {"shuffle"});
  return b.finish("lmem_shuffle", args, {});
}

GeneratedKernel make_barrier_knl(const std::map<std::string, std::string>& args) {
  PatternLayout p = PatternLayout::from_args(args);
  long long m = arg_int(args, "m");
  if (m < 0) throw SemanticError("barrier count must be >= 0");

  KernelBuilder b;
  p.install(b);
  b.iname("t", cst(0), cst(m - 1));
  b.arg("result", Dtype::float32, {cst(p.E)}, MemSpace::global);

  std::set<std::string> par = p.parallel();
  std::set<std::string> body = par;
  body.insert("t");
  b.barrier("bar", body);
  b.stmt("store", Access{"result", "", {p.global_sub()}}, flit(1.0, Dtype::float32), par,
         {"bar"});
  return b.finish("barrier_knl", args, {});
}

GeneratedKernel make_empty_knl(const std::map<std::string, std::string>& args) {
  long long groups = arg_int(args, "num_groups");
  if (groups < 1) throw SemanticError("num_groups must be >= 1");
  KernelBuilder b;
  b.iname("g0", cst(0), cst(groups - 1), InameTag::group(0));
  b.iname("l0", cst(0), cst(255), InameTag::local(0));
  return b.finish("empty_knl", args, {});
}

GeneratedKernel make_overlap_knl(const std::map<std::string, std::string>& args) {
  PatternLayout p = PatternLayout::from_args(args);
  Dtype dtype = arg_dtype(args);
  long long m = arg_int(args, "m");
  if (m < 0) throw SemanticError("overlap ratio m must be >= 0");

  KernelBuilder b;
  p.install(b);
  b.iname("t", cst(0), cst(m - 1));
  long long wg = p.L0 * p.L1;
  b.arg("in0", dtype, {cst(p.E)}, MemSpace::global);
  b.arg("result", dtype, {cst(p.E)}, MemSpace::global);
  b.arg("locbuf_a", dtype, {cst(wg)}, MemSpace::local);
  b.arg("locbuf_b", dtype, {cst(wg)}, MemSpace::local);
  b.arg("tmp", dtype, {}, MemSpace::private_mem);

  std::set<std::string> par = p.parallel();
  std::set<std::string> body = par;
  body.insert("t");

  // One global load, m local load-store pairs, one global store.
  b.stmt("load", Access{"tmp", "", {}}, Expr::make_access(Access{"in0", "", {p.global_sub()}}),
         par);
  b.stmt("shuffle", Access{"locbuf_b", "", {p.local_sub()}},
         Expr::make_access(Access{"locbuf_a", "", {p.local_sub()}}), body, {"load"});
  b.stmt("store", Access{"result", "", {p.global_sub()}}, Expr::make_scalar("tmp"), par,
         {"shuffle"});
  return b.finish("overlap_knl", args, {});
}

GeneratedKernel make_matmul_sq(const std::map<std::string, std::string>& args) {
  Dtype dtype = arg_dtype(args);
  bool prefetch = arg_bool(args, "prefetch");
  long long n = arg_int(args, "n");
  long long l0 = arg_int(args, "lsize_0");
  long long l1 = arg_int(args, "lsize_1");
  if (!arg_bool(args, "groups_fit"))
    throw SemanticError("matmul_sq requires groups_fit:True (conditionals are not generated)");
  if (l0 != l1) throw SemanticError("matmul_sq uses square tiles (lsize_0 == lsize_1)");
  const long long T = l0;
  if (n % T != 0 || n < T)
    throw SemanticError("matmul_sq requires n to be a multiple of the tile size");
  std::string dt = dtype_str(dtype);

  if (!prefetch) {
    Kernel k = make_kernel("{[i,j,k]: 0<=i,j,k<n}", {"c[i,j] = sum(k, a[i,k]*b[k,j])"},
                           {{"a", dtype, {"n", "n"}},
                            {"b", dtype, {"n", "n"}},
                            {"c", dtype, {"n", "n"}}});
    tag_access(k, "a", "mm-noPF-a");
    tag_access(k, "b", "mm-noPF-b");
    k = assume_divisible(k, "n", T);
    k = assume_lower_bound(k, "n", T);
    k = split_iname(k, "i", T);
    k = split_iname(k, "j", T);
    k = tag_inames(k, {{"i_out", InameTag::group(1)},
                       {"i_in", InameTag::local(1)},
                       {"j_out", InameTag::group(0)},
                       {"j_in", InameTag::local(0)}});
    GeneratedKernel g;
    g.id = variant_id("matmul_sq", args);
    k.name = g.id;
    g.kernel = k;
    g.bindings = {{"n", n}};
    g.geometry = launch_geometry(g.kernel);
    g.generator = "matmul_sq";
    g.args = args;
    return g;
  }

  // Prefetching variant, constructed directly: tiles of a and b staged in
  // local memory inside the k_out loop, separated by barriers.
  KernelBuilder b;
  b.param("n");
  AffineExpr tiles = AffineExpr::param("n").scaled(Rational(1, T)) - cst(1);
  b.iname("i_out", cst(0), tiles, InameTag::group(1));
  b.iname("i_in", cst(0), cst(T - 1), InameTag::local(1));
  b.iname("j_out", cst(0), tiles, InameTag::group(0));
  b.iname("j_in", cst(0), cst(T - 1), InameTag::local(0));
  b.iname("k_out", cst(0), tiles);
  b.iname("k_in", cst(0), cst(T - 1));
  b.k.assumptions.push_back(Assumption{Assumption::Kind::divisible, "n", T});
  b.k.assumptions.push_back(Assumption{Assumption::Kind::lower_bound, "n", T});

  AffineExpr np = AffineExpr::param("n");
  b.arg("a", dtype, {np, np}, MemSpace::global);
  b.arg("b", dtype, {np, np}, MemSpace::global);
  b.arg("c", dtype, {np, np}, MemSpace::global);
  b.arg("a_fetch", dtype, {cst(T), cst(T)}, MemSpace::local);
  b.arg("b_fetch", dtype, {cst(T), cst(T)}, MemSpace::local);
  b.arg("acc", dtype, {}, MemSpace::private_mem);

  std::set<std::string> par{"i_out", "i_in", "j_out", "j_in"};
  std::set<std::string> tile_ctx = par;
  tile_ctx.insert("k_out");
  std::set<std::string> inner_ctx = tile_ctx;
  inner_ctx.insert("k_in");

  AffineExpr row = ix("i_out").scaled(Rational(T)) + ix("i_in");
  AffineExpr col = ix("j_out").scaled(Rational(T)) + ix("j_in");
  AffineExpr kk_row = ix("k_out").scaled(Rational(T)) + ix("j_in");
  AffineExpr kk_col = ix("k_out").scaled(Rational(T)) + ix("i_in");

  b.stmt("acc_init", Access{"acc", "", {}}, flit(0.0, dtype), par);
  b.barrier("bar_pre", tile_ctx, {"acc_init"});
  b.stmt("fetch_a", Access{"a_fetch", "", {ix("i_in"), ix("j_in")}},
         Expr::make_access(Access{"a", "mm-PF-a", {row, kk_row}}), tile_ctx, {"bar_pre"});
  b.stmt("fetch_b", Access{"b_fetch", "", {ix("i_in"), ix("j_in")}},
         Expr::make_access(Access{"b", "mm-PF-b", {kk_col, col}}), tile_ctx, {"bar_pre"});
  b.barrier("bar_post", tile_ctx, {"fetch_a", "fetch_b"});
  b.stmt("update", Access{"acc", "", {}},
         Expr::make_binary(
             BinOp::add,
             Expr::make_scalar("acc"),
             Expr::make_binary(BinOp::mul,
                               Expr::make_access(Access{"a_fetch", "", {ix("i_in"), ix("k_in")}}),
                               Expr::make_access(Access{"b_fetch", "", {ix("k_in"), ix("j_in")}}))),
         inner_ctx, {"bar_post"});
  b.stmt("store", Access{"c", "", {row, col}}, Expr::make_scalar("acc"), par, {"update"});
  return b.finish("matmul_sq", args, {{"n", n}});
}

GeneratedKernel make_matmul_sq_rm(const std::map<std::string, std::string>& args) {
  std::string keep = arg_str(args, "keep");
  bool prefetch = arg_bool(args, "prefetch");
  std::map<std::string, std::string> base_args = args;
  base_args.erase("keep");
  GeneratedKernel base = make_matmul_sq(base_args);

  std::string variant = prefetch ? "PF" : "noPF";
  std::set<std::string> remove_tags;
  if (keep == "a")
    remove_tags = {"mm-" + variant + "-b"};
  else if (keep == "b")
    remove_tags = {"mm-" + variant + "-a"};
  else
    throw SemanticError("matmul_sq_rm keep must be 'a' or 'b'");

  GeneratedKernel g;
  g.id = variant_id("matmul_sq_rm", args);
  g.kernel = remove_work(base.kernel, {"c"}, remove_tags);
  g.kernel.name = g.id;
  g.bindings = base.bindings;
  g.geometry = launch_geometry(g.kernel);
  g.generator = "matmul_sq_rm";
  g.args = args;
  return g;
}

GeneratedKernel make_fd_stencil(const std::map<std::string, std::string>& args) {
  Dtype dtype = arg_dtype(args);
  std::string tile = arg_str(args, "tile");
  long long n = arg_int(args, "n");
  long long T;
  if (tile == "16x16") T = 16;
  else if (tile == "18x18") T = 18;
  else throw SemanticError("fd tile must be 16x16 or 18x18");
  const long long I = T - 2;  // interior elements per tile side
  if (n % I != 0 || n < I)
    throw SemanticError("finite_diff requires n to be a multiple of " + std::to_string(I));

  KernelBuilder b;
  b.param("n");
  AffineExpr groups = AffineExpr::param("n").scaled(Rational(1, I)) - cst(1);
  b.iname("i_out", cst(0), groups, InameTag::group(1));
  b.iname("j_out", cst(0), groups, InameTag::group(0));
  b.iname("l1", cst(0), cst(T - 1), InameTag::local(1));
  b.iname("l0", cst(0), cst(T - 1), InameTag::local(0));
  b.iname("c1", cst(0), cst(I - 1));
  b.iname("c0", cst(0), cst(I - 1));
  b.k.assumptions.push_back(Assumption{Assumption::Kind::divisible, "n", I});
  b.k.assumptions.push_back(Assumption{Assumption::Kind::lower_bound, "n", I});

  AffineExpr np2 = AffineExpr::param("n") + cst(2);
  b.arg("u", dtype, {np2, np2}, MemSpace::global);
  b.arg("res", dtype, {AffineExpr::param("n"), AffineExpr::param("n")}, MemSpace::global);
  b.arg("u_fetch", dtype, {cst(T), cst(T)}, MemSpace::local);

  std::set<std::string> fetch_ctx{"i_out", "j_out", "l1", "l0"};
  std::set<std::string> comp_ctx{"i_out", "j_out", "c1", "c0"};

  std::string utag = "fd-" + tile + "-u";
  std::string rtag = "fd-" + tile + "-res";

  b.stmt("fetch", Access{"u_fetch", "", {ix("l1"), ix("l0")}},
         Expr::make_access(Access{
             "u", utag, {ix("i_out").scaled(Rational(I)) + ix("l1"),
                         ix("j_out").scaled(Rational(I)) + ix("l0")}}),
         fetch_ctx);
  b.barrier("bar", {"i_out", "j_out"}, {"fetch"});

  auto uf = [&](long long dr, long long dc) {
    return Expr::make_access(Access{"u_fetch", "", {ix("c1") + cst(dr), ix("c0") + cst(dc)}});
  };
  // u[r][c+1] + u[r+1][c] - 4*u[r+1][c+1] + u[r+1][c+2] + u[r+2][c+1]
  ExprPtr rhs = Expr::make_binary(BinOp::add, uf(0, 1), uf(1, 0));
  rhs = Expr::make_binary(BinOp::sub, rhs,
                          Expr::make_binary(BinOp::mul, flit(4.0, dtype), uf(1, 1)));
  rhs = Expr::make_binary(BinOp::add, rhs, uf(1, 2));
  rhs = Expr::make_binary(BinOp::add, rhs, uf(2, 1));
  b.stmt("compute",
         Access{"res", rtag, {ix("i_out").scaled(Rational(I)) + ix("c1"),
                              ix("j_out").scaled(Rational(I)) + ix("c0")}},
         rhs, comp_ctx, {"bar"});
  return b.finish("finite_diff", args, {{"n", n}});
}

GeneratedKernel make_fd_stencil_rm(const std::map<std::string, std::string>& args) {
  std::string keep = arg_str(args, "keep");
  std::map<std::string, std::string> base_args = args;
  base_args.erase("keep");
  GeneratedKernel base = make_fd_stencil(base_args);

  std::set<std::string> remove_vars;
  if (keep == "u")
    remove_vars = {"res"};
  else if (keep == "res")
    remove_vars = {"u"};
  else
    throw SemanticError("finite_diff_rm keep must be 'u' or 'res'");

  GeneratedKernel g;
  g.id = variant_id("finite_diff_rm", args);
  g.kernel = remove_work(base.kernel, remove_vars);
  g.kernel.name = g.id;
  g.bindings = base.bindings;
  g.geometry = launch_geometry(g.kernel);
  g.generator = "finite_diff_rm";
  g.args = args;
  return g;
}

// ---------------------------------------------------------------------------
// Built-in catalog (argument value sets are the manifest defaults).

std::vector<Generator> builtin_generators() {
  std::vector<Generator> out;
  const std::vector<std::string> sizes{"524288", "786432", "1048576", "1310720"};
  const std::vector<std::string> iters{"1024", "1152", "1280", "1408"};

  {
    Generator g;
    g.id = "gmem_pattern";
    g.tags = {"gmem_pattern"};
    g.variant_args = {{"dtype", {"float32"}},
                      {"nelements", sizes},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"lid_stride_0", {"1"}},
                      {"lid_stride_1", {"2048"}},
                      {"n_input_arrays", {"1", "2"}}};
    g.create = make_gmem_pattern;
    out.push_back(std::move(g));
  }
  for (const std::string op : {"add", "mul", "madd"}) {
    Generator g;
    g.id = "flops_" + op + "_pattern";
    g.tags = {g.id};
    g.variant_args = {{"dtype", {"float32"}},
                      {"m", iters},
                      {"nelements", sizes},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"lid_stride_0", {"1"}},
                      {"lid_stride_1", {"2048"}}};
    g.create = [op](const std::map<std::string, std::string>& args) {
      return make_flops_pattern(op, args);
    };
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "lmem_shuffle";
    g.tags = {"lmem_shuffle"};
    g.variant_args = {{"dtype", {"float32"}},
                      {"m", iters},
                      {"nelements", sizes},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"lid_stride_0", {"1"}},
                      {"lid_stride_1", {"2048"}}};
    g.create = make_lmem_shuffle;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "barrier_knl";
    g.tags = {"barrier_knl"};
    g.variant_args = {{"m", {"256", "512", "768", "1024"}},
                      {"nelements", {"524288"}},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"lid_stride_0", {"1"}},
                      {"lid_stride_1", {"2048"}}};
    g.create = make_barrier_knl;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "empty_knl";
    g.tags = {"empty_knl"};
    g.variant_args = {{"num_groups", {"16", "32", "64", "128", "256", "512"}}};
    g.create = make_empty_knl;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "overlap_knl";
    g.tags = {"overlap_knl"};
    std::vector<std::string> ms;
    for (int m = 0; m <= 16; ++m) ms.push_back(std::to_string(m));
    g.variant_args = {{"dtype", {"float32"}},
                      {"m", ms},
                      {"nelements", {"524288", "1048576"}},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"lid_stride_0", {"1"}},
                      {"lid_stride_1", {"2048"}}};
    g.create = make_overlap_knl;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "matmul_sq";
    g.tags = {"matmul_sq"};
    g.variant_args = {{"dtype", {"float32", "float64"}},
                      {"prefetch", {"True", "False"}},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"groups_fit", {"True"}},
                      {"n", {"2048", "2560", "3072", "3584"}}};
    g.create = make_matmul_sq;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "matmul_sq_rm";
    g.tags = {"matmul_sq_rm"};
    g.variant_args = {{"dtype", {"float32"}},
                      {"prefetch", {"True", "False"}},
                      {"keep", {"a", "b"}},
                      {"lsize_0", {"16"}},
                      {"lsize_1", {"16"}},
                      {"groups_fit", {"True"}},
                      {"n", {"2048", "2560", "3072", "3584"}}};
    g.create = make_matmul_sq_rm;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "finite_diff";
    g.tags = {"finite_diff"};
    g.variant_args = {{"dtype", {"float32"}},
                      {"tile", {"16x16", "18x18"}},
                      {"n", {"2240", "2464", "2688", "2912"}}};
    g.create = make_fd_stencil;
    out.push_back(std::move(g));
  }
  {
    Generator g;
    g.id = "finite_diff_rm";
    g.tags = {"finite_diff_rm"};
    g.variant_args = {{"dtype", {"float32"}},
                      {"tile", {"16x16", "18x18"}},
                      {"keep", {"u", "res"}},
                      {"n", {"2240", "2464", "2688", "2912"}}};
    g.create = make_fd_stencil_rm;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace perfseer
