#pragma once

// Shared test utilities: a sequential reference evaluator for transformation
// soundness checks, a randomized nested-affine kernel generator, and the
// symbolic-vs-enumeration comparison used by the oracle equivalence tests.

#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

#include "perfseer/counting.hpp"
#include "perfseer/ir.hpp"
#include "perfseer/lang.hpp"
#include "perfseer/oracle.hpp"
#include "perfseer/transforms.hpp"

namespace perfseer::testing {

using Env = std::map<std::string, long long>;

inline long long eval_ll(const AffineExpr& a, const Env& env) {
  Rational v = a.eval(env);
  REQUIRE(is_integer(v));
  return numerator(v).convert_to<long long>();
}

// Deterministic pseudo-input for array elements. Small integers keep every
// arithmetic result exact in double precision, so reassociated summation
// orders (e.g. a split reduction loop) compare bit-identically.
inline double seed_value(const std::string& array, long long flat) {
  uint64_t h = 1469598103934665603ull;
  for (char c : array) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  h ^= static_cast<uint64_t>(flat);
  h *= 1099511628211ull;
  return 1.0 + static_cast<double>(h % 17);
}

// Sequential interpreter for kernels whose statements are functional (no
// loop-carried reuse of overwritten temporaries across statements). Each
// statement's loop nest runs to completion before the next statement.
// Barriers are no-ops. Returns the contents of every global array.
inline std::map<std::string, std::vector<double>> run_reference(const Kernel& k,
                                                                const Env& bindings) {
  std::map<std::string, std::vector<double>> arrays;
  std::map<std::string, std::vector<long long>> strides;
  std::set<std::string> written;
  for (const auto& s : k.statements)
    if (!s.is_barrier && !s.lhs.is_scalar()) written.insert(s.lhs.array);

  for (const auto& a : k.args) {
    if (a.shape.empty()) continue;
    long long total = 1;
    std::vector<long long> dim(a.shape.size());
    for (size_t d = 0; d < a.shape.size(); ++d) {
      dim[d] = eval_ll(a.shape[d], bindings);
      total *= dim[d];
    }
    std::vector<long long> rs(a.shape.size(), 1);
    for (size_t d = a.shape.size(); d-- > 1;) rs[d - 1] = rs[d] * dim[d];
    strides[a.name] = rs;
    std::vector<double> data(static_cast<size_t>(total));
    if (!written.count(a.name))
      for (long long i = 0; i < total; ++i)
        data[static_cast<size_t>(i)] = seed_value(a.name, i);
    arrays[a.name] = std::move(data);
  }

  // Private scalars keyed by the values of parallel inames (work-item id).
  std::map<std::string, double> privates;
  auto private_key = [&](const std::string& name, const Env& env) {
    std::string key = name;
    for (const auto& iname : k.domain.inames)
      if (k.tag_of(iname).is_parallel()) {
        auto it = env.find(iname);
        key += "/" + std::to_string(it == env.end() ? 0 : it->second);
      }
    return key;
  };

  auto flat_index = [&](const Access& a, const Env& env) {
    long long flat = 0;
    const auto& rs = strides.at(a.array);
    for (size_t d = 0; d < a.subs.size(); ++d) {
      long long idx = eval_ll(a.subs[d], env);
      REQUIRE(idx >= 0);
      flat += idx * rs[d];
    }
    return flat;
  };

  std::function<double(const ExprPtr&, Env&)> eval_expr = [&](const ExprPtr& e,
                                                              Env& env) -> double {
    switch (e->kind) {
      case Expr::Kind::number:
        return to_double(e->number);
      case Expr::Kind::scalar_ref:
        return privates[private_key(e->name, env)];
      case Expr::Kind::access:
        return arrays.at(e->access.array).at(static_cast<size_t>(flat_index(e->access, env)));
      case Expr::Kind::binary: {
        double l = eval_expr(e->lhs, env);
        double r = eval_expr(e->rhs, env);
        switch (e->op) {
          case BinOp::add: return l + r;
          case BinOp::sub: return l - r;
          case BinOp::mul: return l * r;
          case BinOp::div: return l / r;
        }
        return 0;
      }
      case Expr::Kind::reduction: {
        const Bound& b = k.domain.bound(e->red_iname);
        long long lo = eval_ll(b.lo, env), hi = eval_ll(b.hi, env);
        double acc = 0.0;
        for (long long v = lo; v <= hi; ++v) {
          env[e->red_iname] = v;
          acc += eval_expr(e->body, env);
        }
        env.erase(e->red_iname);
        return acc;
      }
    }
    return 0;
  };

  for (const auto& s : k.statements) {
    if (s.is_barrier) continue;
    std::vector<std::string> order = k.ordered_within(s);
    Env env(bindings);
    std::function<void(size_t)> nest = [&](size_t depth) {
      if (depth == order.size()) {
        double value = eval_expr(s.rhs, env);
        if (s.lhs.is_scalar())
          privates[private_key(s.lhs.array, env)] = value;
        else
          arrays.at(s.lhs.array)[static_cast<size_t>(flat_index(s.lhs, env))] = value;
        return;
      }
      const Bound& b = k.domain.bound(order[depth]);
      long long lo = eval_ll(b.lo, env), hi = eval_ll(b.hi, env);
      for (long long v = lo; v <= hi; ++v) {
        env[order[depth]] = v;
        nest(depth + 1);
      }
      env.erase(order[depth]);
    };
    nest(0);
  }

  std::map<std::string, std::vector<double>> out;
  for (const auto& a : k.args)
    if (a.space == MemSpace::global && written.count(a.name)) out[a.name] = arrays.at(a.name);
  return out;
}

// ---------------------------------------------------------------------------
// Randomized nested-affine kernels. Subscripts only reference inames whose
// bounds are parameter-affine (the symbolic footprint engine's domain);
// triangular inames are exercised through projections and reductions.

struct RandomCase {
  Kernel kernel;
  std::vector<Env> bindings;
};

// Lower bounds let the footprint engine decide its interval comparisons.
inline Kernel add_default_assumptions(const Kernel& k) {
  Kernel r = k;
  for (const auto& p : k.domain.parameters)
    r = assume_lower_bound(r, p, p == "p" ? 1 : 5);
  return r;
}

inline RandomCase random_kernel(std::mt19937_64& rng) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); };

  int domain_kind = pick(5);
  std::string domain;
  std::vector<std::string> box;  // inames usable in subscripts
  std::string red;               // reduction-only iname ("" if none)
  switch (domain_kind) {
    case 0:
      domain = "{[i]: 0<=i<n}";
      box = {"i"};
      break;
    case 1:
      domain = "{[i,j]: 0<=i<n and 0<=j<m}";
      box = {"i", "j"};
      break;
    case 2:
      domain = "{[i,j,k]: 0<=i,j,k<n}";
      box = {"i", "j"};
      red = "k";
      break;
    case 3:
      domain = "{[i,j]: p<=i<n and p<=j<i+1}";  // triangular j
      box = {"i"};
      red = "j";
      break;
    case 4:
      domain = "{[i,j]: 0<=i<8 and 2<=j<m}";
      box = {"i", "j"};
      break;
  }

  // Stride multipliers are fixed per (array, axis) so multiple sites of one
  // array stay step-compatible; offsets (congruent modulo the stride) vary
  // per site and exercise the interval unions. Domains whose extent involves
  // two parameters (p..n-1) keep offsets fixed as well: interval overlaps of
  // shifted copies would need cross-parameter comparisons the assumption
  // language cannot decide.
  const bool fixed_offsets = domain_kind == 3;
  std::map<std::pair<std::string, int>, int> mult_of;
  std::map<std::pair<std::string, int>, int> offset_of;
  auto sub1 = [&](const std::string& array, int axis, const std::string& iname) {
    auto [it, inserted] = mult_of.emplace(std::make_pair(array, axis), 0);
    if (inserted) it->second = 1 + pick(3);
    int mult = it->second;
    int offset;
    if (fixed_offsets) {
      auto [oit, oins] = offset_of.emplace(std::make_pair(array, axis), 0);
      if (oins) oit->second = mult * pick(4);
      offset = oit->second;
    } else {
      offset = mult * pick(4);
    }
    std::string s = mult == 1 ? iname : std::to_string(mult) + "*" + iname;
    if (offset > 0) s += " + " + std::to_string(offset);
    return s;
  };
  auto subs2d = [&](const std::string& array) {
    if (box.size() == 1) return sub1(array, 0, box[0]);
    return sub1(array, 0, box[0]) + ", " + sub1(array, 1, box[1]);
  };

  std::vector<std::string> instructions;
  std::vector<ArgSpec> args;
  std::set<std::string> arrays;
  std::string shape = box.size() == 1 ? "4*n + 16" : "4*n + 16, 4*m + 4*n + 16";
  auto declare = [&](const std::string& name) {
    if (arrays.insert(name).second) args.push_back(ArgSpec{name, Dtype::float32, {}});
  };

  int nstatements = 1 + pick(3);
  for (int s = 0; s < nstatements; ++s) {
    std::string dst = "out" + std::to_string(s);
    declare(dst);
    std::string body;
    switch (pick(5)) {
      case 0:
        declare("x");
        body = "x[" + subs2d("x") + "]";
        break;
      case 1:
        declare("x");
        declare("y");
        body = "x[" + subs2d("x") + "] * y[" + subs2d("y") + "] + x$t" + std::to_string(s) +
               "[" + subs2d("x") + "]";
        break;
      case 2:
        declare("x");
        body = "x[" + subs2d("x") + "] / 2 + 3.5";
        break;
      case 3:
        declare("x");
        declare("y");
        if (!red.empty())
          body = "sum(" + red + ", x[" + subs2d("x") + "] * y[" + subs2d("y") + "])";
        else
          body = "x[" + subs2d("x") + "] + 2 * y[" + subs2d("y") + "]";
        break;
      default:
        declare("x");
        body = "2 * x[" + subs2d("x") + "] - x[" + subs2d("x") + "]";
        break;
    }
    instructions.push_back(dst + "[" + subs2d(dst) + "] = " + body);
  }
  for (auto& a : args) {
    a.shape.clear();
    a.shape.push_back(box.size() == 1 ? "4*n + 16" : "4*n + 16");
    if (box.size() == 2) a.shape.push_back("4*m + 4*n + 16");
    (void)shape;
  }

  RandomCase out;
  out.kernel = add_default_assumptions(make_kernel(domain, instructions, args, "random"));

  std::uniform_int_distribution<long long> size_dist(2, 9);
  for (int b = 0; b < 5; ++b) {
    Env env;
    for (const auto& p : out.kernel.domain.parameters) {
      if (p == "p")
        env[p] = 1 + (rng() % 2);
      else
        env[p] = size_dist(rng) + 3;
    }
    out.bindings.push_back(env);
  }
  return out;
}

// Compares every symbolic count family against the enumeration oracle at
// one binding; integer-exact.
inline void check_counts_vs_oracle(const Kernel& k, const Env& bindings) {
  KernelCounts counts = analyze(k);
  OracleCounts oc = brute_force_count(k, bindings);

  auto as_ll = [&](const Poly& p) {
    Rational v = p.eval(bindings);
    REQUIRE(is_integer(v));
    return numerator(v).convert_to<long long>();
  };

  // Operations.
  std::map<std::string, long long> sym_ops;
  for (const auto& e : counts.ops) {
    long long v = as_ll(e.count);
    if (v != 0) sym_ops[e.kind.key()] += v;
  }
  CHECK(sym_ops == oc.ops);

  // Accesses: group symbolic entries by their numerically evaluated keys.
  std::map<std::string, long long> sym_access;
  std::map<std::string, std::vector<const CountedAccess*>> sym_groups;
  std::map<std::string, std::string> sym_gran;
  for (const auto& e : counts.accesses) {
    NumericPattern np = evaluate_pattern(e.pattern, bindings);
    long long v = as_ll(e.count);
    sym_access[np.key()] += v;
    sym_groups[np.key()].push_back(&e);
    sym_gran[np.key()] = granularity_str(e.pattern.gran);
  }
  std::map<std::string, long long> oracle_access;
  for (const auto& [key, v] : oc.access_counts)
    if (v != 0) oracle_access[key] = v;
  for (auto it = sym_access.begin(); it != sym_access.end();) {
    if (it->second == 0)
      it = sym_access.erase(it);
    else
      ++it;
  }
  CHECK(sym_access == oracle_access);
  for (const auto& [key, v] : sym_access) {
    CHECK(sym_gran[key] == oc.access_gran[key]);
    // Footprints and AFR compare when a numeric key has exactly one symbolic
    // group (numeric collisions of distinct patterns would merge unions).
    if (sym_groups[key].size() == 1) {
      const CountedAccess* e = sym_groups[key][0];
      Rational afr = e->pattern.afr.eval(bindings);
      REQUIRE(oc.access_footprints[key] > 0);
      CHECK(afr == Rational(v) / oc.access_footprints[key]);
      CHECK(afr >= 1);
    }
  }

  // Per-array footprints.
  std::map<std::string, long long> sym_fp;
  for (const auto& [array, p] : counts.footprints) {
    long long v = as_ll(p);
    if (v != 0) sym_fp[array] = v;
  }
  std::map<std::string, long long> oracle_fp;
  for (const auto& [array, v] : oc.footprints)
    if (v != 0) oracle_fp[array] = v;
  CHECK(sym_fp == oracle_fp);

  // Synchronization.
  long long sym_barrier = 0, sym_group_launch = -1;
  for (const auto& e : counts.sync) {
    if (e.kind == SyncKind::barrier_local) sym_barrier = as_ll(e.count);
    if (e.kind == SyncKind::kernel_launch) CHECK(as_ll(e.count) == 1);
    if (e.kind == SyncKind::group_launch) sym_group_launch = as_ll(e.count);
  }
  CHECK(sym_barrier == oc.barrier_local);
  if (oc.has_group_launch) CHECK(sym_group_launch == oc.group_launch);
}

}  // namespace perfseer::testing
