#include "doctest.h"

#include <random>

#include "perfseer/counting.hpp"
#include "perfseer/lang.hpp"
#include "perfseer/oracle.hpp"
#include "perfseer/transforms.hpp"
#include "perfseer/uipick.hpp"
#include "support.hpp"

using namespace perfseer;
namespace pt = perfseer::testing;

namespace {

Kernel matmul_source() {
  return make_kernel("{[i,j,k]: 0<=i,j,k<n}", {"c[i,j] = sum(k, a[i,k]*b[k,j])"},
                     {{"a", Dtype::float32, {"n", "n"}},
                      {"b", Dtype::float32, {"n", "n"}},
                      {"c", Dtype::float32, {"n", "n"}}});
}

Kernel fd_source() {
  return make_kernel(
      "{[i,j]: 0<=i,j<n}",
      {"res[i,j] = u[i,j+1] + u[i+1,j] - 4*u[i+1,j+1] + u[i+1,j+2] + u[i+2,j+1]"},
      {{"u", Dtype::float32, {"n + 2", "n + 2"}}, {"res", Dtype::float32, {"n", "n"}}});
}

const CountedAccess& find_tagged(const std::vector<CountedAccess>& accesses,
                                 const std::string& tag) {
  for (const auto& a : accesses)
    if (a.pattern.tag == tag) return a;
  FAIL(("no pattern with tag " + tag).c_str());
  std::abort();
}

long long eval_ll(const Poly& p, const std::map<std::string, long long>& env) {
  Rational v = p.eval(env);
  REQUIRE(is_integer(v));
  return numerator(v).convert_to<long long>();
}

}  // namespace

TEST_CASE("count_points: triangular domain reproduces the closed form") {
  LoopDomain d = parse_domain("{[i,j]: p<=i<n and p<=j<i+1}");
  Poly count = count_points(d, {"i", "j"}, {});
  CHECK(count.str() == "(n^2 - 2*n*p + p^2 + n - p)/2");
  CHECK(count.eval({{"n", 5}, {"p", 1}}) == Rational(10));

  // Ten random (n, p) pairs against direct enumeration.
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    long long n = 2 + static_cast<long long>(rng() % 40);
    long long p = static_cast<long long>(rng() % n);
    long long direct = 0;
    for (long long i = p; i < n; ++i)
      for (long long j = p; j <= i; ++j) ++direct;
    CHECK(count.eval({{"n", n}, {"p", p}}) == Rational(direct));
  }
}

TEST_CASE("count_points: one-point and box domains") {
  CHECK(count_points(parse_domain("{[i]: 0<=i<1}"), {"i"}, {}) == Poly::constant(1));
  LoopDomain box = parse_domain("{[i,j,k]: 0<=i,j,k<n}");
  Poly count = count_points(box, {"i", "j", "k"}, {});
  Poly n = Poly::symbol("n");
  CHECK(count == n * n * n);
  CHECK(count.eval({{"n", 4}}) == Rational(64));
}

TEST_CASE("count_points: projections and bound closure") {
  LoopDomain d = parse_domain("{[i,j]: 0<=i<n and 0<=j<i+1}");
  CHECK(count_points(d, {"i"}, {}) == Poly::symbol("n"));
  CHECK_THROWS_AS(count_points(d, {"j"}, {}), CountError);  // bound references i
}

TEST_CASE("count_points: unresolved division needs an assumption") {
  Kernel k = assume_divisible(matmul_source(), "n", 16);
  Kernel s = split_iname(k, "i", 16);
  std::set<std::string> subset{"i_out", "i_in"};
  CHECK(count_points(s.domain, subset, s.assumptions) == Poly::symbol("n"));
  CHECK_THROWS_AS(count_points(s.domain, subset, {}), CountError);
}

TEST_CASE("count_ops: plain matmul is pure madd") {
  Kernel k = matmul_source();
  auto ops = count_ops(k);
  REQUIRE(ops.size() == 1);
  CHECK(ops[0].kind.op == OpName::madd);
  CHECK(ops[0].kind.dtype == Dtype::float32);
  CHECK(ops[0].kind.gran == Granularity::sub_group);
  Poly n = Poly::symbol("n");
  CHECK(ops[0].count == n * n * n);

  OracleCounts oc = brute_force_count(k, {{"n", 4}});
  CHECK(oc.ops.at("op:float32:madd") == 64);
  CHECK(eval_ll(ops[0].count, {{"n", 4}}) == 64);
}

TEST_CASE("count_ops: five-point stencil fuses one madd") {
  auto ops = count_ops(fd_source());
  std::map<std::string, Poly> by_key;
  for (const auto& o : ops) by_key[opname_str(o.kind.op)] = o.count;
  Poly n2 = Poly::symbol("n") * Poly::symbol("n");
  REQUIRE(by_key.count("madd"));
  REQUIRE(by_key.count("add"));
  CHECK(by_key.at("madd") == n2);
  CHECK(by_key.at("add") == n2 * Rational(3));
  CHECK(by_key.count("mul") == 0);

  // The per-statement decomposition agrees with expression-walk enumeration.
  OracleCounts oc = brute_force_count(fd_source(), {{"n", 5}});
  CHECK(oc.ops.at("op:float32:madd") == 25);
  CHECK(oc.ops.at("op:float32:add") == 75);
}

TEST_CASE("count_ops: empty kernel has an empty count map") {
  Kernel k = make_kernel("{[i]: 0<=i<n}", {}, {});
  CHECK(count_ops(k).empty());
  CHECK(classify_accesses(k).empty());
}

TEST_CASE("classify_accesses reproduces the tiled-prefetch load table") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "2048"}});
  auto accesses = classify_accesses(g.kernel);
  Poly n = Poly::symbol("n");
  Poly n16 = n * Rational(16);

  const CountedAccess& a = find_tagged(accesses, "mm-PF-a");
  CHECK(a.pattern.mem == MemType::global_mem);
  CHECK(a.pattern.dir == Direction::load);
  CHECK(a.pattern.lstrides.at(0) == Poly::constant(1));
  CHECK(a.pattern.lstrides.at(1) == n);
  CHECK(a.pattern.gstrides.at(0) == Poly());
  CHECK(a.pattern.gstrides.at(1) == n16);
  REQUIRE(a.pattern.loop_stride.has_value());
  CHECK(*a.pattern.loop_stride == Poly::constant(16));
  CHECK(a.pattern.afr == PolyRatio::exact(n * Rational(1, 16)));
  CHECK(a.pattern.gran == Granularity::work_item);

  const CountedAccess& b = find_tagged(accesses, "mm-PF-b");
  CHECK(b.pattern.lstrides.at(0) == Poly::constant(1));
  CHECK(b.pattern.lstrides.at(1) == n);
  CHECK(b.pattern.gstrides.at(0) == Poly::constant(16));
  CHECK(b.pattern.gstrides.at(1) == Poly());
  REQUIRE(b.pattern.loop_stride.has_value());
  CHECK(*b.pattern.loop_stride == n16);
  CHECK(b.pattern.afr == PolyRatio::exact(n * Rational(1, 16)));
}

TEST_CASE("uniform accesses are counted per sub-group") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "False"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "2048"}});
  auto accesses = classify_accesses(g.kernel);
  const CountedAccess& a = find_tagged(accesses, "mm-noPF-a");
  CHECK(a.pattern.lstrides.at(0) == Poly());  // lid(0) stride 0: uniform
  CHECK(a.pattern.gran == Granularity::sub_group);
  const CountedAccess& b = find_tagged(accesses, "mm-noPF-b");
  CHECK(b.pattern.lstrides.at(0) == Poly::constant(1));
  CHECK(b.pattern.gran == Granularity::work_item);
  REQUIRE(b.pattern.loop_stride.has_value());
  CHECK(*b.pattern.loop_stride == Poly::symbol("n"));
}

TEST_CASE("footprints") {
  // Full-array access.
  Kernel k = matmul_source();
  Poly n = Poly::symbol("n");
  CHECK(footprint(k, "a") == n * n);
  CHECK(footprint(k, "b") == n * n);

  // Five-point stencil: (n+2)^2 minus the four corners.
  Kernel fd = assume_lower_bound(fd_source(), "n", 3);
  Poly expected = (n + Poly::constant(2)) * (n + Poly::constant(2)) - Poly::constant(4);
  CHECK(footprint(fd, "u") == expected);
  CHECK(eval_ll(expected, {{"n", 4}}) == 32);
  OracleCounts oc = brute_force_count(fd, {{"n", 4}});
  CHECK(oc.footprints.at("u") == 32);

  // Repeated access over i: AFR n for b.
  auto accesses = classify_accesses(k);
  bool checked = false;
  for (const auto& e : accesses) {
    if (e.pattern.dir != Direction::load) continue;
    CHECK(e.pattern.afr == PolyRatio::exact(n));
    checked = true;
  }
  CHECK(checked);
}

TEST_CASE("footprint needs assumptions for the stencil union") {
  CHECK_THROWS_AS(footprint(fd_source(), "u"), CountError);
}

TEST_CASE("footprint rejects coupled subscripts") {
  Kernel diag = make_kernel("{[i]: 0<=i<n}", {"y[i] = x[i, i]"},
                            {{"x", Dtype::float32, {"n", "n"}}, {"y", Dtype::float32, {"n"}}});
  CHECK_THROWS_AS(footprint(diag, "x"), CountError);

  Kernel tri = make_kernel("{[i,j]: 0<=i<n and 0<=j<i+1}", {"y[i] = x[j] + y[i]"},
                           {{"x", Dtype::float32, {"n"}}, {"y", Dtype::float32, {"n"}}});
  CHECK_THROWS_AS(footprint(tri, "x"), CountError);
}

TEST_CASE("count_sync on the prefetch matmul") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "2048"}});
  auto sync = count_sync(g.kernel);
  Poly n = Poly::symbol("n");
  for (const auto& e : sync) {
    if (e.kind == SyncKind::barrier_local) CHECK(e.count == n * Rational(2, 16));
    if (e.kind == SyncKind::kernel_launch) CHECK(e.count == Poly::constant(1));
    if (e.kind == SyncKind::group_launch) CHECK(e.count == n * n * Rational(1, 256));
  }
  // Interpretation at n=64: two barriers per tile loop iteration.
  OracleCounts oc = brute_force_count(g.kernel, {{"n", 64}});
  CHECK(oc.barrier_local == 8);

  Kernel plain = matmul_source();
  auto sync2 = count_sync(plain);
  for (const auto& e : sync2) {
    if (e.kind == SyncKind::barrier_local) CHECK(e.count.is_zero());
    if (e.kind == SyncKind::kernel_launch) CHECK(e.count == Poly::constant(1));
  }
}

TEST_CASE("brute force: triangular point count at n=5, p=1") {
  Kernel k = make_kernel("{[i,j]: p<=i<n and p<=j<i+1}", {"y[i] = sum(j, x[i] * 2)"},
                         {{"x", Dtype::float32, {"n"}}, {"y", Dtype::float32, {"n"}}});
  OracleCounts oc = brute_force_count(k, {{"n", 5}, {"p", 1}});
  // The multiply fuses with the accumulation add: one madd per triangle point.
  CHECK(oc.ops.at("op:float32:madd") == 10);
  CHECK((25 + 1 - 10 + 5 - 1) / 2 == 10);
}

TEST_CASE("brute force: matmul at n=4") {
  OracleCounts oc = brute_force_count(matmul_source(), {{"n", 4}});
  CHECK(oc.ops.at("op:float32:madd") == 64);
  CHECK(oc.footprints.at("a") == 16);
  long long a_loads = 0;
  for (const auto& [key, v] : oc.access_counts)
    if (key.find("load") != std::string::npos) a_loads += v;
  CHECK(a_loads == 128);  // 64 loads of a plus 64 of b
}

TEST_CASE("brute force: empty domain tallies zero") {
  Kernel k = make_kernel("{[i]: 0<=i<n}", {"y[i] = x[i]"},
                         {{"x", Dtype::float32, {"n + 1"}}, {"y", Dtype::float32, {"n + 1"}}});
  OracleCounts oc = brute_force_count(k, {{"n", 0}});
  CHECK(oc.ops.empty());
  for (const auto& [key, v] : oc.access_counts) CHECK(v == 0);
  // Negative ranges are evaluation errors.
  CHECK_THROWS_AS(brute_force_count(k, {{"n", -2}}), EvalError);
  // The size guard rejects huge domains.
  CHECK_THROWS_AS(brute_force_count(k, {{"n", 100000}}, 1000), EvalError);
}

TEST_CASE("oracle equivalence on randomized nested-affine kernels") {
  std::mt19937_64 rng(2024);
  int kernels = 0;
  while (kernels < 12) {
    pt::RandomCase rc = pt::random_kernel(rng);
    ++kernels;
    int used = 0;
    for (const auto& env : rc.bindings) {
      if (used >= 3) break;
      ++used;
      CAPTURE(pretty_print(rc.kernel));
      pt::check_counts_vs_oracle(rc.kernel, env);
    }
  }
}

TEST_CASE("linearity: kernel counts are the sum of per-statement counts") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    pt::RandomCase rc = pt::random_kernel(rng);
    KernelCounts whole = analyze(rc.kernel);
    std::map<std::string, Poly> sum_ops;
    for (size_t i = 0; i < rc.kernel.statements.size(); ++i) {
      Kernel single = rc.kernel;
      single.statements = {rc.kernel.statements[i]};
      for (const auto& e : analyze(single).ops) sum_ops[e.kind.key()] += e.count;
    }
    std::map<std::string, Poly> whole_ops;
    for (const auto& e : whole.ops) whole_ops[e.kind.key()] = e.count;
    for (auto it = sum_ops.begin(); it != sum_ops.end();) {
      if (it->second.is_zero())
        it = sum_ops.erase(it);
      else
        ++it;
    }
    CHECK(whole_ops.size() == sum_ops.size());
    for (const auto& [key, p] : whole_ops) {
      REQUIRE(sum_ops.count(key));
      CHECK(sum_ops.at(key) == p);
    }
  }
}

TEST_CASE("cached counts are reused without new projections") {
  clear_count_cache();
  Kernel k = matmul_source();
  auto first = analyze_cached(k);
  uint64_t after_first = projection_count();
  auto second = analyze_cached(k);
  CHECK(first.get() == second.get());
  // Re-evaluating the cached polynomials at new bindings projects nothing.
  for (const auto& e : second->ops) {
    (void)e.count.eval({{"n", 512}});
    (void)e.count.eval({{"n", 1024}});
  }
  CHECK(projection_count() == after_first);
}
