#include "doctest.h"

#include <random>

#include "perfseer/executor.hpp"
#include "perfseer/features.hpp"
#include "perfseer/lang.hpp"
#include "perfseer/uipick.hpp"
#include "support.hpp"

using namespace perfseer;

namespace {

Kernel matmul_source() {
  return make_kernel("{[i,j,k]: 0<=i,j,k<n}", {"c[i,j] = sum(k, a[i,k]*b[k,j])"},
                     {{"a", Dtype::float32, {"n", "n"}},
                      {"b", Dtype::float32, {"n", "n"}},
                      {"c", Dtype::float32, {"n", "n"}}});
}

}  // namespace

TEST_CASE("feature id parsing and canonical round trip") {
  for (const std::string id : {
           "f_op_float32_madd",
           "f_op_float64_div",
           "f_mem_access_tag:bLD",
           "f_mem_access_tag:mm-PF-a",
           "f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}_afr:>1",
           "f_mem_access_local_float32",
           "f_mem_access_global_float32_store",
           "f_mem_access_lstrides:{0:<n}",
           "f_sync_barrier_local",
           "f_sync_kernel_launch",
           "f_sync_group_launch",
           "f_thread_groups",
           "f_exec_wall_time_synthetic_unit",
       }) {
    FeatureSpec spec = parse_feature(id);
    CHECK(spec.id() == id);
    CHECK(parse_feature(spec.id()).id() == id);
  }

  FeatureSpec mem = parse_feature(
      "f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}_afr:>1");
  CHECK(mem.lstride_cons.size() == 2);
  CHECK(mem.gstride_cons.size() == 1);
  REQUIRE(mem.afr_con.has_value());
  CHECK(mem.afr_con->rel == ConstraintRel::gt);
}

TEST_CASE("feature id errors") {
  CHECK_THROWS_AS(parse_feature("op_float32_madd"), EvalError);       // missing f_
  CHECK_THROWS_AS(parse_feature("f_op_float32_fma"), EvalError);      // unknown op
  CHECK_THROWS_AS(parse_feature("f_frobnicate"), EvalError);          // unknown class
  CHECK_THROWS_AS(parse_feature("f_mem_access_afr:>1_global"), EvalError);  // out of order
  CHECK_THROWS_AS(parse_feature("f_mem_access_load_global"), EvalError);    // out of order
  CHECK_THROWS_AS(parse_feature("f_mem_access_lstrides:{0:1"), EvalError);  // unclosed braces
  CHECK_THROWS_AS(parse_feature("f_mem_access_tag:aLD_global"), EvalError);  // tag + constraint
  CHECK_THROWS_AS(parse_feature("f_mem_access_lstrides:{0:1;0:2}"), EvalError);  // dup axis
}

TEST_CASE("op feature on the plain matmul") {
  // madd count n^3 at sub-group granularity: n=1024 gives 1024^3/32.
  Kernel k = matmul_source();
  FeatureSpec spec = parse_feature("f_op_float32_madd");
  FeatureValue v = evaluate_feature(spec, k, {{"n", 1024}});
  CHECK(v.numeric == 1024.0 * 1024.0 * 1024.0 / 32.0);
  REQUIRE(v.symbolic.has_value());
  CHECK(*v.symbolic == Poly::symbol("n").pow(3) * Rational(1, 32));

  // Sub-group size is configurable.
  FeatureValue v16 = evaluate_feature(spec, k, {{"n", 1024}}, nullptr, 60, 16);
  CHECK(v16.numeric == 1024.0 * 1024.0 * 1024.0 / 16.0);

  // A feature matching nothing evaluates to zero.
  FeatureValue zero = evaluate_feature(parse_feature("f_op_float32_div"), k, {{"n", 1024}});
  CHECK(zero.numeric == 0.0);
}

TEST_CASE("thread_groups and tagged features on the tiled matmul") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "1024"}});
  FeatureValue groups =
      evaluate_feature(parse_feature("f_thread_groups"), g.kernel, {{"n", 1024}});
  CHECK(groups.numeric == 4096.0);  // (1024/16)^2

  FeatureValue a = evaluate_feature(parse_feature("f_mem_access_tag:mm-PF-a"), g.kernel,
                                    {{"n", 1024}});
  // One a-load per (work-item, k_out): 1024^2 * 64.
  CHECK(a.numeric == 1024.0 * 1024.0 * 64.0);

  // Tag match on the untiled tagged matmul at n=4: 64 loads.
  Kernel tagged = make_kernel("{[i,j,k]: 0<=i,j,k<n}",
                              {"c[i,j] = sum(k, a$aLD[i,k]*b$bLD[k,j])"},
                              {{"a", Dtype::float32, {"n", "n"}},
                               {"b", Dtype::float32, {"n", "n"}},
                               {"c", Dtype::float32, {"n", "n"}}});
  FeatureValue bld = evaluate_feature(parse_feature("f_mem_access_tag:bLD"), tagged, {{"n", 4}});
  CHECK(bld.numeric == 64.0);
}

TEST_CASE("constrained matching distinguishes the two tiled loads") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "1024"}});
  auto value = [&](const std::string& id) {
    return evaluate_feature(parse_feature(id), g.kernel, {{"n", 1024}}).numeric;
  };
  double a = value("f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}_afr:>1");
  double b = value("f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:16}_afr:>1");
  double loads = value("f_mem_access_global_float32_load");
  CHECK(a == 1024.0 * 1024.0 * 64.0);
  CHECK(b == 1024.0 * 1024.0 * 64.0);
  CHECK(loads == a + b);
  // Parameter-dependent constraint: lstride 1 < n holds at n=1024.
  double param = value("f_mem_access_global_float32_load_lstrides:{1:<n}");
  CHECK(param == 0.0);  // lstride axis1 is exactly n, not < n
  double param2 = value("f_mem_access_global_float32_load_lstrides:{1:n}");
  CHECK(param2 == a + b);
}

TEST_CASE("monotone matching: dropping a constraint never lowers the value") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "512"}});
  const std::string full =
      "f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}_afr:>1";
  const std::vector<std::string> looser = {
      "f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}",
      "f_mem_access_global_float32_load_lstrides:{0:1;1:>15}",
      "f_mem_access_global_float32_load",
      "f_mem_access_global_float32",
      "f_mem_access_global",
      "f_mem_access",
  };
  double tight = evaluate_feature(parse_feature(full), g.kernel, {{"n", 512}}).numeric;
  double prev = tight;
  for (const auto& id : looser) {
    double v = evaluate_feature(parse_feature(id), g.kernel, {{"n", 512}}).numeric;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("uniform accesses contribute per sub-group") {
  // Two variants of one copy kernel: lid(0)-stride-1 vs uniform.
  auto build = [&](bool uniform) {
    Kernel k = make_kernel("{[g0,l0]: 0<=g0<64 and 0<=l0<256}",
                           uniform ? std::vector<std::string>{"y[g0, l0] = x[256*g0]"}
                                   : std::vector<std::string>{"y[g0, l0] = x[256*g0 + l0]"},
                           {{"x", Dtype::float32, {"16384"}},
                            {"y", Dtype::float32, {"64", "256"}}});
    return tag_inames(k, {{"g0", InameTag::group(0)}, {"l0", InameTag::local(0)}});
  };
  FeatureSpec loads = parse_feature("f_mem_access_global_float32_load");
  double strided = evaluate_feature(loads, build(false), {}).numeric;
  double uniform = evaluate_feature(loads, build(true), {}).numeric;
  CHECK(strided == 64.0 * 256.0);
  CHECK(uniform == 64.0 * 256.0 / 32.0);
}

TEST_CASE("wall-time features require an executor") {
  Kernel k = matmul_source();
  FeatureSpec wall = parse_feature("f_exec_wall_time_synthetic_unit");
  CHECK_THROWS_AS(evaluate_feature(wall, k, {{"n", 64}}), EvalError);

  SyntheticDeviceSpec spec;
  spec.name = "unit";
  spec.cost_table.push_back(CostEntry{"f_op_float32_madd", CostBucket::onchip, 1e-9});
  SyntheticDevice device(spec);
  FeatureValue v = evaluate_feature(wall, k, {{"n", 64}}, &device, 5);
  CHECK(v.numeric == doctest::Approx(64.0 * 64.0 * 64.0 / 32.0 * 1e-9));
}

TEST_CASE("bindings must satisfy the assumption set") {
  GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                      {"prefetch", "True"},
                                      {"lsize_0", "16"},
                                      {"lsize_1", "16"},
                                      {"groups_fit", "True"},
                                      {"n", "1024"}});
  FeatureSpec spec = parse_feature("f_op_float32_madd");
  CHECK_THROWS_AS(evaluate_feature(spec, g.kernel, {{"n", 1000}}), EvalError);  // 16 | n fails
  CHECK_THROWS_AS(evaluate_feature(spec, g.kernel, {}), EvalError);             // unbound n
}

TEST_CASE("cache correctness on randomized kernels and bindings") {
  clear_count_cache();
  std::mt19937_64 rng(99);
  std::vector<FeatureSpec> specs = {
      parse_feature("f_op_float32_madd"),
      parse_feature("f_op_float32_add"),
      parse_feature("f_mem_access_global_float32_load"),
      parse_feature("f_mem_access_global_float32_load_lstrides:{0:<n}"),
      parse_feature("f_mem_access_global_float32_store_afr:1"),
      parse_feature("f_sync_kernel_launch"),
  };
  // Cached and uncached evaluation agree exactly, including on errors
  // (sub-group granularity divisions may be rejected on odd-sized kernels).
  auto eval_or_error = [](const FeatureSpec& spec, const Kernel& k,
                          const std::map<std::string, long long>& bindings, bool use_cache) {
    try {
      return std::make_pair(
          evaluate_feature(spec, k, bindings, nullptr, 60, 32, use_cache).numeric, std::string());
    } catch (const Error& e) {
      return std::make_pair(0.0, std::string(e.what()));
    }
  };
  int checked = 0;
  for (int t = 0; t < 20; ++t) {
    perfseer::testing::RandomCase rc = perfseer::testing::random_kernel(rng);
    for (size_t b = 0; b < rc.bindings.size() && b < 5; ++b) {
      for (const auto& spec : specs) {
        auto with_cache = eval_or_error(spec, rc.kernel, rc.bindings[b], true);
        auto without_cache = eval_or_error(spec, rc.kernel, rc.bindings[b], false);
        CHECK(with_cache == without_cache);
        ++checked;
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("gather_feature_values builds dense deterministic tables") {
  std::vector<KernelInstance> kernels;
  for (const std::string n : {"2048", "2560", "3072", "3584"}) {
    GeneratedKernel g = make_matmul_sq({{"dtype", "float32"},
                                        {"prefetch", "True"},
                                        {"lsize_0", "16"},
                                        {"lsize_1", "16"},
                                        {"groups_fit", "True"},
                                        {"n", n}});
    kernels.push_back(KernelInstance{g.id, g.kernel, g.bindings});
  }
  std::vector<FeatureSpec> features = {parse_feature("f_op_float32_madd"),
                                       parse_feature("f_thread_groups")};
  FeatureTable table = gather_feature_values(features, kernels);
  CHECK(table.columns == std::vector<std::string>{"f_op_float32_madd", "f_thread_groups"});
  REQUIRE(table.row_ids.size() == 4);
  REQUIRE(table.values.size() == 4);
  CHECK(table.values[0][0] == 2048.0 * 2048.0 * 2048.0 / 32.0);
  CHECK(table.values[0][1] == 128.0 * 128.0);

  // CSV round trip.
  FeatureTable again = FeatureTable::from_csv(table.to_csv());
  CHECK(again.columns == table.columns);
  CHECK(again.row_ids == table.row_ids);
  CHECK(again.values == table.values);

  // Empty kernel list.
  FeatureTable empty = gather_feature_values(features, {});
  CHECK(empty.row_ids.empty());

  // Errors carry the kernel id.
  std::vector<KernelInstance> bad = kernels;
  bad[0].bindings.clear();
  try {
    gather_feature_values(features, bad);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(std::string(e.what()).find(bad[0].id) != std::string::npos);
  }
}
