#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "perfseer/model.hpp"

using namespace perfseer;

namespace {

// eval with explicit vectors
double g(const Model& m, const std::vector<double>& p, const std::vector<double>& f) {
  return eval_model(m, p, f);
}

Model overlap_model() {
  // t = p_launch*f_launch + cg*sstep(cg-co) + co*sstep(co-cg) with
  // cg = p_g*f_gmem and co = p_o*f_lmem.
  return parse_model(
      "f_exec_wall_time_synthetic_dev",
      "p_launch * f_sync_kernel_launch + "
      "(p_g * f_mem_access_global_float32) * "
      "sstep(p_g * f_mem_access_global_float32 - p_o * f_mem_access_local_float32; p_edge) + "
      "(p_o * f_mem_access_local_float32) * "
      "sstep(p_o * f_mem_access_local_float32 - p_g * f_mem_access_global_float32; p_edge)");
}

}  // namespace

TEST_CASE("model parsing extracts parameters and features in order") {
  Model m = parse_model("f_exec_wall_time_synthetic_dev", "p_f32madd * f_op_float32_madd");
  CHECK(m.params == std::vector<std::string>{"p_f32madd"});
  CHECK(m.feature_ids == std::vector<std::string>{"f_op_float32_madd"});
  CHECK(g(m, {2.0}, {3.0}) == 6.0);

  Model affine = parse_model("f_exec_wall_time_synthetic_dev", "p_a * f_thread_groups + p_b");
  CHECK(affine.params == std::vector<std::string>{"p_a", "p_b"});
  CHECK(g(affine, {2.0, 7.0}, {10.0}) == 27.0);

  // The full eight-parameter linear form with a barrier-groups product term.
  Model full = parse_model(
      "f_exec_wall_time_synthetic_dev",
      "p_f32madd * f_op_float32_madd + "
      "p_f32l * f_mem_access_local_float32 + "
      "p_f32ga * f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:0}_afr:>1 + "
      "p_f32gb * f_mem_access_global_float32_load_lstrides:{0:1;1:>15}_gstrides:{0:16}_afr:>1 + "
      "p_f32gc * f_mem_access_global_float32_store + "
      "p_barrier * f_sync_barrier_local * f_thread_groups + "
      "p_group * f_thread_groups + "
      "p_launch * f_sync_kernel_launch");
  CHECK(full.params.size() == 8);
  CHECK(full.features.size() == 8);  // thread_groups deduplicates across its two uses
}

TEST_CASE("model parsing errors") {
  CHECK_THROWS_AS(parse_model("f_op_float32_madd", "p_a * f_thread_groups"), EvalError);
  CHECK_THROWS_AS(
      parse_model("f_exec_wall_time_dev", "p_a * f_exec_wall_time_dev"), EvalError);
  CHECK_THROWS_AS(parse_model("f_exec_wall_time_dev", "f_thread_groups"), EvalError);  // no params
  CHECK_THROWS_AS(parse_model("f_exec_wall_time_dev", "q_a * f_thread_groups"), Error);
  CHECK_THROWS_AS(parse_model("f_exec_wall_time_dev", "p_a * (f_thread_groups"), ParseError);
}

TEST_CASE("sstep identities") {
  Model m = parse_model("f_exec_wall_time_dev", "sstep(f_thread_groups; p_edge) + 0 * p_c");
  auto sstep_at = [&](double edge, double x) { return g(m, {edge, 0.0}, {x}); };
  CHECK(sstep_at(7.0, 0.0) == 0.5);
  CHECK(sstep_at(123.0, 0.0) == 0.5);
  CHECK(sstep_at(10.0, 1.0) ==
        doctest::Approx((std::tanh(10.0) + 1.0) / 2.0).epsilon(1e-15));
  for (double x : {0.01, 0.5, 2.0, 40.0}) {
    CHECK(std::fabs(sstep_at(3.0, x) + sstep_at(3.0, -x) - 1.0) < 1e-12);
  }
  CHECK(sstep_at(2.0, 1e6) == doctest::Approx(1.0));
  CHECK(sstep_at(2.0, -1e6) == doctest::Approx(0.0));

  // Overlap form: with far-apart costs the larger one wins.
  Model ov = parse_model("f_exec_wall_time_dev",
                         "p_cg * f_thread_groups * sstep(p_cg * f_thread_groups - p_co * "
                         "f_sync_kernel_launch; p_edge) + p_co * f_sync_kernel_launch * "
                         "sstep(p_co * f_sync_kernel_launch - p_cg * f_thread_groups; p_edge)");
  // cg = 10, co = 2 with p_edge = 2: within 1e-6 of max.
  double t = g(ov, {10.0, 2.0, 2.0}, {1.0, 1.0});
  CHECK(std::fabs(t - 10.0) < 1e-6);
}

TEST_CASE("differentiation matches centered finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.2, 2.0);

  auto check_grad = [&](const Model& m, int points, double tol) {
    std::vector<MExprPtr> jac;
    for (size_t i = 0; i < m.params.size(); ++i) jac.push_back(differentiate(m, i));
    for (int t = 0; t < points; ++t) {
      std::vector<double> p(m.params.size()), f(m.features.size());
      for (auto& v : p) v = dist(rng);
      for (auto& v : f) v = dist(rng);
      for (size_t i = 0; i < p.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::fabs(p[i]));
        std::vector<double> hi = p, lo = p;
        hi[i] += h;
        lo[i] -= h;
        double fd = (g(m, hi, f) - g(m, lo, f)) / (2 * h);
        std::vector<double> pf = p, ff = f;
        double analytic = 0.0;
        {
          // evaluate the derivative expression
          struct Ctx {
            const std::vector<double>*p, *f;
          };
          std::function<double(const MExprPtr&)> ev = [&](const MExprPtr& e) -> double {
            switch (e->kind) {
              case MExpr::Kind::number: return e->number;
              case MExpr::Kind::param: return pf[e->index];
              case MExpr::Kind::feature: return ff[e->index];
              case MExpr::Kind::add: return ev(e->lhs) + ev(e->rhs);
              case MExpr::Kind::sub: return ev(e->lhs) - ev(e->rhs);
              case MExpr::Kind::mul: return ev(e->lhs) * ev(e->rhs);
              case MExpr::Kind::div: return ev(e->lhs) / ev(e->rhs);
              case MExpr::Kind::tanh_fn: return std::tanh(ev(e->arg));
            }
            return 0;
          };
          analytic = ev(jac[i]);
        }
        double scale = std::max({1.0, std::fabs(fd), std::fabs(analytic)});
        CHECK(std::fabs(fd - analytic) / scale < tol);
      }
    }
  };

  CHECK(differentiate(parse_model("f_exec_wall_time_d", "p_a * f_thread_groups"), 0)->kind ==
        MExpr::Kind::feature);  // d(p*f)/dp = f
  check_grad(parse_model("f_exec_wall_time_d", "sstep(p_edge * f_thread_groups; p_edge)"), 20,
             1e-6);
  check_grad(overlap_model(), 20, 1e-5);
}

TEST_CASE("scale_features_by_output") {
  CalibrationProblem p;
  p.rows.push_back(CalibrationRow{{10.0, 4.0}, 2.0});
  CalibrationProblem s = scale_features_by_output(p);
  CHECK(s.scaled);
  CHECK(s.rows[0].features == std::vector<double>{5.0, 2.0});
  CHECK(s.rows[0].output == 1.0);
  // Idempotent only on unit outputs.
  CalibrationProblem ss = scale_features_by_output(s);
  CHECK(ss.rows[0].features == s.rows[0].features);

  CalibrationProblem zero;
  zero.rows.push_back(CalibrationRow{{1.0}, 0.0});
  CHECK_THROWS_AS(scale_features_by_output(zero), EvalError);
}

TEST_CASE("exact line fit") {
  Model m = parse_model("f_exec_wall_time_d", "p_a * f_thread_groups");
  CalibrationProblem prob;
  prob.rows.push_back(CalibrationRow{{1.0}, 2.0});
  prob.rows.push_back(CalibrationRow{{2.0}, 4.0});
  CalibratedModel cm = fit_model(m, prob);
  CHECK(cm.param_values.at("p_a") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cm.residual_norm < 1e-12);
  CHECK(cm.converged);
}

TEST_CASE("noiseless linear recovery and OLS equivalence") {
  // Three-parameter linear model on 20 noiseless rows.
  Model m = parse_model("f_exec_wall_time_d",
                        "p_a * f_op_float32_madd + p_b * f_thread_groups + p_c * "
                        "f_sync_kernel_launch");
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(1.0, 100.0);
  const double pa = 3.25e-9, pb = 1.5e-6, pc = 2e-4;
  CalibrationProblem prob;
  for (int r = 0; r < 20; ++r) {
    double f0 = dist(rng) * 1e6, f1 = dist(rng) * 10, f2 = 1.0;
    prob.rows.push_back(CalibrationRow{{f0, f1, f2}, pa * f0 + pb * f1 + pc * f2});
  }
  CalibrationProblem scaled = scale_features_by_output(prob);
  CalibratedModel cm = fit_model(m, scaled);
  CHECK(std::fabs(cm.param_values.at("p_a") - pa) / pa < 1e-3);
  CHECK(std::fabs(cm.param_values.at("p_b") - pb) / pb < 1e-3);
  CHECK(std::fabs(cm.param_values.at("p_c") - pc) / pc < 1e-3);

  // LM on a linear model reduces to ordinary least squares: perturb outputs
  // and compare against the normal-equations solution.
  CalibrationProblem noisy = prob;
  std::normal_distribution<double> noise(0.0, 1e-6);
  for (auto& row : noisy.rows) row.output *= (1.0 + noise(rng));
  CalibratedModel lm = fit_model(m, noisy);
  // Normal equations.
  double ata[3][3] = {}, atb[3] = {};
  for (const auto& row : noisy.rows) {
    for (int i = 0; i < 3; ++i) {
      atb[i] += row.features[i] * row.output;
      for (int j = 0; j < 3; ++j) ata[i][j] += row.features[i] * row.features[j];
    }
  }
  // Solve 3x3 by Cramer's rule.
  auto det3 = [](double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  double d = det3(ata);
  std::vector<double> ols(3);
  for (int c = 0; c < 3; ++c) {
    double tmp[3][3];
    std::memcpy(tmp, ata, sizeof tmp);
    for (int r = 0; r < 3; ++r) tmp[r][c] = atb[r];
    ols[c] = det3(tmp) / d;
  }
  CHECK(std::fabs(lm.param_values.at("p_a") - ols[0]) / std::fabs(ols[0]) < 1e-8);
  CHECK(std::fabs(lm.param_values.at("p_b") - ols[1]) / std::fabs(ols[1]) < 1e-8);
  CHECK(std::fabs(lm.param_values.at("p_c") - ols[2]) / std::fabs(ols[2]) < 1e-8);
}

TEST_CASE("residual definition and diagnostics are self-consistent") {
  Model m = parse_model("f_exec_wall_time_d", "p_a * f_thread_groups");
  CalibrationProblem prob;
  prob.rows.push_back(CalibrationRow{{1.0}, 3.0});
  prob.rows.push_back(CalibrationRow{{1.0}, 5.0});  // inconsistent rows: residual nonzero
  CalibratedModel cm = fit_model(m, prob);
  double expected = 0.0;
  for (const auto& row : prob.rows) {
    double r = row.output - g(m, {cm.param_values.at("p_a")}, row.features);
    expected += r * r;
  }
  CHECK(cm.residual_norm == doctest::Approx(std::sqrt(expected)).epsilon(1e-12));
}

TEST_CASE("rank deficiency is diagnosed") {
  Model m = parse_model("f_exec_wall_time_d", "p_a * f_thread_groups + p_b");
  CalibrationProblem prob;
  prob.rows.push_back(CalibrationRow{{1.0}, 2.0});
  try {
    fit_model(m, prob);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(std::string(e.what()).find("rank deficiency") != std::string::npos);
  }
}

TEST_CASE("negative cost parameters produce warnings; nonnegative mode clamps") {
  Model m = parse_model("f_exec_wall_time_d", "p_a * f_thread_groups + p_b");
  CalibrationProblem prob;
  for (int i = 1; i <= 4; ++i)
    prob.rows.push_back(CalibrationRow{{static_cast<double>(i)}, 10.0 - 2.0 * i});
  CalibratedModel cm = fit_model(m, prob);
  CHECK(cm.param_values.at("p_a") == doctest::Approx(-2.0));
  REQUIRE(!cm.warnings.empty());
  CHECK(cm.warnings[0].find("p_a") != std::string::npos);

  FitOptions opts;
  opts.nonnegative = true;
  CalibratedModel clamped = fit_model(m, prob, opts);
  CHECK(clamped.param_values.at("p_a") >= 0.0);
}

TEST_CASE("fit determinism is bit-exact") {
  Model m = overlap_model();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  CalibrationProblem prob;
  for (int r = 0; r < 24; ++r) {
    double fg = dist(rng) * 10, fl = dist(rng) * 10;
    double cg = 3e-3 * fg, co = 1e-3 * fl;
    prob.rows.push_back(CalibrationRow{{1.0, fg, fl}, 1e-4 + std::max(cg, co)});
  }
  CalibratedModel a = fit_model(m, prob);
  CalibratedModel b = fit_model(m, prob);
  REQUIRE(a.param_values.size() == b.param_values.size());
  for (const auto& [k, v] : a.param_values) {
    double vb = b.param_values.at(k);
    CHECK(std::memcmp(&v, &vb, sizeof(double)) == 0);
  }
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("calibrated model JSON round trip") {
  Model m = parse_model("f_exec_wall_time_d", "p_a * f_thread_groups + p_b");
  CalibrationProblem prob;
  prob.rows.push_back(CalibrationRow{{1.0}, 3.0});
  prob.rows.push_back(CalibrationRow{{2.0}, 5.0});
  CalibratedModel cm = fit_model(m, prob);
  cm.measurement_hash = "0123456789abcdef";
  CalibratedModel again = CalibratedModel::from_json_string(cm.to_json_string());
  CHECK(again.param_values == cm.param_values);
  CHECK(again.residual_norm == cm.residual_norm);
  CHECK(again.iterations == cm.iterations);
  CHECK(again.converged == cm.converged);
  CHECK(again.measurement_hash == cm.measurement_hash);
  CHECK(again.model.expr_src == m.expr_src);
}

TEST_CASE("model file format") {
  Model m = parse_model_file("# comment\nf_exec_wall_time_synthetic_d\np_a * f_thread_groups +\np_b\n");
  CHECK(m.output_id == "f_exec_wall_time_synthetic_d");
  CHECK(m.params == std::vector<std::string>{"p_a", "p_b"});
  CHECK_THROWS_AS(parse_model_file("f_exec_wall_time_d\n"), EvalError);
}
