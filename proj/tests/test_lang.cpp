#include "doctest.h"

#include <functional>
#include <random>
#include <set>

#include "perfseer/lang.hpp"
#include "support.hpp"

using namespace perfseer;

TEST_CASE("domain parsing with chained comparisons") {
  LoopDomain d = parse_domain("{[i,j,k]: 0<=i,j,k<n}");
  REQUIRE(d.inames == std::vector<std::string>{"i", "j", "k"});
  CHECK(d.parameters == std::set<std::string>{"n"});
  for (const auto& iname : d.inames) {
    CHECK(d.bound(iname).lo == AffineExpr::constant(0));
    CHECK(d.bound(iname).hi == AffineExpr::param("n") - AffineExpr::constant(1));
  }
}

TEST_CASE("one-point domain") {
  LoopDomain d = parse_domain("{[i]: 0<=i<1}");
  CHECK(d.bound("i").lo == AffineExpr::constant(0));
  CHECK(d.bound("i").hi == AffineExpr::constant(0));
}

TEST_CASE("triangular domain bounds") {
  LoopDomain d = parse_domain("{[i,j]: p<=i<n and p<=j<i+1}");
  CHECK(d.bound("i").lo == AffineExpr::param("p"));
  CHECK(d.bound("i").hi == AffineExpr::param("n") - AffineExpr::constant(1));
  CHECK(d.bound("j").lo == AffineExpr::param("p"));
  CHECK(d.bound("j").hi == AffineExpr::index("i"));
}

TEST_CASE("domain errors are positioned, never aborts") {
  CHECK_THROWS_AS(parse_domain("{[i]: }"), ParseError);
  CHECK_THROWS_AS(parse_domain("{[i,j]: 0<=i<n}"), ParseError);  // j unconstrained
  // Nesting: j is outermost, so "j < i" can only bound the inner i, leaving
  // j without an upper bound.
  CHECK_THROWS_AS(parse_domain("{[j,i]: 0<=j<i and 0<=i<n}"), ParseError);
  CHECK_THROWS_AS(parse_domain("{[i]: 0<=2*i<n}"), ParseError);  // non-unit coefficient
  CHECK_THROWS_AS(parse_domain("{[i]: 0<=i"), ParseError);
  try {
    parse_domain("{[i]: 0<=i<%}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.col > 1);
  }
}

TEST_CASE("instruction parsing: matmul with reduction") {
  LoopDomain d = parse_domain("{[i,j,k]: 0<=i,j,k<n}");
  Statement s = parse_instruction("c[i,j] = sum(k, a[i,k]*b[k,j])", d, "s0");
  CHECK(s.lhs.array == "c");
  CHECK(s.within == std::set<std::string>{"i", "j"});
  REQUIRE(s.rhs->kind == Expr::Kind::reduction);
  CHECK(s.rhs->red_iname == "k");
  CHECK(s.rhs->body->kind == Expr::Kind::binary);
  CHECK(s.rhs->body->op == BinOp::mul);
}

TEST_CASE("instruction parsing: tags and copies") {
  LoopDomain d = parse_domain("{[i,j,k]: 0<=i,j,k<n}");
  Statement s = parse_instruction("c[i,j] = sum(k, a$aLD[i,k]*b$bLD[k,j])", d, "s0");
  CHECK(s.rhs->body->lhs->access.tag == "aLD");
  CHECK(s.rhs->body->rhs->access.tag == "bLD");

  Statement copy = parse_instruction("y[i] = x[i]", d, "s1");
  CHECK(copy.rhs->kind == Expr::Kind::access);
  CHECK(copy.within == std::set<std::string>{"i"});
}

TEST_CASE("instruction errors") {
  LoopDomain d = parse_domain("{[i]: 0<=i<n}");
  CHECK_THROWS_AS(parse_instruction("y[i] = sum(q, x[i])", d, "s"), ParseError);  // unknown iname
  CHECK_THROWS_AS(parse_instruction("y[i] = x[i*i]", d, "s"), Error);             // non-affine
  CHECK_THROWS_AS(parse_instruction("y[i] = x[i] / 0", d, "s"), ParseError);
  CHECK_THROWS_AS(parse_instruction("y[i] = x[i] / z", d, "s"), ParseError);  // non-literal divisor
  CHECK_THROWS_AS(parse_instruction("y[i] = ", d, "s"), ParseError);
}

TEST_CASE("make_kernel on the square matmul source") {
  Kernel k = make_kernel("{[i,j,k]: 0<=i,j,k<n}", {"c[i,j] = sum(k, a[i,k]*b[k,j])"},
                         {{"a", Dtype::float32, {"n", "n"}},
                          {"b", Dtype::float32, {"n", "n"}},
                          {"c", Dtype::float32, {"n", "n"}}});
  CHECK(k.statements.size() == 1);
  CHECK(k.domain.inames.size() == 3);
  CHECK(k.args.size() == 3);
  CHECK(k.iname_tags.empty());
  CHECK(k.assumptions.empty());
}

TEST_CASE("make_kernel: empty instruction list is a valid kernel") {
  Kernel k = make_kernel("{[i]: 0<=i<n}", {}, {});
  CHECK(k.statements.empty());
}

TEST_CASE("make_kernel: five-point stencil source") {
  Kernel k = make_kernel(
      "{[i,j]: 0<=i,j<n}",
      {"res[i,j] = u[i,j+1] + u[i+1,j] - 4*u[i+1,j+1] + u[i+1,j+2] + u[i+2,j+1]"},
      {{"u", Dtype::float32, {"n + 2", "n + 2"}}, {"res", Dtype::float32, {"n", "n"}}});
  REQUIRE(k.statements.size() == 1);
  int loads = 0, addsub = 0, mul = 0;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
    if (!e) return;
    if (e->kind == Expr::Kind::access) ++loads;
    if (e->kind == Expr::Kind::binary) {
      if (e->op == BinOp::mul) ++mul;
      if (e->op == BinOp::add || e->op == BinOp::sub) ++addsub;
      walk(e->lhs);
      walk(e->rhs);
    }
    if (e->kind == Expr::Kind::reduction) walk(e->body);
  };
  walk(k.statements[0].rhs);
  CHECK(loads == 5);
  CHECK(addsub == 4);
  CHECK(mul == 1);
}

TEST_CASE("make_kernel type errors") {
  CHECK_THROWS_AS(make_kernel("{[i]: 0<=i<n}", {"y[i] = x[i] + z[i]"},
                              {{"x", Dtype::float32, {"n"}},
                               {"y", Dtype::float32, {"n"}},
                               {"z", Dtype::float64, {"n"}}}),
                  SemanticError);
  // Duplicate access tags within one kernel.
  CHECK_THROWS_AS(make_kernel("{[i]: 0<=i<n}", {"y[i] = x$t[i] + x$t[i+1]"},
                              {{"x", Dtype::float32, {"n + 2"}}, {"y", Dtype::float32, {"n"}}}),
                  SemanticError);
}

TEST_CASE("pretty-print round trip is structurally identical") {
  std::vector<Kernel> kernels;
  kernels.push_back(make_kernel("{[i,j,k]: 0<=i,j,k<n}",
                                {"c[i,j] = sum(k, a$aLD[i,k]*b$bLD[k,j])"},
                                {{"a", Dtype::float32, {"n", "n"}},
                                 {"b", Dtype::float32, {"n", "n"}},
                                 {"c", Dtype::float32, {"n", "n"}}}));
  kernels.push_back(make_kernel("{[i,j]: p<=i<n and p<=j<i+1}", {"y[i] = x[i] / 4 + 1.5"},
                                {{"x", Dtype::float64, {"n"}}, {"y", Dtype::float64, {"n"}}}));
  kernels.push_back(make_kernel("{[i]: 0<=i<n}", {"acc = x[i] + 2", "y[i] = acc * x[i]"},
                                {{"x", Dtype::float32, {"n"}}, {"y", Dtype::float32, {"n"}}}));
  for (const auto& k : kernels) {
    std::string text = pretty_print(k);
    Kernel again = parse_kernel_text(text, k.name);
    CHECK(again == k);
    CHECK(pretty_print(again) == text);
  }
}

TEST_CASE("sum desugaring preserves accesses and operator kinds") {
  LoopDomain d = parse_domain("{[i,k]: 0<=i,k<n}");
  Statement with_sum = parse_instruction("y[i] = sum(k, a[i]*b[k] + a[k])", d, "s0");
  std::multiset<std::string> accesses;
  std::multiset<std::string> ops;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& e) {
    if (e->kind == Expr::Kind::access) accesses.insert(e->access.array);
    if (e->kind == Expr::Kind::binary) {
      ops.insert(binop_str(e->op));
      walk(e->lhs);
      walk(e->rhs);
    }
    if (e->kind == Expr::Kind::reduction) walk(e->body);
  };
  walk(with_sum.rhs);
  CHECK(accesses == std::multiset<std::string>{"a", "a", "b"});
  CHECK(ops == std::multiset<std::string>{"*", "+"});
}

TEST_CASE("parser totality: mutated inputs never abort") {
  std::mt19937_64 rng(7);
  const std::string base =
      "{[i,j]: 0<=i,j<n}\nc[i,j] = sum(k, a[i,k]*b[k,j])\narg a float32 [n, n]\n";
  int parsed = 0, rejected = 0;
  for (int t = 0; t < 500; ++t) {
    std::string text = base;
    int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      size_t pos = rng() % text.size();
      char c = static_cast<char>(32 + rng() % 95);
      if (rng() % 2)
        text[pos] = c;
      else
        text.insert(pos, 1, c);
    }
    try {
      parse_kernel_text(text);
      ++parsed;
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(parsed + rejected == 500);
  CHECK(rejected > 0);
}
