#include "perfseer/kernel_json.hpp"

namespace perfseer {

using nlohmann::json;

namespace {

std::string rational_str(const Rational& r) {
  if (is_integer(r)) return BigInt(numerator(r)).str();
  return BigInt(numerator(r)).str() + "/" + BigInt(denominator(r)).str();
}

Rational rational_from_str(const std::string& s) {
  size_t slash = s.find('/');
  if (slash == std::string::npos) return Rational(BigInt(s));
  return Rational(BigInt(s.substr(0, slash))) / Rational(BigInt(s.substr(slash + 1)));
}

json expr_to_json(const ExprPtr& e);

json access_to_json(const Access& a) {
  json j;
  j["array"] = a.array;
  if (!a.tag.empty()) j["tag"] = a.tag;
  json subs = json::array();
  for (const auto& s : a.subs) subs.push_back(affine_to_json(s));
  j["subs"] = std::move(subs);
  return j;
}

Access access_from_json(const json& j) {
  Access a;
  a.array = j.at("array").get<std::string>();
  if (j.contains("tag")) a.tag = j.at("tag").get<std::string>();
  for (const auto& s : j.at("subs")) a.subs.push_back(affine_from_json(s));
  return a;
}

json expr_to_json(const ExprPtr& e) {
  json j;
  switch (e->kind) {
    case Expr::Kind::number:
      j["kind"] = "number";
      j["value"] = rational_str(e->number);
      j["float"] = e->number_is_float;
      break;
    case Expr::Kind::scalar_ref:
      j["kind"] = "scalar";
      j["name"] = e->name;
      break;
    case Expr::Kind::access:
      j["kind"] = "access";
      j["access"] = access_to_json(e->access);
      break;
    case Expr::Kind::binary:
      j["kind"] = "binary";
      j["op"] = binop_str(e->op);
      j["lhs"] = expr_to_json(e->lhs);
      j["rhs"] = expr_to_json(e->rhs);
      break;
    case Expr::Kind::reduction:
      j["kind"] = "sum";
      j["iname"] = e->red_iname;
      j["body"] = expr_to_json(e->body);
      break;
  }
  return j;
}

ExprPtr expr_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "number")
    return Expr::make_number(rational_from_str(j.at("value").get<std::string>()),
                             j.at("float").get<bool>());
  if (kind == "scalar") return Expr::make_scalar(j.at("name").get<std::string>());
  if (kind == "access") return Expr::make_access(access_from_json(j.at("access")));
  if (kind == "binary") {
    const std::string op = j.at("op").get<std::string>();
    BinOp b;
    if (op == "+") b = BinOp::add;
    else if (op == "-") b = BinOp::sub;
    else if (op == "*") b = BinOp::mul;
    else if (op == "/") b = BinOp::div;
    else throw SemanticError("unknown operator '" + op + "' in kernel JSON");
    return Expr::make_binary(b, expr_from_json(j.at("lhs")), expr_from_json(j.at("rhs")));
  }
  if (kind == "sum")
    return Expr::make_reduction(j.at("iname").get<std::string>(), expr_from_json(j.at("body")));
  throw SemanticError("unknown expression kind '" + kind + "' in kernel JSON");
}

}  // namespace

json poly_to_json(const Poly& p) {
  json terms = json::array();
  for (const auto& [m, c] : p.terms()) {
    json t;
    t["coef"] = rational_str(c);
    json exps = json::object();
    for (const auto& [s, e] : m.exps) exps[s] = e;
    t["exps"] = std::move(exps);
    terms.push_back(std::move(t));
  }
  return terms;
}

Poly poly_from_json(const json& j) {
  Poly p;
  for (const auto& t : j) {
    Poly term = Poly::constant(rational_from_str(t.at("coef").get<std::string>()));
    for (const auto& [s, e] : t.at("exps").items())
      term = term * Poly::symbol(s).pow(e.get<unsigned>());
    p += term;
  }
  return p;
}

json affine_to_json(const AffineExpr& a) {
  json j;
  json lin = json::object();
  for (const auto& [s, c] : a.lin) lin[s] = poly_to_json(c);
  j["lin"] = std::move(lin);
  j["off"] = poly_to_json(a.off);
  return j;
}

AffineExpr affine_from_json(const json& j) {
  AffineExpr a;
  for (const auto& [s, c] : j.at("lin").items()) a.lin[s] = poly_from_json(c);
  a.off = poly_from_json(j.at("off"));
  return a;
}

json kernel_to_json(const Kernel& k) {
  json j;
  j["schema"] = "perfseer-kernel/1";
  j["name"] = k.name;

  json inames = json::array();
  for (const auto& iname : k.domain.inames) {
    json ji;
    ji["name"] = iname;
    const Bound& b = k.domain.bound(iname);
    ji["lo"] = affine_to_json(b.lo);
    ji["hi"] = affine_to_json(b.hi);
    InameTag tag = k.tag_of(iname);
    if (tag.is_parallel()) ji["tag"] = tag.str();
    inames.push_back(std::move(ji));
  }
  j["inames"] = std::move(inames);
  j["parameters"] = std::vector<std::string>(k.domain.parameters.begin(),
                                             k.domain.parameters.end());

  json assumptions = json::array();
  for (const auto& a : k.assumptions) {
    json ja;
    ja["kind"] = a.kind == Assumption::Kind::divisible ? "divisible" : "lower_bound";
    ja["param"] = a.param;
    ja["value"] = a.value;
    assumptions.push_back(std::move(ja));
  }
  j["assumptions"] = std::move(assumptions);

  json args = json::array();
  for (const auto& a : k.args) {
    json ja;
    ja["name"] = a.name;
    ja["dtype"] = dtype_str(a.dtype);
    ja["space"] = memspace_str(a.space);
    json shape = json::array();
    for (const auto& s : a.shape) shape.push_back(affine_to_json(s));
    ja["shape"] = std::move(shape);
    args.push_back(std::move(ja));
  }
  j["args"] = std::move(args);

  json statements = json::array();
  for (const auto& s : k.statements) {
    json js;
    js["id"] = s.id;
    js["within"] = std::vector<std::string>(s.within.begin(), s.within.end());
    js["depends_on"] = std::vector<std::string>(s.depends_on.begin(), s.depends_on.end());
    if (s.is_barrier) {
      js["barrier"] = true;
    } else {
      js["lhs"] = access_to_json(s.lhs);
      js["rhs"] = expr_to_json(s.rhs);
      if (s.harness) js["harness"] = true;
    }
    statements.push_back(std::move(js));
  }
  j["statements"] = std::move(statements);
  if (k.single_work_item) j["single_work_item"] = true;
  return j;
}

Kernel kernel_from_json(const json& j) {
  if (j.at("schema").get<std::string>() != "perfseer-kernel/1")
    throw SemanticError("unsupported kernel schema '" + j.at("schema").get<std::string>() + "'");
  Kernel k;
  k.name = j.value("name", "kernel");
  for (const auto& ji : j.at("inames")) {
    std::string name = ji.at("name").get<std::string>();
    k.domain.inames.push_back(name);
    k.domain.bounds[name] = Bound{affine_from_json(ji.at("lo")), affine_from_json(ji.at("hi"))};
    if (ji.contains("tag")) k.iname_tags[name] = iname_tag_from_str(ji.at("tag").get<std::string>());
  }
  for (const auto& p : j.at("parameters")) k.domain.parameters.insert(p.get<std::string>());
  for (const auto& ja : j.at("assumptions")) {
    Assumption a;
    a.kind = ja.at("kind").get<std::string>() == "divisible" ? Assumption::Kind::divisible
                                                             : Assumption::Kind::lower_bound;
    a.param = ja.at("param").get<std::string>();
    a.value = ja.at("value").get<long long>();
    k.assumptions.push_back(a);
  }
  for (const auto& ja : j.at("args")) {
    ArgDecl a;
    a.name = ja.at("name").get<std::string>();
    a.dtype = dtype_from_str(ja.at("dtype").get<std::string>());
    a.space = memspace_from_str(ja.at("space").get<std::string>());
    for (const auto& s : ja.at("shape")) a.shape.push_back(affine_from_json(s));
    k.args.push_back(std::move(a));
  }
  for (const auto& js : j.at("statements")) {
    Statement s;
    s.id = js.at("id").get<std::string>();
    for (const auto& w : js.at("within")) s.within.insert(w.get<std::string>());
    for (const auto& d : js.at("depends_on")) s.depends_on.insert(d.get<std::string>());
    if (js.value("barrier", false)) {
      s.is_barrier = true;
    } else {
      s.lhs = access_from_json(js.at("lhs"));
      s.rhs = expr_from_json(js.at("rhs"));
      s.harness = js.value("harness", false);
    }
    k.statements.push_back(std::move(s));
  }
  k.single_work_item = j.value("single_work_item", false);
  validate(k);
  return k;
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t kernel_hash(const Kernel& k) { return fnv1a(kernel_to_json(k).dump()); }

}  // namespace perfseer
