#include "perfseer/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace perfseer {

MExprPtr MExpr::make_number(double v) {
  auto e = std::make_shared<MExpr>();
  e->kind = Kind::number;
  e->number = v;
  return e;
}
MExprPtr MExpr::make_param(size_t i) {
  auto e = std::make_shared<MExpr>();
  e->kind = Kind::param;
  e->index = i;
  return e;
}
MExprPtr MExpr::make_feature(size_t i) {
  auto e = std::make_shared<MExpr>();
  e->kind = Kind::feature;
  e->index = i;
  return e;
}
MExprPtr MExpr::make_binary(Kind k, MExprPtr l, MExprPtr r) {
  auto e = std::make_shared<MExpr>();
  e->kind = k;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}
MExprPtr MExpr::make_tanh(MExprPtr a) {
  auto e = std::make_shared<MExpr>();
  e->kind = Kind::tanh_fn;
  e->arg = std::move(a);
  return e;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace {

struct ModelParser {
  const std::string& src;
  size_t pos = 0;
  Model* model;
  std::map<std::string, size_t> param_index;
  std::map<std::string, size_t> feature_index;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(1, pos + 1, msg);
  }
  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool accept(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c, const std::string& what) {
    if (!accept(c)) fail("expected " + what);
  }
  bool peek_ident_start() {
    skip_ws();
    return pos < src.size() &&
           (std::isalpha(static_cast<unsigned char>(src[pos])) || src[pos] == '_');
  }
  // Identifiers extend over feature-id syntax: ':' always continues the
  // token, '{...}' constraint blocks are consumed whole, '<'/'>' continue
  // directly after ':' (afr relations), and '-' continues inside a tag field
  // (tags like mm-PF-a). Subtraction next to a tag-based feature id
  // therefore needs surrounding whitespace.
  std::string take_ident() {
    skip_ws();
    size_t start = pos;
    while (pos < src.size()) {
      char c = src[pos];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':') {
        ++pos;
        continue;
      }
      if (c == '{') {
        while (pos < src.size() && src[pos] != '}') ++pos;
        if (pos == src.size()) fail("unclosed '{' in feature id");
        ++pos;
        continue;
      }
      if ((c == '<' || c == '>') && pos > start && src[pos - 1] == ':') {
        ++pos;
        continue;
      }
      if (c == '-' && in_tag_field(start)) {
        ++pos;
        continue;
      }
      break;
    }
    if (pos == start) fail("expected identifier");
    return src.substr(start, pos - start);
  }
  bool in_tag_field(size_t start) const {
    return pos > start && src.substr(start, pos - start).find("tag:") != std::string::npos;
  }

  MExprPtr parse_expr() {
    MExprPtr e = parse_term();
    for (;;) {
      skip_ws();
      if (accept('+'))
        e = MExpr::make_binary(MExpr::Kind::add, e, parse_term());
      else if (accept('-'))
        e = MExpr::make_binary(MExpr::Kind::sub, e, parse_term());
      else
        return e;
    }
  }
  MExprPtr parse_term() {
    MExprPtr e = parse_factor();
    for (;;) {
      skip_ws();
      if (accept('*'))
        e = MExpr::make_binary(MExpr::Kind::mul, e, parse_factor());
      else if (accept('/'))
        e = MExpr::make_binary(MExpr::Kind::div, e, parse_factor());
      else
        return e;
    }
  }
  MExprPtr parse_factor() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of model expression");
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos;
      while (pos < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.' ||
              src[pos] == 'e' || src[pos] == 'E' ||
              ((src[pos] == '+' || src[pos] == '-') && pos > start &&
               (src[pos - 1] == 'e' || src[pos - 1] == 'E'))))
        ++pos;
      return MExpr::make_number(std::stod(src.substr(start, pos - start)));
    }
    if (c == '-') {
      ++pos;
      return MExpr::make_binary(MExpr::Kind::sub, MExpr::make_number(0.0), parse_factor());
    }
    if (c == '(') {
      ++pos;
      MExprPtr e = parse_expr();
      expect(')', "')'");
      return e;
    }
    if (peek_ident_start()) {
      // tanh(...) and sstep(x; p_edge) are the only call forms.
      if (src.compare(pos, 5, "tanh(") == 0) {
        pos += 5;
        MExprPtr a = parse_expr();
        expect(')', "')' closing tanh");
        return MExpr::make_tanh(a);
      }
      if (src.compare(pos, 6, "sstep(") == 0) {
        pos += 6;
        MExprPtr x = parse_expr();
        expect(';', "';' between sstep argument and edge parameter");
        skip_ws();
        std::string pname = take_ident();
        if (pname.rfind("p_", 0) != 0) fail("sstep edge must be a parameter (p_...)");
        expect(')', "')' closing sstep");
        MExprPtr edge = MExpr::make_param(param_id(pname));
        // (tanh(p_edge*x) + 1) / 2
        return MExpr::make_binary(
            MExpr::Kind::div,
            MExpr::make_binary(MExpr::Kind::add,
                               MExpr::make_tanh(MExpr::make_binary(MExpr::Kind::mul, edge, x)),
                               MExpr::make_number(1.0)),
            MExpr::make_number(2.0));
      }
      std::string name = take_ident();
      if (name.rfind("p_", 0) == 0) return MExpr::make_param(param_id(name));
      if (name.rfind("f_", 0) == 0) return MExpr::make_feature(feature_id(name));
      fail("identifier '" + name + "' must start with p_ or f_");
    }
    fail(std::string("unexpected character '") + c + "' in model expression");
  }

  size_t param_id(const std::string& name) {
    auto it = param_index.find(name);
    if (it != param_index.end()) return it->second;
    size_t idx = model->params.size();
    model->params.push_back(name);
    param_index[name] = idx;
    return idx;
  }
  size_t feature_id(const std::string& name) {
    auto it = feature_index.find(name);
    if (it != feature_index.end()) return it->second;
    FeatureSpec spec = parse_feature(name);  // validates the id
    if (name == model->output_id)
      throw EvalError("output feature may not appear in the model expression");
    size_t idx = model->features.size();
    model->features.push_back(std::move(spec));
    model->feature_ids.push_back(name);
    feature_index[name] = idx;
    return idx;
  }
};

}  // namespace

Model parse_model(const std::string& output_id, const std::string& expr_src) {
  Model m;
  m.output_id = output_id;
  m.output = parse_feature(output_id);
  if (m.output.cls != FeatureSpec::Class::wall_time)
    throw EvalError("model output must be a wall-time feature, got " + output_id);
  m.expr_src = expr_src;
  ModelParser p{expr_src, 0, &m, {}, {}};
  m.expr = p.parse_expr();
  p.skip_ws();
  if (p.pos != expr_src.size()) p.fail("trailing input after model expression");
  if (m.params.empty()) throw EvalError("model has an empty parameter set");
  return m;
}

namespace {

double eval_expr(const MExprPtr& e, const std::vector<double>& params,
                 const std::vector<double>& features) {
  switch (e->kind) {
    case MExpr::Kind::number: return e->number;
    case MExpr::Kind::param: return params[e->index];
    case MExpr::Kind::feature: return features[e->index];
    case MExpr::Kind::add: return eval_expr(e->lhs, params, features) +
                                  eval_expr(e->rhs, params, features);
    case MExpr::Kind::sub: return eval_expr(e->lhs, params, features) -
                                  eval_expr(e->rhs, params, features);
    case MExpr::Kind::mul: return eval_expr(e->lhs, params, features) *
                                  eval_expr(e->rhs, params, features);
    case MExpr::Kind::div: return eval_expr(e->lhs, params, features) /
                                  eval_expr(e->rhs, params, features);
    case MExpr::Kind::tanh_fn: return std::tanh(eval_expr(e->arg, params, features));
  }
  return 0.0;
}

bool is_zero_node(const MExprPtr& e) {
  return e->kind == MExpr::Kind::number && e->number == 0.0;
}
bool is_one_node(const MExprPtr& e) {
  return e->kind == MExpr::Kind::number && e->number == 1.0;
}

MExprPtr simplified_binary(MExpr::Kind k, MExprPtr l, MExprPtr r) {
  switch (k) {
    case MExpr::Kind::add:
      if (is_zero_node(l)) return r;
      if (is_zero_node(r)) return l;
      break;
    case MExpr::Kind::sub:
      if (is_zero_node(r)) return l;
      break;
    case MExpr::Kind::mul:
      if (is_zero_node(l) || is_zero_node(r)) return MExpr::make_number(0.0);
      if (is_one_node(l)) return r;
      if (is_one_node(r)) return l;
      break;
    case MExpr::Kind::div:
      if (is_zero_node(l)) return MExpr::make_number(0.0);
      if (is_one_node(r)) return l;
      break;
    default:
      break;
  }
  return MExpr::make_binary(k, std::move(l), std::move(r));
}

// d/dp with features treated as constants.
MExprPtr diff_expr(const MExprPtr& e, size_t param) {
  switch (e->kind) {
    case MExpr::Kind::number:
    case MExpr::Kind::feature:
      return MExpr::make_number(0.0);
    case MExpr::Kind::param:
      return MExpr::make_number(e->index == param ? 1.0 : 0.0);
    case MExpr::Kind::add:
      return simplified_binary(MExpr::Kind::add, diff_expr(e->lhs, param),
                               diff_expr(e->rhs, param));
    case MExpr::Kind::sub:
      return simplified_binary(MExpr::Kind::sub, diff_expr(e->lhs, param),
                               diff_expr(e->rhs, param));
    case MExpr::Kind::mul:
      return simplified_binary(
          MExpr::Kind::add,
          simplified_binary(MExpr::Kind::mul, diff_expr(e->lhs, param), e->rhs),
          simplified_binary(MExpr::Kind::mul, e->lhs, diff_expr(e->rhs, param)));
    case MExpr::Kind::div: {
      // (u/v)' = u'/v - u v'/v^2
      MExprPtr du = diff_expr(e->lhs, param);
      MExprPtr dv = diff_expr(e->rhs, param);
      MExprPtr t1 = simplified_binary(MExpr::Kind::div, du, e->rhs);
      MExprPtr t2 = simplified_binary(
          MExpr::Kind::div,
          simplified_binary(MExpr::Kind::mul, e->lhs, dv),
          simplified_binary(MExpr::Kind::mul, e->rhs, e->rhs));
      return simplified_binary(MExpr::Kind::sub, t1, t2);
    }
    case MExpr::Kind::tanh_fn: {
      // d tanh(u) = (1 - tanh(u)^2) du
      MExprPtr du = diff_expr(e->arg, param);
      if (is_zero_node(du)) return MExpr::make_number(0.0);
      MExprPtr t = MExpr::make_tanh(e->arg);
      MExprPtr sech2 = simplified_binary(
          MExpr::Kind::sub, MExpr::make_number(1.0),
          simplified_binary(MExpr::Kind::mul, t, t));
      return simplified_binary(MExpr::Kind::mul, sech2, du);
    }
  }
  return MExpr::make_number(0.0);
}

// tanh nodes replaced by the constant 1: a linear skeleton whose
// least-squares solution seeds the cost parameters.
MExprPtr drop_tanh(const MExprPtr& e) {
  switch (e->kind) {
    case MExpr::Kind::number:
    case MExpr::Kind::param:
    case MExpr::Kind::feature:
      return e;
    case MExpr::Kind::tanh_fn:
      return MExpr::make_number(1.0);
    default:
      return MExpr::make_binary(e->kind, drop_tanh(e->lhs), drop_tanh(e->rhs));
  }
}

void collect_param_positions(const MExprPtr& e, bool inside_tanh,
                             std::vector<bool>& outside, std::vector<bool>& inside) {
  switch (e->kind) {
    case MExpr::Kind::number:
    case MExpr::Kind::feature:
      return;
    case MExpr::Kind::param:
      (inside_tanh ? inside : outside)[e->index] = true;
      return;
    case MExpr::Kind::tanh_fn:
      collect_param_positions(e->arg, true, outside, inside);
      return;
    default:
      collect_param_positions(e->lhs, inside_tanh, outside, inside);
      collect_param_positions(e->rhs, inside_tanh, outside, inside);
      return;
  }
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& x) {
  size_t n = a.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (size_t col = n; col-- > 0;) {
    double acc = b[col];
    for (size_t c = col + 1; c < n; ++c) acc -= a[col][c] * x[c];
    x[col] = acc / a[col][col];
  }
  return true;
}

// Ordinary least squares min ||A x - b|| via normal equations.
bool least_squares(const std::vector<std::vector<double>>& rows_a, const std::vector<double>& b,
                   size_t ncols, std::vector<double>& x) {
  std::vector<std::vector<double>> ata(ncols, std::vector<double>(ncols, 0.0));
  std::vector<double> atb(ncols, 0.0);
  for (size_t r = 0; r < rows_a.size(); ++r) {
    for (size_t i = 0; i < ncols; ++i) {
      atb[i] += rows_a[r][i] * b[r];
      for (size_t j = 0; j < ncols; ++j) ata[i][j] += rows_a[r][i] * rows_a[r][j];
    }
  }
  return solve_dense(std::move(ata), std::move(atb), x);
}

}  // namespace

double eval_model(const Model& m, const std::vector<double>& params,
                  const std::vector<double>& features) {
  if (params.size() != m.params.size()) throw EvalError("parameter vector size mismatch");
  if (features.size() != m.features.size()) throw EvalError("feature vector size mismatch");
  return eval_expr(m.expr, params, features);
}

MExprPtr differentiate(const Model& m, size_t param_index) {
  if (param_index >= m.params.size()) throw EvalError("no such parameter");
  return diff_expr(m.expr, param_index);
}

CalibrationProblem scale_features_by_output(const CalibrationProblem& p) {
  CalibrationProblem out;
  out.scaled = true;
  out.rows.reserve(p.rows.size());
  for (const auto& row : p.rows) {
    if (row.output == 0.0)
      throw EvalError("scale_features_by_output: zero output row");
    CalibrationRow r;
    r.features.reserve(row.features.size());
    for (double f : row.features) r.features.push_back(f / row.output);
    r.output = 1.0;
    out.rows.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<double> initial_point(const Model& m, const CalibrationProblem& problem) {
  size_t np = m.params.size();
  std::vector<double> p0(np, 1.0);
  std::vector<bool> outside(np, false), inside(np, false);
  collect_param_positions(m.expr, false, outside, inside);

  // Parameters living only inside tanh arguments (step sharpness) start at 1;
  // the rest come from a linear least-squares fit of the tanh-free skeleton.
  MExprPtr skeleton = drop_tanh(m.expr);
  std::vector<size_t> cost_params;
  for (size_t i = 0; i < np; ++i)
    if (outside[i] || !inside[i]) cost_params.push_back(i);
  if (cost_params.empty() || problem.rows.empty()) return p0;

  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> zero(np, 0.0);
  for (const auto& row : problem.rows) {
    double base = eval_expr(skeleton, zero, row.features);
    std::vector<double> arow;
    bool linear = true;
    for (size_t idx : cost_params) {
      std::vector<double> unit = zero;
      unit[idx] = 1.0;
      double c1 = eval_expr(skeleton, unit, row.features) - base;
      unit[idx] = 2.0;
      double c2 = eval_expr(skeleton, unit, row.features) - base;
      if (!std::isfinite(c1) || std::fabs(c2 - 2.0 * c1) > 1e-9 * (std::fabs(c2) + 1.0)) {
        linear = false;
        break;
      }
      arow.push_back(c1);
    }
    if (!linear) return p0;  // fall back to all-ones
    a.push_back(std::move(arow));
    b.push_back(row.output - base);
  }
  std::vector<double> x;
  if (!least_squares(a, b, cost_params.size(), x)) return p0;
  for (size_t i = 0; i < cost_params.size(); ++i)
    if (std::isfinite(x[i])) p0[cost_params[i]] = x[i];
  return p0;
}

}  // namespace

CalibratedModel fit_model(const Model& m, const CalibrationProblem& problem,
                          const FitOptions& options) {
  size_t np = m.params.size();
  size_t nr = problem.rows.size();
  if (nr < np)
    throw EvalError("rank deficiency: " + std::to_string(nr) + " measurement rows for " +
                    std::to_string(np) + " parameters; the feature matrix cannot have full "
                    "column rank");

  std::vector<MExprPtr> jacobian;
  jacobian.reserve(np);
  for (size_t i = 0; i < np; ++i) jacobian.push_back(differentiate(m, i));

  std::vector<double> p = options.initial.empty() ? initial_point(m, problem) : options.initial;
  if (p.size() != np) throw EvalError("initial point size mismatch");
  if (options.nonnegative)
    for (double& v : p) v = std::max(v, 0.0);

  auto residuals = [&](const std::vector<double>& params, std::vector<double>& r) {
    r.resize(nr);
    for (size_t k = 0; k < nr; ++k)
      r[k] = problem.rows[k].output - eval_model(m, params, problem.rows[k].features);
  };

  std::vector<double> r;
  residuals(p, r);
  double cost = 0.0;
  for (double v : r) cost += v * v;
  if (!std::isfinite(cost)) throw EvalError("non-finite residual at the initial point");

  CalibratedModel out;
  out.model = m;
  double lambda = options.lambda0;
  bool converged = false;
  int iter = 0;

  for (; iter < options.max_iterations; ++iter) {
    // J[k][i] = d g_k / d p_i; residual r_k = t_k - g_k, so dr/dp = -J.
    std::vector<std::vector<double>> jac(nr, std::vector<double>(np));
    for (size_t k = 0; k < nr; ++k)
      for (size_t i = 0; i < np; ++i)
        jac[k][i] = eval_expr(jacobian[i], p, problem.rows[k].features);

    // gradient of 0.5*||r||^2 wrt p: -J^T r
    std::vector<double> grad(np, 0.0);
    for (size_t k = 0; k < nr; ++k)
      for (size_t i = 0; i < np; ++i) grad[i] -= jac[k][i] * r[k];
    double gmax = 0.0;
    for (double v : grad) gmax = std::max(gmax, std::fabs(v));
    if (gmax < options.grad_tol) {
      converged = true;
      break;
    }

    std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
    std::vector<double> jtr(np, 0.0);
    for (size_t k = 0; k < nr; ++k)
      for (size_t i = 0; i < np; ++i) {
        jtr[i] += jac[k][i] * r[k];
        for (size_t j = 0; j < np; ++j) jtj[i][j] += jac[k][i] * jac[k][j];
      }

    bool stepped = false;
    while (!stepped) {
      if (lambda > 1e100) throw EvalError("Levenberg-Marquardt damping overflow (divergence)");
      std::vector<std::vector<double>> damped = jtj;
      for (size_t i = 0; i < np; ++i) damped[i][i] += lambda;
      std::vector<double> delta;
      if (!solve_dense(damped, jtr, delta)) {
        lambda *= options.lambda_increase;
        continue;
      }
      std::vector<double> cand(np);
      for (size_t i = 0; i < np; ++i) cand[i] = p[i] + delta[i];
      if (options.nonnegative)
        for (double& v : cand) v = std::max(v, 0.0);

      std::vector<double> rc;
      residuals(cand, rc);
      double cand_cost = 0.0;
      for (double v : rc) cand_cost += v * v;

      if (std::isfinite(cand_cost) && cand_cost <= cost) {
        double step = 0.0, scale = 0.0;
        for (size_t i = 0; i < np; ++i) {
          step += (cand[i] - p[i]) * (cand[i] - p[i]);
          scale += p[i] * p[i];
        }
        p = cand;
        r = rc;
        cost = cand_cost;
        lambda *= options.lambda_decrease;
        stepped = true;
        if (std::sqrt(step) < options.step_tol * (std::sqrt(scale) + options.step_tol)) {
          converged = true;
        }
      } else {
        lambda *= options.lambda_increase;
      }
    }
    if (converged) {
      ++iter;
      break;
    }
  }

  for (size_t i = 0; i < np; ++i) out.param_values[m.params[i]] = p[i];
  out.residual_norm = std::sqrt(cost);
  out.iterations = iter;
  out.converged = converged;

  std::vector<bool> outside(np, false), inside(np, false);
  collect_param_positions(m.expr, false, outside, inside);
  for (size_t i = 0; i < np; ++i) {
    bool cost_param = outside[i] || !inside[i];
    if (cost_param && p[i] < 0.0)
      out.warnings.push_back("parameter " + m.params[i] + " fitted negative (" +
                             std::to_string(p[i]) +
                             "); a negative unit cost is not interpretable as a cost");
  }
  return out;
}

std::vector<double> CalibratedModel::param_vector() const {
  std::vector<double> v;
  v.reserve(model.params.size());
  for (const auto& name : model.params) v.push_back(param_values.at(name));
  return v;
}

double predict(const CalibratedModel& cm, const Kernel& k,
               const std::map<std::string, long long>& bindings, int sub_group_size) {
  std::vector<double> features;
  features.reserve(cm.model.features.size());
  for (const auto& spec : cm.model.features)
    features.push_back(
        evaluate_feature(spec, k, bindings, nullptr, 60, sub_group_size).numeric);
  return eval_model(cm.model, cm.param_vector(), features);
}

Model parse_model_file(const std::string& text) {
  std::istringstream is(text);
  std::string line, output, expr;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::string trimmed = line.substr(b);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (output.empty())
      output = trimmed;
    else
      expr += (expr.empty() ? "" : " ") + trimmed;
  }
  if (output.empty() || expr.empty())
    throw EvalError("model file needs an output feature line and an expression");
  return parse_model(output, expr);
}

std::string model_file_text(const Model& m) { return m.output_id + "\n" + m.expr_src + "\n"; }

std::string CalibratedModel::to_json_string() const {
  nlohmann::json j;
  j["schema"] = "perfseer-calibrated-model/1";
  j["output"] = model.output_id;
  j["expression"] = model.expr_src;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : param_values) params[k] = v;
  j["param_values"] = std::move(params);
  j["residual_norm"] = residual_norm;
  if (residual_norm_unscaled >= 0) j["residual_norm_unscaled"] = residual_norm_unscaled;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["warnings"] = warnings;
  if (!measurement_hash.empty()) j["measurement_hash"] = measurement_hash;
  return j.dump(2) + "\n";
}

CalibratedModel CalibratedModel::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("schema").get<std::string>() != "perfseer-calibrated-model/1")
    throw EvalError("unsupported calibrated-model schema");
  CalibratedModel cm;
  cm.model = parse_model(j.at("output").get<std::string>(), j.at("expression").get<std::string>());
  for (const auto& [k, v] : j.at("param_values").items()) cm.param_values[k] = v.get<double>();
  cm.residual_norm = j.at("residual_norm").get<double>();
  cm.residual_norm_unscaled = j.value("residual_norm_unscaled", -1.0);
  cm.iterations = j.at("iterations").get<int>();
  cm.converged = j.at("converged").get<bool>();
  if (j.contains("warnings"))
    for (const auto& w : j.at("warnings")) cm.warnings.push_back(w.get<std::string>());
  cm.measurement_hash = j.value("measurement_hash", "");
  return cm;
}

}  // namespace perfseer
