#include "perfseer/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perfseer/executor.hpp"
#include "perfseer/lang.hpp"

namespace perfseer {

std::string constraint_rel_str(ConstraintRel r) {
  switch (r) {
    case ConstraintRel::eq: return "";
    case ConstraintRel::lt: return "<";
    case ConstraintRel::gt: return ">";
  }
  return "";
}

namespace {

std::string affine_id_str(const AffineExpr& a) {
  // Constraint right-hand sides are parameter-affine; str() of the offset
  // polynomial is already in identifier-safe form (no underscores expected).
  return a.str();
}

std::string constraints_str(const std::vector<StrideConstraint>& cons) {
  std::string out = "{";
  for (size_t i = 0; i < cons.size(); ++i) {
    if (i) out += ";";
    out += std::to_string(cons[i].axis) + ":" + constraint_rel_str(cons[i].rel) +
           affine_id_str(cons[i].rhs);
  }
  return out + "}";
}

}  // namespace

std::string FeatureSpec::id() const {
  switch (cls) {
    case Class::op:
      return "f_op_" + dtype_str(dtype) + "_" + opname_str(op);
    case Class::sync:
      return "f_sync_" + synckind_str(sync);
    case Class::thread_groups:
      return "f_thread_groups";
    case Class::wall_time:
      return "f_exec_wall_time_" + executor_id;
    case Class::mem_access: {
      std::string out = "f_mem_access";
      if (!tag.empty()) return out + "_tag:" + tag;
      if (mem) out += "_" + memtype_str(*mem);
      if (mem_dtype) out += "_" + dtype_str(*mem_dtype);
      if (dir) out += "_" + direction_str(*dir);
      if (!lstride_cons.empty()) out += "_lstrides:" + constraints_str(lstride_cons);
      if (!gstride_cons.empty()) out += "_gstrides:" + constraints_str(gstride_cons);
      if (afr_con)
        out += "_afr:" + constraint_rel_str(afr_con->rel) + affine_id_str(afr_con->rhs);
      return out;
    }
  }
  return "f_?";
}

namespace {

AffineExpr parse_constraint_rhs(const std::string& text) {
  // Identifiers in constraint right-hand sides are size parameters.
  return parse_affine_params(text);
}

ConstraintRel take_rel(std::string& s) {
  if (!s.empty() && s[0] == '<') {
    s.erase(0, 1);
    return ConstraintRel::lt;
  }
  if (!s.empty() && s[0] == '>') {
    s.erase(0, 1);
    return ConstraintRel::gt;
  }
  return ConstraintRel::eq;
}

std::vector<StrideConstraint> parse_constraint_set(const std::string& body,
                                                   const std::string& id) {
  std::vector<StrideConstraint> out;
  std::set<int> seen;
  std::string cur;
  std::vector<std::string> parts;
  for (char c : body) {
    if (c == ';') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  for (auto part : parts) {
    size_t colon = part.find(':');
    if (colon == std::string::npos)
      throw EvalError("malformed stride constraint '" + part + "' in " + id);
    int axis;
    try {
      axis = std::stoi(part.substr(0, colon));
    } catch (...) {
      throw EvalError("malformed stride axis in '" + part + "' in " + id);
    }
    if (!seen.insert(axis).second)
      throw EvalError("duplicate stride axis " + std::to_string(axis) + " in " + id);
    std::string rest = part.substr(colon + 1);
    ConstraintRel rel = take_rel(rest);
    if (rest.empty()) throw EvalError("empty stride constraint value in " + id);
    out.push_back(StrideConstraint{axis, rel, parse_constraint_rhs(rest)});
  }
  if (out.empty()) throw EvalError("empty constraint set in " + id);
  return out;
}

}  // namespace

FeatureSpec parse_feature(const std::string& id) {
  if (id.rfind("f_", 0) != 0) throw EvalError("feature id must start with 'f_': " + id);
  std::string rest = id.substr(2);
  FeatureSpec spec;

  if (rest.rfind("op_", 0) == 0) {
    spec.cls = FeatureSpec::Class::op;
    std::string body = rest.substr(3);
    size_t us = body.find('_');
    if (us == std::string::npos) throw EvalError("op feature needs dtype and op: " + id);
    spec.dtype = dtype_from_str(body.substr(0, us));
    std::string op = body.substr(us + 1);
    if (op == "add") spec.op = OpName::add;
    else if (op == "mul") spec.op = OpName::mul;
    else if (op == "madd") spec.op = OpName::madd;
    else if (op == "div") spec.op = OpName::div;
    else if (op == "pow") spec.op = OpName::pow_;
    else throw EvalError("unknown op '" + op + "' in " + id);
    return spec;
  }

  if (rest.rfind("sync_", 0) == 0) {
    spec.cls = FeatureSpec::Class::sync;
    std::string kind = rest.substr(5);
    if (kind == "barrier_local") spec.sync = SyncKind::barrier_local;
    else if (kind == "kernel_launch") spec.sync = SyncKind::kernel_launch;
    else if (kind == "group_launch") spec.sync = SyncKind::group_launch;
    else throw EvalError("unknown sync kind '" + kind + "' in " + id);
    return spec;
  }

  if (rest == "thread_groups") {
    spec.cls = FeatureSpec::Class::thread_groups;
    return spec;
  }

  if (rest.rfind("exec_wall_time_", 0) == 0) {
    spec.cls = FeatureSpec::Class::wall_time;
    spec.executor_id = rest.substr(15);
    if (spec.executor_id.empty()) throw EvalError("wall-time feature needs an executor id: " + id);
    return spec;
  }

  if (rest.rfind("mem_access", 0) == 0) {
    spec.cls = FeatureSpec::Class::mem_access;
    std::string s = rest.substr(10);

    // Fields in canonical order; each may appear at most once.
    // tag, mem type, data type, direction, lstrides, gstrides, afr.
    int rank = 0;
    auto expect_order = [&](int field_rank, const std::string& field) {
      if (field_rank <= rank)
        throw EvalError("feature field '" + field + "' out of order in " + id);
      rank = field_rank;
    };
    while (!s.empty()) {
      if (s[0] != '_') throw EvalError("malformed feature id: " + id);
      s.erase(0, 1);
      if (s.rfind("tag:", 0) == 0) {
        expect_order(1, "tag");
        spec.tag = s.substr(4);
        if (spec.tag.empty()) throw EvalError("empty access tag in " + id);
        if (spec.tag.find('_') != std::string::npos || spec.tag.find('{') != std::string::npos)
          throw EvalError("access tag may not contain '_' or '{': " + id);
        s.clear();
        continue;
      }
      if (s.rfind("global", 0) == 0 || s.rfind("local", 0) == 0) {
        size_t len = s.rfind("global", 0) == 0 ? 6 : 5;
        expect_order(2, "mem type");
        spec.mem = s[0] == 'g' ? MemType::global_mem : MemType::local_mem;
        s.erase(0, len);
        continue;
      }
      if (s.rfind("float32", 0) == 0 || s.rfind("float64", 0) == 0 || s.rfind("int32", 0) == 0) {
        expect_order(3, "data type");
        size_t len = s.rfind("int32", 0) == 0 ? 5 : 7;
        spec.mem_dtype = dtype_from_str(s.substr(0, len));
        s.erase(0, len);
        continue;
      }
      if (s.rfind("load", 0) == 0 || s.rfind("store", 0) == 0) {
        expect_order(4, "direction");
        size_t len = s[0] == 'l' ? 4 : 5;
        spec.dir = s[0] == 'l' ? Direction::load : Direction::store;
        s.erase(0, len);
        continue;
      }
      if (s.rfind("lstrides:{", 0) == 0 || s.rfind("gstrides:{", 0) == 0) {
        bool is_l = s[0] == 'l';
        expect_order(is_l ? 5 : 6, is_l ? "lstrides" : "gstrides");
        size_t close = s.find('}');
        if (close == std::string::npos) throw EvalError("unclosed constraint braces in " + id);
        std::string body = s.substr(10, close - 10);
        auto cons = parse_constraint_set(body, id);
        if (is_l)
          spec.lstride_cons = std::move(cons);
        else
          spec.gstride_cons = std::move(cons);
        s.erase(0, close + 1);
        continue;
      }
      if (s.rfind("afr:", 0) == 0) {
        expect_order(7, "afr");
        std::string body = s.substr(4);
        if (body.find('_') != std::string::npos)
          throw EvalError("feature field after afr is out of order in " + id);
        if (body.empty()) throw EvalError("empty afr constraint in " + id);
        AfrConstraint c;
        c.rel = take_rel(body);
        c.rhs = parse_constraint_rhs(body);
        spec.afr_con = c;
        s.clear();
        continue;
      }
      throw EvalError("unknown or out-of-order feature field near '_" + s + "' in " + id);
    }
    if (!spec.tag.empty() &&
        (spec.mem || spec.mem_dtype || spec.dir || !spec.lstride_cons.empty() ||
         !spec.gstride_cons.empty() || spec.afr_con))
      throw EvalError("tag-based feature carries no other constraints: " + id);
    return spec;
  }

  throw EvalError("unknown feature class in '" + id + "'");
}

namespace {

bool rel_holds(ConstraintRel rel, const Rational& lhs, const Rational& rhs) {
  switch (rel) {
    case ConstraintRel::eq: return lhs == rhs;
    case ConstraintRel::lt: return lhs < rhs;
    case ConstraintRel::gt: return lhs > rhs;
  }
  return false;
}

Rational eval_param_affine(const AffineExpr& e, const std::map<std::string, long long>& bindings) {
  return e.eval(bindings);
}

}  // namespace

bool pattern_matches(const FeatureSpec& spec, const AccessPattern& p,
                     const std::map<std::string, long long>& bindings) {
  if (spec.cls != FeatureSpec::Class::mem_access)
    throw EvalError("pattern_matches on non-memory feature " + spec.id());
  if (!spec.tag.empty()) return p.tag == spec.tag;
  if (spec.mem && *spec.mem != p.mem) return false;
  if (spec.mem_dtype && dtype_bytes(*spec.mem_dtype) != p.dtype_bytes) return false;
  if (spec.dir && *spec.dir != p.dir) return false;
  auto stride_at = [&](const std::map<int, Poly>& strides, int axis) {
    auto it = strides.find(axis);
    if (it == strides.end()) return Rational(0);  // absent axis: no dependence
    return it->second.eval(bindings);
  };
  for (const auto& c : spec.lstride_cons)
    if (!rel_holds(c.rel, stride_at(p.lstrides, c.axis), eval_param_affine(c.rhs, bindings)))
      return false;
  for (const auto& c : spec.gstride_cons)
    if (!rel_holds(c.rel, stride_at(p.gstrides, c.axis), eval_param_affine(c.rhs, bindings)))
      return false;
  if (spec.afr_con)
    if (!rel_holds(spec.afr_con->rel, p.afr.eval(bindings),
                   eval_param_affine(spec.afr_con->rhs, bindings)))
      return false;
  return true;
}

namespace {

void check_bindings(const Kernel& k, const std::map<std::string, long long>& bindings) {
  for (const auto& a : k.assumptions) {
    auto it = bindings.find(a.param);
    if (it == bindings.end()) continue;
    bool ok = a.kind == Assumption::Kind::divisible ? (it->second % a.value == 0)
                                                    : (it->second >= a.value);
    if (!ok)
      throw EvalError("binding " + a.param + "=" + std::to_string(it->second) +
                      " violates assumption " + a.str());
  }
  for (const auto& p : k.domain.parameters)
    if (!bindings.count(p)) throw EvalError("missing binding for parameter '" + p + "'");
}

Rational divide_for_granularity(const Rational& raw, Granularity g, const KernelCounts& counts,
                                int sub_group_size, const std::string& what) {
  long long divisor = 1;
  switch (g) {
    case Granularity::work_item:
    case Granularity::kernel:
      divisor = 1;
      break;
    case Granularity::sub_group:
      divisor = sub_group_size;
      if (counts.geometry) {
        long long wg = counts.geometry->flat_work_group_size();
        if (wg % sub_group_size != 0)
          throw EvalError("work-group size " + std::to_string(wg) +
                          " is not a multiple of the sub-group size " +
                          std::to_string(sub_group_size));
      }
      break;
    case Granularity::work_group:
      if (!counts.geometry) throw EvalError("work-group granularity needs launch geometry");
      divisor = counts.geometry->flat_work_group_size();
      break;
  }
  Rational v = raw / divisor;
  if (!is_integer(v))
    throw EvalError(what + ": count " + raw.str() + " is not divisible by the granularity " +
                    "divisor " + std::to_string(divisor));
  return v;
}

}  // namespace

FeatureValue evaluate_feature(const FeatureSpec& spec, const Kernel& k,
                              const std::map<std::string, long long>& bindings,
                              Executor* executor, int trials, int sub_group_size,
                              bool use_cache) {
  FeatureValue out;
  if (spec.cls == FeatureSpec::Class::wall_time) {
    if (!executor) throw EvalError("wall-time feature " + spec.id() + " requires an executor");
    check_bindings(k, bindings);
    MeasurementRecord rec = measure_kernel(*executor, k, bindings, trials);
    out.numeric = rec.mean_seconds;
    return out;
  }

  check_bindings(k, bindings);
  std::shared_ptr<const KernelCounts> cached;
  KernelCounts local;
  const KernelCounts* counts;
  if (use_cache) {
    cached = analyze_cached(k);
    counts = cached.get();
  } else {
    local = analyze(k);
    counts = &local;
  }

  Poly symbolic;
  Rational numeric = 0;
  switch (spec.cls) {
    case FeatureSpec::Class::op: {
      for (const auto& e : counts->ops) {
        if (e.kind.dtype != spec.dtype || e.kind.op != spec.op) continue;
        Rational v = divide_for_granularity(e.count.eval(bindings), e.kind.gran, *counts,
                                            sub_group_size, spec.id());
        numeric += v;
        symbolic += e.count * Rational(1, sub_group_size);
      }
      break;
    }
    case FeatureSpec::Class::mem_access: {
      for (const auto& e : counts->accesses) {
        if (!pattern_matches(spec, e.pattern, bindings)) continue;
        Rational v = divide_for_granularity(e.count.eval(bindings), e.pattern.gran, *counts,
                                            sub_group_size, spec.id());
        numeric += v;
        symbolic += e.pattern.gran == Granularity::sub_group
                        ? e.count * Rational(1, sub_group_size)
                        : e.count;
      }
      break;
    }
    case FeatureSpec::Class::sync: {
      for (const auto& e : counts->sync) {
        if (e.kind != spec.sync) continue;
        numeric += e.count.eval(bindings);
        symbolic += e.count;
      }
      break;
    }
    case FeatureSpec::Class::thread_groups: {
      if (!counts->geometry)
        throw EvalError("thread_groups needs launch geometry (tag inames or mark the kernel "
                        "single-work-item)");
      Poly total = counts->geometry->total_groups();
      numeric = total.eval(bindings);
      symbolic = total;
      break;
    }
    case FeatureSpec::Class::wall_time:
      break;  // handled above
  }
  out.symbolic = symbolic;
  out.numeric = to_double(numeric);
  return out;
}

std::string FeatureTable::to_csv() const {
  std::ostringstream os;
  os << "kernel";
  for (const auto& c : columns) os << "," << c;
  os << "\n";
  os.setf(std::ios::fmtflags(0), std::ios::floatfield);
  os.precision(17);
  for (size_t r = 0; r < row_ids.size(); ++r) {
    os << row_ids[r];
    for (double v : values[r]) os << "," << v;
    os << "\n";
  }
  return os.str();
}

FeatureTable FeatureTable::from_csv(const std::string& text) {
  FeatureTable t;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cells.push_back(cur);
    if (header) {
      if (cells.empty() || cells[0] != "kernel")
        throw EvalError("feature CSV must start with a 'kernel' column");
      t.columns.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    t.row_ids.push_back(cells[0]);
    std::vector<double> row;
    for (size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    if (row.size() != t.columns.size())
      throw EvalError("feature CSV row width mismatch at kernel " + cells[0]);
    t.values.push_back(std::move(row));
  }
  return t;
}

const std::vector<double>& FeatureTable::row(const std::string& id) const {
  for (size_t i = 0; i < row_ids.size(); ++i)
    if (row_ids[i] == id) return values[i];
  throw EvalError("no feature row for kernel '" + id + "'");
}

FeatureTable gather_feature_values(const std::vector<FeatureSpec>& features,
                                   const std::vector<KernelInstance>& kernels,
                                   Executor* executor, int trials, int sub_group_size) {
  FeatureTable t;
  for (const auto& f : features) t.columns.push_back(f.id());
  for (const auto& inst : kernels) {
    std::vector<double> row;
    for (const auto& f : features) {
      try {
        row.push_back(evaluate_feature(f, inst.kernel, inst.bindings, executor, trials,
                                       sub_group_size)
                          .numeric);
      } catch (const Error& e) {
        throw EvalError("kernel '" + inst.id + "', feature " + f.id() + ": " + e.what());
      }
    }
    t.row_ids.push_back(inst.id);
    t.values.push_back(std::move(row));
  }
  return t;
}

}  // namespace perfseer
