#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "perfseer/affine.hpp"

namespace perfseer {

enum class Dtype { float32, float64, int32 };

inline int dtype_bytes(Dtype t) { return t == Dtype::float64 ? 8 : 4; }
std::string dtype_str(Dtype t);
Dtype dtype_from_str(const std::string& s);

enum class MemSpace { global, local, private_mem };
std::string memspace_str(MemSpace s);
MemSpace memspace_from_str(const std::string& s);

/// Concurrency tag of a loop index: plain sequential loop, or mapped onto a
/// local (within work-group) or group launch axis.
struct InameTag {
  enum class Kind { sequential, local, group };
  Kind kind = Kind::sequential;
  int axis = -1;

  static InameTag seq() { return {}; }
  static InameTag local(int axis) { return {Kind::local, axis}; }
  static InameTag group(int axis) { return {Kind::group, axis}; }
  bool is_parallel() const { return kind != Kind::sequential; }
  bool operator==(const InameTag& o) const { return kind == o.kind && axis == o.axis; }
  std::string str() const;
};
InameTag iname_tag_from_str(const std::string& s);

/// Divisibility (param mod k == 0) or lower bound (param >= c) on a size
/// parameter. These license loop splits and resolve symbolic comparisons.
struct Assumption {
  enum class Kind { divisible, lower_bound };
  Kind kind;
  std::string param;
  long long value;  // modulus (>= 1) or bound

  bool operator==(const Assumption& o) const {
    return kind == o.kind && param == o.param && value == o.value;
  }
  bool operator<(const Assumption& o) const {
    return std::tie(kind, param, value) < std::tie(o.kind, o.param, o.value);
  }
  std::string str() const;
};

struct Bound {
  AffineExpr lo;
  AffineExpr hi;  // inclusive
  bool operator==(const Bound& o) const { return lo == o.lo && hi == o.hi; }
};

/// Single loop nest: ordered indices with bounds that may reference size
/// parameters and strictly outer indices.
struct LoopDomain {
  std::vector<std::string> inames;  // outermost first
  std::map<std::string, Bound> bounds;
  std::set<std::string> parameters;

  int index_of(const std::string& iname) const;
  bool has_iname(const std::string& iname) const { return index_of(iname) >= 0; }
  const Bound& bound(const std::string& iname) const;
  AffineExpr trip_count(const std::string& iname) const {
    const Bound& b = bound(iname);
    return b.hi - b.lo + AffineExpr::constant(1);
  }
  bool operator==(const LoopDomain& o) const {
    return inames == o.inames && bounds == o.bounds && parameters == o.parameters;
  }
};

struct Access {
  std::string array;
  std::string tag;                // access tag, empty if none
  std::vector<AffineExpr> subs;   // empty for a scalar variable

  bool is_scalar() const { return subs.empty(); }
  bool operator==(const Access& o) const {
    return array == o.array && tag == o.tag && subs == o.subs;
  }
};

enum class BinOp { add, sub, mul, div };
std::string binop_str(BinOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Right-hand-side expression tree. sum(iname, body) is represented as a
/// reduction node binding the iname.
struct Expr {
  enum class Kind { number, scalar_ref, access, binary, reduction };
  Kind kind;

  Rational number;     // Kind::number
  bool number_is_float = false;
  std::string name;    // Kind::scalar_ref
  Access access;       // Kind::access
  BinOp op = BinOp::add;  // Kind::binary
  ExprPtr lhs, rhs;
  std::string red_iname;  // Kind::reduction
  ExprPtr body;

  static ExprPtr make_number(const Rational& v, bool is_float);
  static ExprPtr make_scalar(const std::string& name);
  static ExprPtr make_access(Access a);
  static ExprPtr make_binary(BinOp op, ExprPtr l, ExprPtr r);
  static ExprPtr make_reduction(const std::string& iname, ExprPtr body);
};

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::string expr_str(const ExprPtr& e);

struct Statement {
  std::string id;
  bool is_barrier = false;
  Access lhs;     // unused for barriers
  ExprPtr rhs;    // unused for barriers
  std::set<std::string> within;       // inames the statement resides in
  std::set<std::string> depends_on;   // statement ids
  bool harness = false;  // work-removal accumulator: arithmetic not counted

  bool operator==(const Statement& o) const;
};

struct ArgDecl {
  std::string name;
  Dtype dtype = Dtype::float32;
  std::vector<AffineExpr> shape;  // empty for scalars
  MemSpace space = MemSpace::global;

  bool operator==(const ArgDecl& o) const {
    return name == o.name && dtype == o.dtype && shape == o.shape && space == o.space;
  }
};

/// Immutable kernel value: loop domain, tagged statements, array declarations,
/// assumptions and concurrency tags. Transforms return new kernels.
struct Kernel {
  std::string name = "kernel";
  LoopDomain domain;
  std::vector<Statement> statements;
  std::vector<ArgDecl> args;
  std::vector<Assumption> assumptions;
  std::map<std::string, InameTag> iname_tags;  // absent -> sequential
  bool single_work_item = false;

  InameTag tag_of(const std::string& iname) const {
    auto it = iname_tags.find(iname);
    return it == iname_tags.end() ? InameTag::seq() : it->second;
  }
  bool is_sequential(const std::string& iname) const { return !tag_of(iname).is_parallel(); }
  const ArgDecl* find_arg(const std::string& name) const;
  const ArgDecl& arg(const std::string& name) const;
  bool has_assumption(const Assumption& a) const;
  std::optional<long long> divisibility_of(const std::string& param) const;  // largest modulus
  std::optional<long long> lower_bound_of(const std::string& param) const;   // largest bound

  /// Ordered member-of-`within` list for a statement, outermost first.
  std::vector<std::string> ordered_within(const Statement& s) const;

  bool operator==(const Kernel& o) const;
};

/// Checks all structural invariants; throws SemanticError on violation.
void validate(const Kernel& k);

/// Runs type inference over all statements, resolving private scalar dtypes.
/// Returns dtypes of every named value (args and private temporaries).
/// Throws SemanticError on float32/float64 conflicts or untypeable trees.
std::map<std::string, Dtype> infer_types(const Kernel& k);

/// Result dtype of an expression under resolved value types; literal-only
/// trees report float32 when any literal is floating, int32 otherwise.
Dtype expr_dtype(const ExprPtr& e, const Kernel& k, const std::map<std::string, Dtype>& types);

/// Work-group geometry of a tagged kernel: static work-group shape, symbolic
/// per-axis group counts, and the sub-group width used by counting.
struct LaunchGeometry {
  std::vector<long long> work_group_size;  // per local axis
  std::vector<Poly> num_groups;            // per group axis
  int sub_group_size = 32;

  long long flat_work_group_size() const {
    long long p = 1;
    for (long long v : work_group_size) p *= v;
    return p;
  }
  Poly total_groups() const {
    Poly p = Poly::constant(1);
    for (const auto& g : num_groups) p = p * g;
    return p;
  }
};

/// Stable content hash of a kernel (used for count caching and manifests).
uint64_t kernel_hash(const Kernel& k);

}  // namespace perfseer
