#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfseer/counting.hpp"
#include "perfseer/ir.hpp"

namespace perfseer {

class Executor;

/// Relation in a stride or AFR constraint. Exactly ==, <, > are supported.
enum class ConstraintRel { eq, lt, gt };
std::string constraint_rel_str(ConstraintRel r);

/// Per-axis stride constraint, e.g. lstrides:{0:1;1:>15}. The right-hand
/// side may reference size parameters and is evaluated at the bindings.
struct StrideConstraint {
  int axis;
  ConstraintRel rel;
  AffineExpr rhs;
};

struct AfrConstraint {
  ConstraintRel rel;
  AffineExpr rhs;
};

/// Parsed feature identifier. Identifiers start with `f_`; the first section
/// selects the class, the remainder class-specific characteristics in a fixed
/// field order. A tag-based memory spec carries no other constraints.
struct FeatureSpec {
  enum class Class { op, mem_access, sync, thread_groups, wall_time };
  Class cls;

  Dtype dtype = Dtype::float32;  // op class
  OpName op = OpName::add;

  std::string tag;  // mem class
  std::optional<MemType> mem;
  std::optional<Dtype> mem_dtype;
  std::optional<Direction> dir;
  std::vector<StrideConstraint> lstride_cons;
  std::vector<StrideConstraint> gstride_cons;
  std::optional<AfrConstraint> afr_con;

  SyncKind sync = SyncKind::barrier_local;  // sync class

  std::string executor_id;  // wall_time class

  /// Canonical identifier; parse_feature(id()) round-trips.
  std::string id() const;
};

FeatureSpec parse_feature(const std::string& id);

/// True when the pattern satisfies every constraint of a mem_access spec at
/// the given parameter bindings.
bool pattern_matches(const FeatureSpec& spec, const AccessPattern& p,
                     const std::map<std::string, long long>& bindings);

struct FeatureValue {
  std::optional<Poly> symbolic;  // count-class features only
  double numeric = 0.0;
};

struct KernelInstance {
  std::string id;
  Kernel kernel;
  std::map<std::string, long long> bindings;
};

/// Evaluates one feature. Count-class features sum the matching count map
/// entries, divide by the granularity divisor (sub-group entries by the
/// sub-group size), and evaluate at the bindings; thread_groups multiplies
/// the per-axis group counts; wall_time defers to the executor and returns
/// the filtered mean in seconds.
FeatureValue evaluate_feature(const FeatureSpec& spec, const Kernel& k,
                              const std::map<std::string, long long>& bindings,
                              Executor* executor = nullptr, int trials = 60,
                              int sub_group_size = 32, bool use_cache = true);

/// Dense feature table: one row per kernel, one column per feature, in the
/// given orders. Evaluation errors carry the kernel id.
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<std::string> row_ids;
  std::vector<std::vector<double>> values;

  std::string to_csv() const;
  static FeatureTable from_csv(const std::string& text);
  const std::vector<double>& row(const std::string& id) const;
};

FeatureTable gather_feature_values(const std::vector<FeatureSpec>& features,
                                   const std::vector<KernelInstance>& kernels,
                                   Executor* executor = nullptr, int trials = 60,
                                   int sub_group_size = 32);

}  // namespace perfseer
