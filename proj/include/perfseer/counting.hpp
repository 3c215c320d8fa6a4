#pragma once

#include <atomic>
#include <memory>
#include <optional>

#include "perfseer/ir.hpp"

namespace perfseer {

enum class Granularity { work_item, sub_group, work_group, kernel };
std::string granularity_str(Granularity g);

enum class OpName { add, mul, madd, div, pow_ };
std::string opname_str(OpName n);

/// Arithmetic operation kind; madd (a*b+c) counts as one unit.
struct OpKind {
  Dtype dtype;
  OpName op;
  Granularity gran = Granularity::sub_group;

  std::string key() const { return "op:" + dtype_str(dtype) + ":" + opname_str(op); }
  std::string str() const { return key() + ":" + granularity_str(gran); }
};

enum class MemType { global_mem, local_mem };
enum class Direction { load, store };
std::string memtype_str(MemType m);
std::string direction_str(Direction d);

/// Classification of one memory access group: memory type, direction, data
/// width, per-axis local/global strides in flattened element units, the
/// stride of the innermost surrounding sequential loop, and the
/// access-to-footprint ratio. Accesses with lid(0) stride 0 are uniform and
/// counted per sub-group.
struct AccessPattern {
  MemType mem;
  Direction dir;
  int dtype_bytes;
  std::map<int, Poly> lstrides;  // one entry per local axis of the kernel
  std::map<int, Poly> gstrides;  // one entry per group axis
  std::optional<Poly> loop_stride;
  std::string tag;
  PolyRatio afr = PolyRatio::exact(Poly::constant(1));
  Granularity gran = Granularity::work_item;

  /// Grouping identity: everything except the derived afr/granularity.
  std::string key() const;
  std::string str() const;
  bool uniform() const;
};

enum class SyncKind { barrier_local, kernel_launch, group_launch };
std::string synckind_str(SyncKind k);

struct CountedOp {
  OpKind kind;
  Poly count;  // grid-total execution count
};
struct CountedAccess {
  AccessPattern pattern;
  Poly count;  // grid-total access count
};
struct CountedSync {
  SyncKind kind;
  Poly count;  // barrier_local: per work-item; launches: totals
};

/// Full symbolic count set for a kernel. Arithmetic on counts is performed
/// symbolically; evaluation at bindings is a cheap polynomial evaluation.
struct KernelCounts {
  std::vector<CountedOp> ops;
  std::vector<CountedAccess> accesses;
  std::vector<CountedSync> sync;
  std::map<std::string, Poly> footprints;  // per array, all accesses
  std::optional<LaunchGeometry> geometry;  // absent for untagged, unmarked kernels
};

/// Number of integer points in the projection of the domain onto a subset of
/// inames, by iterated symbolic summation innermost-out. The subset must be
/// closed under bound references. Floor terms from split inames must be
/// resolvable from divisibility assumptions; otherwise a CountError asks for
/// the missing assumption.
Poly count_points(const LoopDomain& d, const std::set<std::string>& subset,
                  const std::vector<Assumption>& assumptions);

/// Instrumentation: number of count_points projections performed so far.
/// Cached counts must not trigger new projections on re-evaluation.
uint64_t projection_count();

std::vector<CountedOp> count_ops(const Kernel& k);
std::vector<CountedAccess> classify_accesses(const Kernel& k);
std::vector<CountedSync> count_sync(const Kernel& k);

/// Footprint of an array: number of distinct elements accessed, per the
/// union of all access index maps. Requires per-axis progressions with
/// constant steps and decidable interval comparisons; otherwise CountError.
Poly footprint(const Kernel& k, const std::string& array);

/// Computes every count family at once.
KernelCounts analyze(const Kernel& k);

/// Process-wide cache keyed by kernel hash (concurrent, last-writer-wins;
/// values are deterministic).
std::shared_ptr<const KernelCounts> analyze_cached(const Kernel& k);
void clear_count_cache();

/// True when the affine expression takes integer values at every parameter
/// point satisfying the divisibility assumptions.
bool integer_valued_under(const AffineExpr& e, const std::vector<Assumption>& assumptions);

/// Three-valued comparison of a polynomial against zero over the assumed
/// region (parameter lower bounds).
enum class RegionSign { always_nonneg, always_neg, zero, unknown };
RegionSign region_sign(const Poly& p, const std::vector<Assumption>& assumptions);

}  // namespace perfseer
