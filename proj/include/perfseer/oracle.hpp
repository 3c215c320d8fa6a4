#pragma once

#include <map>
#include <string>

#include "perfseer/counting.hpp"
#include "perfseer/ir.hpp"

namespace perfseer {

/// Access pattern with numerically evaluated strides, used to compare the
/// symbolic classifier against enumeration.
struct NumericPattern {
  std::string mem;  // "global"/"local"
  std::string dir;  // "load"/"store"
  int dtype_bytes = 4;
  std::map<int, long long> lstrides;
  std::map<int, long long> gstrides;
  bool has_loop_stride = false;
  long long loop_stride = 0;
  std::string tag;
  std::string gran;  // "work_item"/"sub_group"

  std::string key() const;  // same format as AccessPattern::key()
};

/// Exact per-binding counts obtained by enumerating every domain point.
struct OracleCounts {
  std::map<std::string, long long> ops;              // OpKind::key() -> count
  std::map<std::string, long long> access_counts;    // NumericPattern::key() -> count
  std::map<std::string, long long> access_footprints;  // per pattern group
  std::map<std::string, std::string> access_gran;    // pattern key -> granularity
  std::map<std::string, long long> footprints;       // per array
  long long barrier_local = 0;                       // per work-item
  long long kernel_launch = 1;
  long long group_launch = 1;
  bool has_group_launch = false;
};

/// Enumerates the kernel at concrete parameter values, tallying operations,
/// accesses, footprints and barriers exactly. Guards against domains larger
/// than `max_points` enumerated statement instances.
OracleCounts brute_force_count(const Kernel& k, const std::map<std::string, long long>& bindings,
                               long long max_points = 1000000);

/// Evaluates a symbolic pattern at bindings into the oracle's key space.
NumericPattern evaluate_pattern(const AccessPattern& p,
                                const std::map<std::string, long long>& bindings);

}  // namespace perfseer
