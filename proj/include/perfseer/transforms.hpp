#pragma once

#include <map>
#include <set>
#include <string>

#include "perfseer/ir.hpp"

namespace perfseer {

/// Splits a sequential iname into an outer/inner pair: i = factor*i_out +
/// i_in + lo with i_in in 0..factor-1. The trip count must be a literal
/// multiple of the factor, or a divisibility assumption must make it one;
/// otherwise a SemanticError "requires assumption ..." is thrown. All bounds
/// and subscripts are rewritten by substitution; a reduction binding the
/// split iname becomes a nested reduction.
Kernel split_iname(const Kernel& k, const std::string& iname, long long factor);

/// Installs concurrency tags. Enforces per-axis uniqueness, contiguity from
/// axis 0, and static trip counts on local axes.
Kernel tag_inames(const Kernel& k, const std::map<std::string, InameTag>& tags);

Kernel assume(const Kernel& k, const Assumption& a);
Kernel assume_divisible(const Kernel& k, const std::string& param, long long modulus);
Kernel assume_lower_bound(const Kernel& k, const std::string& param, long long bound);

/// Substitutes integer values for parameters and simplifies; checks the
/// assumption set (contradictions are errors) and drops assumptions on the
/// fixed parameters.
Kernel fix_parameters(const Kernel& k, const std::map<std::string, long long>& bindings);

/// Work-group shape and per-axis group counts of a tagged kernel.
/// Untagged kernels must carry the single-work-item marker.
LaunchGeometry launch_geometry(const Kernel& k, int sub_group_size = 32);

/// Strips arithmetic and local-memory work, leaving the global accesses not
/// named by `remove_vars` (array names) or `remove_tagged` (access tags).
/// Surviving loads accumulate into a private tgt_read; surviving stores write
/// tgt_read back. If nothing stores tgt_read, a one-entry-per-work-item
/// global array tgt_read_dest is appended with a stride-1 lowest-axis store.
/// Surviving accesses keep their exact access patterns.
Kernel remove_work(const Kernel& k, const std::set<std::string>& remove_vars,
                   const std::set<std::string>& remove_tagged = {}, bool allow_empty = true);

/// Substitutes an iname by an affine expression throughout an expression tree.
ExprPtr substitute_iname_expr(const ExprPtr& e, const std::string& iname, const AffineExpr& value);

}  // namespace perfseer
