#pragma once

#include <string>
#include <vector>

#include "perfseer/ir.hpp"

namespace perfseer {

/// Parses a loop-domain string of the form
///   {[i,j,k]: 0<=i,j,k<n and p<=j<i+1}
/// into normalized per-iname bounds lo <= i <= hi. Chained comparisons expand
/// pairwise; identifiers outside the bracket list become size parameters.
LoopDomain parse_domain(const std::string& src);

/// Parses one instruction `lhs[subs] = rhs` against a domain. Array names may
/// carry access tags (`a$aLD[i,k]`), and `sum(k, e)` produces a reduction
/// node binding k.
Statement parse_instruction(const std::string& src, const LoopDomain& domain,
                            const std::string& id);

struct ArgSpec {
  std::string name;
  Dtype dtype;
  std::vector<std::string> shape;  // affine expressions over parameters
};

/// Builds a validated kernel from a domain string, instruction strings, and
/// argument declarations. All inames start sequential; the assumption set is
/// empty; private temporaries are declared automatically with inferred types.
Kernel make_kernel(const std::string& domain_src, const std::vector<std::string>& instructions,
                   const std::vector<ArgSpec>& args, const std::string& name = "kernel");

/// Renders a kernel back to the textual form accepted by parse_kernel_text;
/// parsing the result yields a structurally identical kernel for any kernel
/// expressible in the source language (sequential, barrier-free).
std::string pretty_print(const Kernel& k);

/// Kernel source file: one domain line, instruction lines, then
/// `arg <name> <dtype> [<shape>]` declarations. Blank lines and lines
/// starting with '#' are ignored.
Kernel parse_kernel_text(const std::string& text, const std::string& name = "kernel");

/// Parses an affine expression over the given parameters (used for argument
/// shapes and constraint right-hand sides).
AffineExpr parse_affine(const std::string& src, const std::set<std::string>& inames,
                        const std::set<std::string>& params);

/// Same, treating every identifier as a size parameter.
AffineExpr parse_affine_params(const std::string& src);

}  // namespace perfseer
