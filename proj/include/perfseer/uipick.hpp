#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "perfseer/ir.hpp"
#include "perfseer/transforms.hpp"

namespace perfseer {

/// One generated measurement kernel with its provenance.
struct GeneratedKernel {
  std::string id;
  Kernel kernel;
  std::map<std::string, long long> bindings;
  LaunchGeometry geometry;
  std::string generator;
  std::map<std::string, std::string> args;
};

/// Parameterized kernel creation function with filtering tags and a finite
/// set of allowable values per argument.
struct Generator {
  std::string id;
  std::set<std::string> tags;
  // Argument order is the Cartesian-product expansion order.
  std::vector<std::pair<std::string, std::vector<std::string>>> variant_args;
  std::function<GeneratedKernel(const std::map<std::string, std::string>&)> create;

  const std::vector<std::string>* allowable(const std::string& arg) const;
};

/// How a generator's tag set must relate to the user-provided tags.
enum class MatchCondition { identical, subset_of_user, superset_of_user, intersect };
MatchCondition match_condition_from_str(const std::string& s);

/// User filter tags: bare strings select generators; argument:value[,value]
/// pairs restrict an argument's allowable values to the intersection.
struct FilterTagSet {
  std::set<std::string> generator_tags;
  std::map<std::string, std::vector<std::string>> variant_tags;

  static FilterTagSet parse(const std::vector<std::string>& tags);
};

bool generator_matches(const Generator& g, const FilterTagSet& tags, MatchCondition cond);

/// Immutable generator collection. generate() expands every matched
/// generator over the Cartesian product of its (restricted) argument sets in
/// a deterministic order.
class KernelCollection {
public:
  explicit KernelCollection(std::vector<Generator> generators)
      : generators_(std::move(generators)) {}

  std::vector<GeneratedKernel> generate(
      const FilterTagSet& tags,
      MatchCondition cond = MatchCondition::superset_of_user) const;

  const std::vector<Generator>& generators() const { return generators_; }

private:
  std::vector<Generator> generators_;
};

/// The built-in generator catalog (microbenchmarks plus the matmul and
/// finite-difference application generators and their work-removed
/// derivatives). Argument value sets are the built-in manifest defaults.
std::vector<Generator> builtin_generators();

/// Direct access to the builders for tests and custom variants.
GeneratedKernel make_gmem_pattern(const std::map<std::string, std::string>& args);
GeneratedKernel make_flops_pattern(const std::string& op,
                                   const std::map<std::string, std::string>& args);
GeneratedKernel make_lmem_shuffle(const std::map<std::string, std::string>& args);
GeneratedKernel make_barrier_knl(const std::map<std::string, std::string>& args);
GeneratedKernel make_empty_knl(const std::map<std::string, std::string>& args);
GeneratedKernel make_overlap_knl(const std::map<std::string, std::string>& args);
GeneratedKernel make_matmul_sq(const std::map<std::string, std::string>& args);
GeneratedKernel make_matmul_sq_rm(const std::map<std::string, std::string>& args);
GeneratedKernel make_fd_stencil(const std::map<std::string, std::string>& args);
GeneratedKernel make_fd_stencil_rm(const std::map<std::string, std::string>& args);

}  // namespace perfseer
