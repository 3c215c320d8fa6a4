#pragma once

#include "json.hpp"  // vendored nlohmann::json single header

#include "perfseer/ir.hpp"

namespace perfseer {

/// Kernel serialization, schema "perfseer-kernel/1": domain, statements,
/// args, tags, assumptions. Used by the CLI and test fixtures.
nlohmann::json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

nlohmann::json poly_to_json(const Poly& p);
Poly poly_from_json(const nlohmann::json& j);
nlohmann::json affine_to_json(const AffineExpr& a);
AffineExpr affine_from_json(const nlohmann::json& j);

/// FNV-1a over a canonical byte serialization.
uint64_t fnv1a(const std::string& bytes);

}  // namespace perfseer
