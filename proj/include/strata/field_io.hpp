#pragma once

#include "strata/fields.hpp"

#include <filesystem>
#include <string>

namespace strata {

// Validation error that remembers the offending key so file loaders can report its line.
class SpecError : public InvalidArgument {
 public:
  SpecError(const std::string& msg, std::string key) : InvalidArgument(msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Field spec JSON, one object per variant:
//   {"type":"polynomial","n":3,"degree":2,"coeffs":[...]}   basis coefficients, or
//   {"type":"polynomial","n":3,"degree":2,"monomials":[{"exp":[2,0,0],"c":1}, ...]}
//   {"type":"hinged", ...polynomial keys..., "c":2, "frame":{"rotation":[[..]],"origin":[..]}}
//   {"type":"affine","base":{..},"a":1,"b":1,"c0":0,"shift":[..]}
//   {"type":"sum","n":3,"terms":[{..},..]}
//   {"type":"sampled","n":2,"grid_ref":"grid.json","order":1}
//   {"type":"mollified","base":{..},"eps":0.1,"order":12}
// Every object may carry "lipschitz_hint" and a top-level "schema":1. Unknown keys are rejected.
FieldPtr field_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
nlohmann::json field_to_json(const ScalarField& v);

// Reads and parses a JSON file; syntax and validation errors carry file:line.
nlohmann::json read_json_file(const std::string& path);
FieldPtr load_field(const std::string& path);

// 1-based line of the first occurrence of "key" in text, or 0.
int line_of_key(const std::string& text, const std::string& key);

FieldMetadata field_metadata(const ScalarField& v, double alpha = 1.0, std::optional<double> m0_hint = std::nullopt);

}  // namespace strata
