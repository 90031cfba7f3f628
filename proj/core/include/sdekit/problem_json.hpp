#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sdekit/sde_problem.hpp"

namespace sdekit {

/// Raised for malformed or non-conforming JSON documents.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problem schema (unknown keys are rejected):
//   {"x0": number,
//    "drift": {"breakpoints": [..], "pieces": [{"form": "constant"|"affine", "params": [..]}, ..],
//              "breakpoint_values": [..]},          // breakpoint_values optional
//    "diffusion": {"form": .., "params": [..]}}
// "constant" takes one parameter c, "affine" takes two (a, b) meaning a + b*x.

FunctionSpec function_spec_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json to_json(const FunctionSpec& spec);

SdeProblem problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SdeProblem& problem);

/// Throws SchemaError if `j` is not an object or has a key outside `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where);

}  // namespace sdekit
