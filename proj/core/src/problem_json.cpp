#include "sdekit/problem_json.hpp"

#include <algorithm>
#include <string_view>
#include <vector>

namespace sdekit {

namespace {

using nlohmann::json;

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) {
    throw SchemaError(where + ": expected a number");
  }
  return j.get<double>();
}

std::vector<double> numbers_at(const json& j, const std::string& where) {
  if (!j.is_array()) {
    throw SchemaError(where + ": expected an array of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number_at(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

const json& member(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError(where + ": missing key \"" + key + "\"");
  }
  return *it;
}

}  // namespace

void require_known_keys(const json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!j.is_object()) {
    throw SchemaError(where + ": expected an object");
  }
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) {
      throw SchemaError(where + ": unknown key \"" + key + "\"");
    }
  }
}

FunctionSpec function_spec_from_json(const json& j, const std::string& where) {
  require_known_keys(j, {"form", "params"}, where);
  const auto& form = member(j, "form", where);
  if (!form.is_string()) {
    throw SchemaError(where + ".form: expected a string");
  }
  const auto params = numbers_at(member(j, "params", where), where + ".params");
  const auto name = form.get<std::string>();
  if (name == "constant") {
    if (params.size() != 1) {
      throw SchemaError(where + ": constant takes exactly 1 parameter");
    }
    return FunctionSpec::constant(params[0]);
  }
  if (name == "affine") {
    if (params.size() != 2) {
      throw SchemaError(where + ": affine takes exactly 2 parameters");
    }
    return FunctionSpec::affine(params[0], params[1]);
  }
  throw SchemaError(where + ".form: unknown form \"" + name + "\"");
}

json to_json(const FunctionSpec& spec) {
  if (spec.form() == FunctionSpec::Form::constant) {
    return {{"form", "constant"}, {"params", {spec.intercept()}}};
  }
  return {{"form", "affine"}, {"params", {spec.intercept(), spec.slope()}}};
}

SdeProblem problem_from_json(const json& j) {
  require_known_keys(j, {"x0", "drift", "diffusion"}, "problem");
  const double x0 = number_at(member(j, "x0", "problem"), "problem.x0");

  const auto& dj = member(j, "drift", "problem");
  require_known_keys(dj, {"breakpoints", "pieces", "breakpoint_values"}, "problem.drift");
  auto breakpoints = dj.contains("breakpoints")
                         ? numbers_at(dj["breakpoints"], "problem.drift.breakpoints")
                         : std::vector<double>{};
  const auto& pj = member(dj, "pieces", "problem.drift");
  if (!pj.is_array()) {
    throw SchemaError("problem.drift.pieces: expected an array");
  }
  std::vector<FunctionSpec> pieces;
  for (std::size_t i = 0; i < pj.size(); ++i) {
    pieces.push_back(function_spec_from_json(pj[i], "problem.drift.pieces[" + std::to_string(i) + "]"));
  }
  std::optional<std::vector<double>> values;
  if (dj.contains("breakpoint_values")) {
    values = numbers_at(dj["breakpoint_values"], "problem.drift.breakpoint_values");
  }
  if (pieces.size() != breakpoints.size() + 1) {
    throw SchemaError("problem.drift: need exactly one more piece than breakpoints");
  }
  if (values && values->size() != breakpoints.size()) {
    throw SchemaError("problem.drift: need one breakpoint value per breakpoint");
  }

  const auto diffusion =
      function_spec_from_json(member(j, "diffusion", "problem"), "problem.diffusion");
  return SdeProblem(x0, PiecewiseDrift(std::move(breakpoints), std::move(pieces), std::move(values)),
                    Diffusion(diffusion));
}

json to_json(const SdeProblem& problem) {
  const auto& drift = problem.drift();
  json pieces = json::array();
  for (const auto& piece : drift.pieces()) {
    pieces.push_back(to_json(piece));
  }
  return {{"x0", problem.x0()},
          {"drift",
           {{"breakpoints", std::vector<double>(drift.breakpoints().begin(), drift.breakpoints().end())},
            {"pieces", pieces},
            {"breakpoint_values", std::vector<double>(drift.breakpoint_values().begin(),
                                                      drift.breakpoint_values().end())}}},
          {"diffusion", to_json(problem.diffusion().spec())}};
}

}  // namespace sdekit
