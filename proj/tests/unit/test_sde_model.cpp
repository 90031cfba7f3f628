#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "problems.hpp"
#include "sdekit/problem_json.hpp"
#include "sdekit/sde_problem.hpp"

namespace sdekit {
namespace {

using testing::p1_problem;

PiecewiseDrift p1_drift() { return p1_problem().drift(); }

TEST(EvalDrift, IdentityDrift) {
  EXPECT_EQ(eval_drift(PiecewiseDrift(FunctionSpec::affine(0.0, 1.0)), 2.5), 2.5);
}

TEST(EvalDrift, PieceLookupAndBreakpointValue) {
  const auto drift = p1_drift();
  EXPECT_EQ(eval_drift(drift, -0.3), 1.0);
  EXPECT_EQ(eval_drift(drift, 0.0), -1.0);
  EXPECT_EQ(eval_drift(drift, 0.3), -1.0);
}

TEST(EvalDrift, DeclaredBreakpointValueOverridesPieces) {
  const PiecewiseDrift drift({0.0}, {FunctionSpec::constant(1.0), FunctionSpec::constant(-1.0)},
                             std::vector<double>{0.25});
  EXPECT_EQ(drift(0.0), 0.25);
}

TEST(EvalDrift, BreakpointValueDefaultsToRightLimit) {
  const PiecewiseDrift drift({1.0}, {FunctionSpec::affine(0, 1), FunctionSpec::affine(2, 1)});
  EXPECT_EQ(drift(1.0), 3.0);
}

TEST(DriftLimits, Examples) {
  EXPECT_EQ(drift_limits(p1_drift(), 1), std::make_pair(1.0, -1.0));
  const PiecewiseDrift affine({1.0}, {FunctionSpec::affine(0, 1), FunctionSpec::affine(2, 1)});
  EXPECT_EQ(drift_limits(affine, 1), std::make_pair(1.0, 3.0));
  const PiecewiseDrift removable({0.0}, {FunctionSpec::constant(5), FunctionSpec::constant(5)});
  EXPECT_EQ(drift_limits(removable, 1), std::make_pair(5.0, 5.0));
}

TEST(DriftLimits, IndexOutOfRange) {
  EXPECT_THROW(drift_limits(p1_drift(), 0), std::out_of_range);
  EXPECT_THROW(drift_limits(p1_drift(), 2), std::out_of_range);
}

TEST(EvalDiffusion, Examples) {
  EXPECT_EQ(eval_diffusion(Diffusion(FunctionSpec::constant(1.0)), 7.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_diffusion(Diffusion(FunctionSpec::affine(0.0, 0.2)), 2.0), 0.4);
  EXPECT_EQ(eval_diffusion(Diffusion(FunctionSpec::affine(1.0, 0.5)), -2.0), 0.0);
}

TEST(PiecewiseDrift, CountMismatchThrows) {
  EXPECT_THROW(PiecewiseDrift({0.0}, {FunctionSpec::constant(1.0)}), std::invalid_argument);
  EXPECT_THROW(PiecewiseDrift({0.0}, {FunctionSpec::constant(1), FunctionSpec::constant(2)},
                              std::vector<double>{}),
               std::invalid_argument);
}

TEST(Validate, P1IsAdmissibleWithKTwo) {
  const auto report = validate(p1_problem(), 1e-12);
  EXPECT_TRUE(report.admissible);
  EXPECT_EQ(report.growth_constant, 2.0);
  EXPECT_TRUE(report.reason().empty());
}

TEST(Validate, DiffusionZeroAtBreakpointViolatesA2) {
  const SdeProblem problem(0.0, p1_drift(), Diffusion(FunctionSpec::affine(0.0, 1.0)));
  const auto report = validate(problem);
  EXPECT_FALSE(report.admissible);
  EXPECT_EQ(report.reason().rfind("A2 violated", 0), 0u) << report.reason();
}

TEST(Validate, ZeroToleranceIsStrict) {
  const SdeProblem problem(0.0, p1_drift(), Diffusion(FunctionSpec::constant(1e-13)));
  EXPECT_FALSE(validate(problem, 1e-12).admissible);
  EXPECT_TRUE(validate(problem, 1e-14).admissible);
  EXPECT_THROW(validate(problem, 0.0), std::invalid_argument);
}

TEST(Validate, LipschitzCaseWithoutBreakpoints) {
  const SdeProblem problem(0.0, PiecewiseDrift(FunctionSpec::affine(1.0, -1.0)),
                           Diffusion(FunctionSpec::constant(1.0)));
  const auto report = validate(problem);
  EXPECT_TRUE(report.admissible);
  EXPECT_EQ(report.growth_constant, 3.0);
}

TEST(Validate, UnorderedBreakpointsViolateA1) {
  const SdeProblem problem(
      0.0,
      PiecewiseDrift({1.0, 0.0}, {FunctionSpec::constant(1), FunctionSpec::constant(0),
                                  FunctionSpec::constant(-1)}),
      Diffusion(FunctionSpec::constant(1.0)));
  const auto report = validate(problem);
  EXPECT_FALSE(report.admissible);
  EXPECT_EQ(report.reason().rfind("A1 violated", 0), 0u);
}

TEST(Validate, NonFiniteParameterViolatesA1) {
  const SdeProblem problem(0.0, PiecewiseDrift(FunctionSpec::affine(0.0, INFINITY)),
                           Diffusion(FunctionSpec::constant(1.0)));
  EXPECT_FALSE(validate(problem).admissible);
}

// Random admissible problems with up to three breakpoints.
SdeProblem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_int_distribution<int> count(0, 3);
  const int k = count(rng);
  std::vector<double> xi;
  double at = coef(rng);
  for (int i = 0; i < k; ++i) {
    xi.push_back(at);
    at += 0.1 + std::abs(coef(rng));
  }
  std::vector<FunctionSpec> pieces;
  for (int i = 0; i <= k; ++i) {
    pieces.push_back(rng() % 2 ? FunctionSpec::constant(coef(rng))
                               : FunctionSpec::affine(coef(rng), coef(rng)));
  }
  return SdeProblem(coef(rng), PiecewiseDrift(xi, pieces),
                    Diffusion(FunctionSpec::affine(coef(rng), coef(rng))));
}

TEST(SdeProblemProperty, LinearGrowthHoldsOnWideRange) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> xs(-1e6, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto problem = random_problem(rng);
    const double k = problem.growth_constant();
    for (int s = 0; s < 500; ++s) {
      const double x = s == 0 ? 0.0 : xs(rng);
      const double lhs = std::abs(eval_drift(problem.drift(), x)) +
                         std::abs(eval_diffusion(problem.diffusion(), x));
      EXPECT_LE(lhs, k * (1.0 + std::abs(x)) * (1.0 + 1e-12)) << "x = " << x;
    }
    for (const double xi : problem.drift().breakpoints()) {
      const double lhs = std::abs(problem.drift()(xi)) + std::abs(problem.diffusion()(xi));
      EXPECT_LE(lhs, k * (1.0 + std::abs(xi)) * (1.0 + 1e-12));
    }
  }
}

TEST(SdeProblemProperty, LimitsMatchNearbyEvaluation) {
  std::mt19937_64 rng(7);
  constexpr double h = 1e-8;
  for (int trial = 0; trial < 200; ++trial) {
    const auto problem = random_problem(rng);
    const auto& drift = problem.drift();
    for (std::size_t i = 1; i <= drift.breakpoint_count(); ++i) {
      const double xi = drift.breakpoints()[i - 1];
      const auto [left, right] = drift_limits(drift, i);
      const auto& lp = drift.pieces()[i - 1];
      const auto& rp = drift.pieces()[i];
      EXPECT_NEAR(eval_drift(drift, xi - h), left, lp.lipschitz() * h * 1.01 + 1e-12);
      EXPECT_NEAR(eval_drift(drift, xi + h), right, rp.lipschitz() * h * 1.01 + 1e-12);
    }
  }
}

TEST(SdeProblemProperty, EvalDriftIsPure) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xs(-10.0, 10.0);
  const auto problem = random_problem(rng);
  for (int s = 0; s < 1000; ++s) {
    const double x = xs(rng);
    const double a = eval_drift(problem.drift(), x);
    const double b = eval_drift(problem.drift(), x);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
}

TEST(ProblemJson, ParsesSchemaAndRoundTrips) {
  const auto j = nlohmann::json::parse(R"({
    "x0": 0.5,
    "drift": {"breakpoints": [0], "pieces": [{"form": "constant", "params": [1]},
                                             {"form": "affine", "params": [-1, 2]}],
              "breakpoint_values": [0.25]},
    "diffusion": {"form": "affine", "params": [1, 0.5]}})");
  const auto problem = problem_from_json(j);
  EXPECT_EQ(problem.x0(), 0.5);
  EXPECT_EQ(problem.drift()(0.0), 0.25);
  EXPECT_EQ(problem.drift()(1.0), 1.0);
  EXPECT_EQ(problem.diffusion()(2.0), 2.0);
  EXPECT_EQ(to_json(problem_from_json(to_json(problem))), to_json(problem));
}

TEST(ProblemJson, BreakpointValuesOptional) {
  const auto j = nlohmann::json::parse(R"({"x0": 0,
    "drift": {"breakpoints": [0], "pieces": [{"form": "constant", "params": [1]},
                                             {"form": "constant", "params": [-1]}]},
    "diffusion": {"form": "constant", "params": [1]}})");
  EXPECT_EQ(problem_from_json(j).drift()(0.0), -1.0);
}

TEST(ProblemJson, RejectsUnknownKeysAndBadForms) {
  const auto base = nlohmann::json::parse(R"({"x0": 0,
    "drift": {"pieces": [{"form": "constant", "params": [1]}]},
    "diffusion": {"form": "constant", "params": [1]}})");
  EXPECT_NO_THROW(problem_from_json(base));

  auto extra = base;
  extra["colour"] = "blue";
  EXPECT_THROW(problem_from_json(extra), SchemaError);

  auto bad_form = base;
  bad_form["diffusion"]["form"] = "sine";
  EXPECT_THROW(problem_from_json(bad_form), SchemaError);

  auto bad_arity = base;
  bad_arity["diffusion"]["params"] = {1, 2};
  EXPECT_THROW(problem_from_json(bad_arity), SchemaError);

  auto bad_count = base;
  bad_count["drift"]["breakpoints"] = {0.0};
  EXPECT_THROW(problem_from_json(bad_count), SchemaError);

  auto missing = base;
  missing.erase("x0");
  EXPECT_THROW(problem_from_json(missing), SchemaError);
}

}  // namespace
}  // namespace sdekit
