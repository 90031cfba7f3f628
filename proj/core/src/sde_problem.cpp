#include "sdekit/sde_problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sdekit {

namespace {

std::string describe(const char* prefix, double value) {
  std::ostringstream out;
  out << prefix << value;
  return out.str();
}

}  // namespace

PiecewiseDrift::PiecewiseDrift(FunctionSpec piece) : pieces_{piece} {}

PiecewiseDrift::PiecewiseDrift(std::vector<double> breakpoints, std::vector<FunctionSpec> pieces,
                               std::optional<std::vector<double>> breakpoint_values)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (pieces_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("drift needs exactly one more piece than breakpoints");
  }
  if (breakpoint_values) {
    if (breakpoint_values->size() != breakpoints_.size()) {
      throw std::invalid_argument("drift needs one breakpoint value per breakpoint");
    }
    breakpoint_values_ = std::move(*breakpoint_values);
  } else {
    breakpoint_values_.reserve(breakpoints_.size());
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      breakpoint_values_.push_back(pieces_[i + 1](breakpoints_[i]));
    }
  }
}

double PiecewiseDrift::operator()(double x) const {
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  const auto index = static_cast<std::size_t>(it - breakpoints_.begin());
  if (it != breakpoints_.end() && *it == x) {
    return breakpoint_values_[index];
  }
  return pieces_[index](x);
}

std::pair<double, double> PiecewiseDrift::limits(std::size_t i) const {
  if (i == 0 || i > breakpoints_.size()) {
    throw std::out_of_range("breakpoint index out of range");
  }
  const double xi = breakpoints_[i - 1];
  return {pieces_[i - 1](xi), pieces_[i](xi)};
}

SdeProblem::SdeProblem(double x0, PiecewiseDrift drift, Diffusion diffusion)
    : x0_(x0), drift_(std::move(drift)), diffusion_(diffusion) {
  double drift_bound = 0.0;
  for (const auto& piece : drift_.pieces()) {
    drift_bound = std::max(drift_bound, piece.growth_bound());
  }
  const auto xi = drift_.breakpoints();
  const auto values = drift_.breakpoint_values();
  for (std::size_t i = 0; i < xi.size(); ++i) {
    drift_bound = std::max(drift_bound, std::abs(values[i]) / (1.0 + std::abs(xi[i])));
  }
  growth_constant_ = drift_bound + diffusion_.spec().growth_bound();
}

double eval_drift(const PiecewiseDrift& drift, double x) { return drift(x); }

std::pair<double, double> drift_limits(const PiecewiseDrift& drift, std::size_t i) {
  return drift.limits(i);
}

double eval_diffusion(const Diffusion& diffusion, double x) { return diffusion(x); }

std::string ValidationReport::reason() const {
  for (const auto& check : checks) {
    if (!check.passed) {
      return check.assumption + " violated: " + check.description;
    }
  }
  return {};
}

ValidationReport validate(const SdeProblem& problem, double zero_tol) {
  if (!(zero_tol > 0.0)) {
    throw std::invalid_argument("zero tolerance must be positive");
  }
  ValidationReport report;
  const auto& drift = problem.drift();
  const auto xi = drift.breakpoints();

  bool finite = std::isfinite(problem.x0()) && problem.diffusion().spec().is_finite();
  for (const auto& piece : drift.pieces()) {
    finite = finite && piece.is_finite();
  }
  for (std::size_t i = 0; i < xi.size(); ++i) {
    finite = finite && std::isfinite(xi[i]) && std::isfinite(drift.breakpoint_values()[i]);
  }
  report.checks.push_back({"A1", "all parameters finite (finite Lipschitz constants)", finite});

  const bool ordered = std::adjacent_find(xi.begin(), xi.end(), std::greater_equal<>()) == xi.end();
  report.checks.push_back({"A1", "breakpoints strictly increasing", ordered});

  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double sigma = problem.diffusion()(xi[i]);
    const bool nonzero = std::abs(sigma) > zero_tol;
    report.checks.push_back(
        {"A2", describe("diffusion nonzero at breakpoint ", xi[i]) + describe(", sigma = ", sigma),
         nonzero});
  }

  report.growth_constant = problem.growth_constant();
  report.checks.push_back({"LG", describe("linear growth constant K = ", report.growth_constant),
                           std::isfinite(report.growth_constant)});

  report.admissible = std::all_of(report.checks.begin(), report.checks.end(),
                                  [](const ValidationCheck& c) { return c.passed; });
  return report;
}

}  // namespace sdekit
