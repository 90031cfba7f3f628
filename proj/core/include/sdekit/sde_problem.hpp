#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdekit/function_spec.hpp"

namespace sdekit {

/// Drift and diffusion evaluated at one state.
struct LocalCoefficients {
  double drift = 0.0;
  double diffusion = 0.0;
};

/// Piecewise drift with breakpoints xi_1 < ... < xi_k. Piece i lives on the
/// open interval (xi_{i-1}, xi_i) with xi_0 = -inf and xi_{k+1} = +inf; the
/// value exactly at xi_i is declared separately.
class PiecewiseDrift {
 public:
  /// Single global piece (k = 0).
  explicit PiecewiseDrift(FunctionSpec piece);

  /// Breakpoint values default to the right limit when omitted.
  /// Throws std::invalid_argument on count mismatch; ordering is left to
  /// `validate` so that malformed input can still be reported on.
  PiecewiseDrift(std::vector<double> breakpoints, std::vector<FunctionSpec> pieces,
                 std::optional<std::vector<double>> breakpoint_values = std::nullopt);

  double operator()(double x) const;

  /// One-sided limits (mu(xi_i-), mu(xi_i+)) for 1-based index i.
  std::pair<double, double> limits(std::size_t i) const;

  std::size_t breakpoint_count() const { return breakpoints_.size(); }
  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const FunctionSpec> pieces() const { return pieces_; }
  std::span<const double> breakpoint_values() const { return breakpoint_values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<FunctionSpec> pieces_;
  std::vector<double> breakpoint_values_;
};

/// Globally Lipschitz diffusion coefficient.
class Diffusion {
 public:
  explicit Diffusion(FunctionSpec spec) : spec_(spec) {}

  double operator()(double x) const { return spec_(x); }
  const FunctionSpec& spec() const { return spec_; }

 private:
  FunctionSpec spec_;
};

/// dX = mu(X) dt + sigma(X) dW on [0, 1], X_0 = x0.
class SdeProblem {
 public:
  SdeProblem(double x0, PiecewiseDrift drift, Diffusion diffusion);

  double x0() const { return x0_; }
  const PiecewiseDrift& drift() const { return drift_; }
  const Diffusion& diffusion() const { return diffusion_; }

  /// Linear-growth constant K with |mu(x)| + |sigma(x)| <= K (1 + |x|).
  double growth_constant() const { return growth_constant_; }

  LocalCoefficients coefficients(double x) const { return {drift_(x), diffusion_(x)}; }

 private:
  double x0_;
  PiecewiseDrift drift_;
  Diffusion diffusion_;
  double growth_constant_;
};

double eval_drift(const PiecewiseDrift& drift, double x);
std::pair<double, double> drift_limits(const PiecewiseDrift& drift, std::size_t i);
double eval_diffusion(const Diffusion& diffusion, double x);

struct ValidationCheck {
  std::string assumption;  // "A1", "A2" or "LG"
  std::string description;
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  double growth_constant = 0.0;
  bool admissible = false;

  /// First failing check formatted as "<assumption> violated: <description>",
  /// empty when admissible.
  std::string reason() const;
};

inline constexpr double kDefaultZeroTolerance = 1e-12;

ValidationReport validate(const SdeProblem& problem, double zero_tol = kDefaultZeroTolerance);

}  // namespace sdekit
