#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdekit/sde_problem.hpp"

namespace sdekit {

/// phi(u) = (1 - u^2)^3 on [-1, 1], zero elsewhere, and its first two
/// derivatives. All three vanish at u = +-1, so the bump is C^2.
double bump(double u);
double bump_d1(double u);
double bump_d2(double u);

/// Thrown when the safeguarded Newton iteration for G^{-1} fails to converge.
class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Space transformation G(x) = x + sum_i alpha_i (x - xi_i)|x - xi_i| phi((x - xi_i)/nu)
/// that removes the drift discontinuities: Z = G(X) solves an SDE with
/// Lipschitz coefficients.
///
/// The bump supports [xi_i - nu, xi_i + nu] are pairwise disjoint and G maps
/// each of them onto itself, so G is the identity outside their union.
class GTransform {
 public:
  static constexpr double kDefaultInverseTolerance = 1e-12;

  /// G(x) = x.
  static GTransform identity();

  double operator()(double x) const { return value(x); }
  double value(double x) const;
  double derivative(double x) const;
  /// Bounded density of G'. Off the breakpoints this is the classical second
  /// derivative; at xi_i it is the right limit plus the correction that makes
  /// the transformed drift continuous for the declared mu(xi_i).
  double second_derivative(double x) const;
  double inverse(double y, double tol = kDefaultInverseTolerance) const;

  std::span<const double> breakpoints() const { return xi_; }
  std::span<const double> alphas() const { return alpha_; }
  double nu() const { return nu_; }
  /// Upper bound for nu; +infinity when every alpha_i vanishes and k <= 1.
  double rho() const { return rho_; }
  double gprime_min() const { return gprime_min_; }
  double gprime_max() const { return gprime_max_; }
  bool is_identity() const { return xi_.empty(); }

 private:
  friend GTransform build_transform(const SdeProblem& problem, double nu_fraction);

  GTransform() = default;

  // Index of the breakpoint whose open bump support contains x, or npos.
  std::size_t active_bump(double x) const;
  void compute_derivative_bounds();

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::vector<double> xi_;
  std::vector<double> alpha_;
  // 2 (mu(xi+) - mu(xi)) / sigma(xi)^2, multiplied by G'(xi) at the breakpoint.
  std::vector<double> jump_correction_;
  double nu_ = 1.0;
  double rho_ = std::numeric_limits<double>::infinity();
  double gprime_min_ = 1.0;
  double gprime_max_ = 1.0;
};

inline constexpr double kDefaultNuFraction = 0.5;

/// Throws std::invalid_argument for an inadmissible problem or a
/// nu_fraction outside (0, 1).
GTransform build_transform(const SdeProblem& problem, double nu_fraction = kDefaultNuFraction);

double g(const GTransform& t, double x);
double g_prime(const GTransform& t, double x);
double g_second(const GTransform& t, double x);
double g_inverse(const GTransform& t, double y, double tol = GTransform::kDefaultInverseTolerance);

/// Transformed coefficients evaluated at z together with the preimage x = G^{-1}(z).
struct TransformedPoint {
  double x = 0.0;
  double drift = 0.0;
  double diffusion = 0.0;
};

struct LipschitzEstimate {
  double drift = 0.0;
  double diffusion = 0.0;
};

/// dZ = mu~(Z) dt + sigma~(Z) dW with Z_0 = G(x0), where
///   mu~    = (G' mu + G'' sigma^2 / 2) o G^{-1},
///   sigma~ = (G' sigma) o G^{-1}.
class TransformedProblem {
 public:
  TransformedProblem(GTransform transform, SdeProblem problem);

  double x0() const { return z0_; }
  double z0() const { return z0_; }

  TransformedPoint evaluate(double z) const;
  LocalCoefficients coefficients(double z) const {
    const auto p = evaluate(z);
    return {p.drift, p.diffusion};
  }
  double drift(double z) const { return evaluate(z).drift; }
  double diffusion(double z) const { return evaluate(z).diffusion; }

  const GTransform& transform() const { return transform_; }
  const SdeProblem& problem() const { return problem_; }

  /// Difference-quotient estimates on the default sampling window.
  const LipschitzEstimate& lipschitz_estimates() const { return lipschitz_; }

  /// Default window in z: G applied to [min(x0, xi_1) - 2, max(x0, xi_k) + 2].
  std::pair<double, double> sampling_window() const;

 private:
  GTransform transform_;
  SdeProblem problem_;
  double z0_;
  LipschitzEstimate lipschitz_;
};

TransformedProblem transformed_problem(const GTransform& t, const SdeProblem& problem);

/// Max difference quotient of mu~ and sigma~ over `points` equispaced z in [lo, hi].
LipschitzEstimate estimate_lipschitz(const TransformedProblem& tp, double lo, double hi,
                                     std::size_t points);

}  // namespace sdekit
