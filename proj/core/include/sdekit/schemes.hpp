#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "sdekit/brownian.hpp"
#include "sdekit/g_transform.hpp"
#include "sdekit/sde_problem.hpp"

namespace sdekit {

/// Anything with an initial value and pointwise drift/diffusion. Both the
/// original problem and the transformed Z-equation qualify; so does any
/// user-supplied model with richer coefficient families.
template <class M>
concept ScalarSde = requires(const M& m, double x) {
  { m.x0() } -> std::convertible_to<double>;
  { m.coefficients(x) } -> std::same_as<LocalCoefficients>;
};

/// Discrete Euler-Maruyama values at the grid i/n, i = 0..n.
struct EmPath {
  std::size_t n = 0;
  std::vector<double> values;
};

/// Time-continuous Euler-Maruyama scheme with step 1/n sampled at the fine
/// grid j/n_fine, j = 0..n_fine. Requires n | n_fine.
struct ContinuousEmEval {
  std::size_t n = 0;
  std::size_t n_fine = 0;
  std::vector<double> values;
};

namespace detail {

// Discrete recursion; optionally records the frozen coefficients per node.
template <ScalarSde Model>
EmPath run_em(const Model& model, std::span<const double> increments,
              std::vector<LocalCoefficients>* frozen) {
  const std::size_t n = increments.size();
  if (n == 0) {
    throw std::invalid_argument("Euler-Maruyama needs at least one step");
  }
  const double h = 1.0 / static_cast<double>(n);
  EmPath path{n, std::vector<double>(n + 1)};
  if (frozen) {
    frozen->resize(n);
  }
  double x = model.x0();
  path.values[0] = x;
  for (std::size_t i = 0; i < n; ++i) {
    const LocalCoefficients c = model.coefficients(x);
    if (frozen) {
      (*frozen)[i] = c;
    }
    x = x + c.drift * h + c.diffusion * increments[i];
    path.values[i + 1] = x;
  }
  return path;
}

}  // namespace detail

/// X_{(i+1)/n} = X_{i/n} + mu(X_{i/n}) / n + sigma(X_{i/n}) (W_{(i+1)/n} - W_{i/n}).
template <ScalarSde Model>
EmPath em_discrete(const Model& model, std::span<const double> increments) {
  return detail::run_em(model, increments, nullptr);
}

template <ScalarSde Model>
EmPath em_discrete(const Model& model, std::span<const double> increments, std::size_t n) {
  if (increments.size() != n) {
    throw std::invalid_argument("increment count does not match step count");
  }
  return em_discrete(model, increments);
}

/// Value at t = j/n_fine is X_{t_} + mu(X_{t_})(t - t_) + sigma(X_{t_})(W_t - W_{t_})
/// with t_ = floor(n t)/n. Coarse-node values are copied verbatim.
template <ScalarSde Model>
ContinuousEmEval em_continuous_on_fine(const Model& model, const BrownianPath& path, std::size_t n) {
  const std::size_t n_fine = path.n_fine();
  if (n == 0 || n_fine % n != 0) {
    throw std::invalid_argument("coarse step count must divide the fine step count");
  }
  const std::size_t ratio = n_fine / n;
  std::vector<LocalCoefficients> frozen;
  const auto nodes = detail::run_em(model, coarsen(path, n), &frozen);
  const auto w = path.values();
  const double fine_h = 1.0 / static_cast<double>(n_fine);

  ContinuousEmEval out{n, n_fine, std::vector<double>(n_fine + 1)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = nodes.values[i];
    const auto& c = frozen[i];
    const std::size_t base = i * ratio;
    out.values[base] = x;
    for (std::size_t r = 1; r < ratio; ++r) {
      out.values[base + r] =
          x + c.drift * (static_cast<double>(r) * fine_h) + c.diffusion * (w[base + r] - w[base]);
    }
  }
  out.values[n_fine] = nodes.values[n];
  return out;
}

/// Piecewise-linear interpolation of the discrete nodes at t in [0, 1].
double linear_interpolant_eval(const EmPath& path, double t);

/// Same interpolant sampled at j/n_fine, using exact integer weights.
std::vector<double> linear_interpolant_on_fine(const EmPath& path, std::size_t n_fine);

/// Euler-Maruyama on the Z-equation, nodes mapped back through G^{-1}.
EmPath transformed_em(const TransformedProblem& tp, std::span<const double> increments);
EmPath transformed_em(const SdeProblem& problem, const TransformedProblem& tp, const GTransform& t,
                      std::span<const double> increments, std::size_t n);

/// Time-continuous scheme for the Z-equation on the fine grid, mapped back
/// through G^{-1} pointwise.
ContinuousEmEval transformed_em_continuous_on_fine(const TransformedProblem& tp,
                                                   const BrownianPath& path, std::size_t n);

/// Fine-grid Riemann sum of 1{(X_t - xi)(X_{t_} - xi) <= 0} over (0, 1].
double sign_change_occupation(const ContinuousEmEval& cont, double xi);

}  // namespace sdekit
