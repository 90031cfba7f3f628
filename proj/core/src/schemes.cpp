#include "sdekit/schemes.hpp"

#include <cmath>
#include <limits>

namespace sdekit {

double linear_interpolant_eval(const EmPath& path, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::out_of_range("interpolation time must lie in [0, 1]");
  }
  if (path.values.size() != path.n + 1 || path.n == 0) {
    throw std::invalid_argument("malformed Euler-Maruyama path");
  }
  const double n = static_cast<double>(path.n);
  const double s = n * t;
  // Snap to a node when n*t is a rounding error away from an integer.
  const double nearest = std::round(s);
  if (std::abs(s - nearest) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, s)) {
    return path.values[static_cast<std::size_t>(nearest)];
  }
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i >= path.n) {
    i = path.n - 1;
  }
  const double di = static_cast<double>(i);
  return (s - di) * path.values[i + 1] + (di + 1.0 - s) * path.values[i];
}

std::vector<double> linear_interpolant_on_fine(const EmPath& path, std::size_t n_fine) {
  if (path.n == 0 || n_fine % path.n != 0) {
    throw std::invalid_argument("coarse step count must divide the fine step count");
  }
  const std::size_t ratio = n_fine / path.n;
  const double m = static_cast<double>(ratio);
  std::vector<double> out(n_fine + 1);
  for (std::size_t i = 0; i < path.n; ++i) {
    out[i * ratio] = path.values[i];
    for (std::size_t r = 1; r < ratio; ++r) {
      const double rd = static_cast<double>(r);
      out[i * ratio + r] = (rd / m) * path.values[i + 1] + ((m - rd) / m) * path.values[i];
    }
  }
  out[n_fine] = path.values[path.n];
  return out;
}

EmPath transformed_em(const TransformedProblem& tp, std::span<const double> increments) {
  const std::size_t n = increments.size();
  if (n == 0) {
    throw std::invalid_argument("Euler-Maruyama needs at least one step");
  }
  const double h = 1.0 / static_cast<double>(n);
  EmPath out{n, std::vector<double>(n + 1)};
  double z = tp.z0();
  for (std::size_t i = 0; i < n; ++i) {
    // evaluate() inverts G once; the preimage is the mapped-back node.
    const auto p = tp.evaluate(z);
    out.values[i] = p.x;
    z = z + p.drift * h + p.diffusion * increments[i];
  }
  out.values[n] = tp.transform().inverse(z);
  return out;
}

EmPath transformed_em(const SdeProblem& /*problem*/, const TransformedProblem& tp,
                      const GTransform& /*t*/, std::span<const double> increments, std::size_t n) {
  if (increments.size() != n) {
    throw std::invalid_argument("increment count does not match step count");
  }
  return transformed_em(tp, increments);
}

ContinuousEmEval transformed_em_continuous_on_fine(const TransformedProblem& tp,
                                                   const BrownianPath& path, std::size_t n) {
  auto cont = em_continuous_on_fine(tp, path, n);
  const auto& transform = tp.transform();
  for (double& v : cont.values) {
    v = transform.inverse(v);
  }
  return cont;
}

double sign_change_occupation(const ContinuousEmEval& cont, double xi) {
  if (cont.n == 0 || cont.n_fine % cont.n != 0 || cont.values.size() != cont.n_fine + 1) {
    throw std::invalid_argument("malformed continuous Euler-Maruyama evaluation");
  }
  const std::size_t ratio = cont.n_fine / cont.n;
  std::size_t hits = 0;
  for (std::size_t j = 1; j <= cont.n_fine; ++j) {
    const double node = cont.values[(j / ratio) * ratio];
    if ((cont.values[j] - xi) * (node - xi) <= 0.0) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(cont.n_fine);
}

}  // namespace sdekit
