#include "sdekit/g_transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdekit {

double bump(double u) {
  if (u < -1.0 || u > 1.0) {
    return 0.0;
  }
  const double w = 1.0 - u * u;
  return w * w * w;
}

double bump_d1(double u) {
  if (u < -1.0 || u > 1.0) {
    return 0.0;
  }
  const double w = 1.0 - u * u;
  return -6.0 * u * w * w;
}

double bump_d2(double u) {
  if (u < -1.0 || u > 1.0) {
    return 0.0;
  }
  return (1.0 - u * u) * (30.0 * u * u - 6.0);
}

GTransform GTransform::identity() { return GTransform(); }

std::size_t GTransform::active_bump(double x) const {
  if (xi_.empty()) {
    return npos;
  }
  const auto it = std::lower_bound(xi_.begin(), xi_.end(), x);
  if (it != xi_.end() && *it - x < nu_) {
    return static_cast<std::size_t>(it - xi_.begin());
  }
  if (it != xi_.begin() && x - *(it - 1) < nu_) {
    return static_cast<std::size_t>(it - xi_.begin()) - 1;
  }
  return npos;
}

double GTransform::value(double x) const {
  const auto i = active_bump(x);
  if (i == npos) {
    return x;
  }
  const double d = x - xi_[i];
  return x + alpha_[i] * d * std::abs(d) * bump(d / nu_);
}

double GTransform::derivative(double x) const {
  const auto i = active_bump(x);
  if (i == npos) {
    return 1.0;
  }
  const double d = x - xi_[i];
  const double ad = std::abs(d);
  const double u = d / nu_;
  return 1.0 + alpha_[i] * (2.0 * ad * bump(u) + d * ad * bump_d1(u) / nu_);
}

double GTransform::second_derivative(double x) const {
  const auto i = active_bump(x);
  if (i == npos) {
    return 0.0;
  }
  const double d = x - xi_[i];
  if (d == 0.0) {
    // Right limit of the classical formula is 2 alpha_i.
    return 2.0 * alpha_[i] + derivative(x) * jump_correction_[i];
  }
  const double ad = std::abs(d);
  const double s = d > 0.0 ? 1.0 : -1.0;
  const double u = d / nu_;
  return alpha_[i] *
         (2.0 * s * bump(u) + 4.0 * ad * bump_d1(u) / nu_ + d * ad * bump_d2(u) / (nu_ * nu_));
}

double GTransform::inverse(double y, double tol) const {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("inverse tolerance must be positive");
  }
  const double target_tol = tol * std::max(1.0, std::abs(y));
  double x = y;
  double residual = value(x) - y;
  if (std::abs(residual) <= target_tol) {
    return x;
  }

  // G^{-1} is Lipschitz with constant 1/gprime_min, which bounds |x* - y|.
  const double reach = std::abs(residual) / gprime_min_ + 1.0;
  double lo = y - reach;
  double hi = y + reach;
  for (int expand = 0; value(lo) > y; ++expand) {
    if (expand > 60) throw InversionError("cannot bracket G^{-1}: lower end");
    lo -= (hi - lo);
  }
  for (int expand = 0; value(hi) < y; ++expand) {
    if (expand > 60) throw InversionError("cannot bracket G^{-1}: upper end");
    hi += (hi - lo);
  }

  constexpr int kNewtonIterations = 100;
  constexpr int kBisectionIterations = 200;
  for (int iter = 0; iter < kNewtonIterations + kBisectionIterations; ++iter) {
    if (residual < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = 0.5 * (lo + hi);
    if (iter < kNewtonIterations) {
      const double newton = x - residual / derivative(x);
      if (newton > lo && newton < hi) {
        next = newton;
      }
    }
    const double next_residual = value(next) - y;
    if (std::abs(next_residual) <= target_tol) {
      // One polishing step; Newton converges quadratically here.
      const double polished = next - next_residual / derivative(next);
      if (std::abs(value(polished) - y) < std::abs(next_residual)) {
        return polished;
      }
      return next;
    }
    if (next == x) {
      break;
    }
    x = next;
    residual = next_residual;
  }
  std::ostringstream msg;
  msg << "G^{-1} did not converge for y = " << y << " (gprime bounds may be corrupt)";
  throw InversionError(msg.str());
}

// Inside a support, G'(x) = 1 + alpha nu h(u) with u = (x - xi) / nu and
// h(u) = |u| (1 - u^2)^2 (2 - 8 u^2). The extremes of h on [-1, 1] are attained
// at u^2 = (17 -+ sqrt(177)) / 56.
void GTransform::compute_derivative_bounds() {
  constexpr double h_max = 0.32989332668335424852;
  constexpr double h_min = -0.36075061905201101379;
  gprime_min_ = 1.0;
  gprime_max_ = 1.0;
  for (const double alpha : alpha_) {
    const double a = alpha * nu_ * h_max;
    const double b = alpha * nu_ * h_min;
    gprime_min_ = std::min({gprime_min_, 1.0 + a, 1.0 + b});
    gprime_max_ = std::max({gprime_max_, 1.0 + a, 1.0 + b});
  }
}

GTransform build_transform(const SdeProblem& problem, double nu_fraction) {
  if (!(nu_fraction > 0.0 && nu_fraction < 1.0)) {
    throw std::invalid_argument("nu_fraction must lie in (0, 1)");
  }
  const auto report = validate(problem);
  if (!report.admissible) {
    throw std::invalid_argument("cannot transform inadmissible problem: " + report.reason());
  }

  GTransform t;
  const auto& drift = problem.drift();
  const std::size_t k = drift.breakpoint_count();
  if (k == 0) {
    return t;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  t.xi_.assign(drift.breakpoints().begin(), drift.breakpoints().end());
  double rho = inf;
  for (std::size_t i = 0; i < k; ++i) {
    const auto [left, right] = drift.limits(i + 1);
    const double sigma = problem.diffusion()(t.xi_[i]);
    const double sigma2 = sigma * sigma;
    const double alpha = (left - right) / (2.0 * sigma2);
    t.alpha_.push_back(alpha);
    t.jump_correction_.push_back(2.0 * (right - drift.breakpoint_values()[i]) / sigma2);
    if (alpha != 0.0) {
      rho = std::min(rho, 1.0 / (6.0 * std::abs(alpha)));
    }
    if (i > 0) {
      rho = std::min(rho, 0.5 * (t.xi_[i] - t.xi_[i - 1]));
    }
  }
  t.rho_ = rho;
  t.nu_ = std::isinf(rho) ? 1.0 : nu_fraction * rho;
  t.compute_derivative_bounds();
  return t;
}

double g(const GTransform& t, double x) { return t.value(x); }
double g_prime(const GTransform& t, double x) { return t.derivative(x); }
double g_second(const GTransform& t, double x) { return t.second_derivative(x); }
double g_inverse(const GTransform& t, double y, double tol) { return t.inverse(y, tol); }

TransformedProblem::TransformedProblem(GTransform transform, SdeProblem problem)
    : transform_(std::move(transform)),
      problem_(std::move(problem)),
      z0_(transform_.value(problem_.x0())) {
  const auto [lo, hi] = sampling_window();
  lipschitz_ = estimate_lipschitz(*this, lo, hi, 1u << 14);
}

TransformedPoint TransformedProblem::evaluate(double z) const {
  const double x = transform_.inverse(z);
  const double mu = problem_.drift()(x);
  const double sigma = problem_.diffusion()(x);
  if (transform_.is_identity()) {
    return {x, mu, sigma};
  }
  const double gp = transform_.derivative(x);
  const double gpp = transform_.second_derivative(x);
  return {x, gp * mu + 0.5 * gpp * sigma * sigma, gp * sigma};
}

std::pair<double, double> TransformedProblem::sampling_window() const {
  const auto xi = transform_.breakpoints();
  double lo = problem_.x0();
  double hi = problem_.x0();
  if (!xi.empty()) {
    lo = std::min(lo, xi.front());
    hi = std::max(hi, xi.back());
  }
  return {transform_.value(lo - 2.0), transform_.value(hi + 2.0)};
}

TransformedProblem transformed_problem(const GTransform& t, const SdeProblem& problem) {
  return TransformedProblem(t, problem);
}

LipschitzEstimate estimate_lipschitz(const TransformedProblem& tp, double lo, double hi,
                                     std::size_t points) {
  if (points < 2 || !(hi > lo)) {
    throw std::invalid_argument("Lipschitz sampling needs at least two points on a nonempty window");
  }
  LipschitzEstimate est;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  auto prev_z = lo;
  auto prev = tp.evaluate(prev_z);
  for (std::size_t m = 1; m < points; ++m) {
    const double z = lo + step * static_cast<double>(m);
    const auto cur = tp.evaluate(z);
    const double dz = z - prev_z;
    est.drift = std::max(est.drift, std::abs(cur.drift - prev.drift) / dz);
    est.diffusion = std::max(est.diffusion, std::abs(cur.diffusion - prev.diffusion) / dz);
    prev_z = z;
    prev = cur;
  }
  return est;
}

}  // namespace sdekit
