#include "sdekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdekit/parallel.hpp"
#include "sdekit/schemes.hpp"

namespace sdekit {

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::em:
      return "em";
    case SchemeKind::transformed_em:
      return "transformed_em";
  }
  return "unknown";
}

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::transformed_fine:
      return "transformed_fine";
    case ReferenceKind::direct_fine:
      return "direct_fine";
    case ReferenceKind::closed_form_gbm:
      return "closed_form_gbm";
  }
  return "unknown";
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::final_time:
      return "final_time";
    case ErrorKind::sup_norm:
      return "sup_norm";
    case ErrorKind::path_lq:
      return "path_lq";
  }
  return "unknown";
}

std::optional<SchemeKind> parse_scheme(std::string_view name) {
  for (auto kind : {SchemeKind::em, SchemeKind::transformed_em}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<ReferenceKind> parse_reference(std::string_view name) {
  for (auto kind : {ReferenceKind::transformed_fine, ReferenceKind::direct_fine,
                    ReferenceKind::closed_form_gbm}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<ErrorKind> parse_error_kind(std::string_view name) {
  for (auto kind : {ErrorKind::final_time, ErrorKind::sup_norm, ErrorKind::path_lq}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

void StudyConfig::check() const {
  if (n_fine == 0) {
    throw std::invalid_argument("n_fine must be positive");
  }
  if (n_list.empty()) {
    throw std::invalid_argument("n_list must not be empty");
  }
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0 || n_fine % n_list[i] != 0) {
      throw std::invalid_argument("every n in n_list must divide n_fine (n = " +
                                  std::to_string(n_list[i]) + ")");
    }
    if (i > 0 && n_list[i] <= n_list[i - 1]) {
      throw std::invalid_argument("n_list must be strictly increasing");
    }
  }
  if (paths < 2) {
    throw std::invalid_argument("at least two Monte Carlo paths are required");
  }
  if (!(p >= 1.0) || std::isinf(p)) {
    throw std::invalid_argument("error moment p must lie in [1, inf)");
  }
  if (!(q >= 1.0)) {
    throw std::invalid_argument("path norm order q must lie in [1, inf]");
  }
  if (!(nu_fraction > 0.0 && nu_fraction < 1.0)) {
    throw std::invalid_argument("nu_fraction must lie in (0, 1)");
  }
}

MomentEstimate pth_mean(std::span<const double> values, double p) {
  if (values.size() < 2) {
    throw std::invalid_argument("p-th mean needs at least two samples");
  }
  const auto m = static_cast<double>(values.size());
  double sum = 0.0;
  for (const double v : values) {
    sum += std::pow(std::abs(v), p);
  }
  const double mean = sum / m;
  double ss = 0.0;
  for (const double v : values) {
    const double dev = std::pow(std::abs(v), p) - mean;
    ss += dev * dev;
  }
  const double se_mean = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  MomentEstimate out;
  out.value = std::pow(mean, 1.0 / p);
  // d/dm m^(1/p) = (1/p) m^(1/p - 1)
  out.std_error = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * se_mean : 0.0;
  return out;
}

double lq_norm_on_fine(std::span<const double> differences, double q) {
  if (differences.size() < 2) {
    throw std::invalid_argument("need at least two grid samples");
  }
  if (std::isinf(q)) {
    double max = 0.0;
    for (const double d : differences) {
      max = std::max(max, std::abs(d));
    }
    return max;
  }
  const std::size_t n_fine = differences.size() - 1;
  double sum = 0.0;
  for (std::size_t j = 1; j <= n_fine; ++j) {
    sum += std::pow(std::abs(differences[j]), q);
  }
  return std::pow(sum / static_cast<double>(n_fine), 1.0 / q);
}

std::optional<GbmParameters> as_gbm(const SdeProblem& problem) {
  const auto& drift = problem.drift();
  if (drift.breakpoint_count() != 0) {
    return std::nullopt;
  }
  const auto& mu = drift.pieces().front();
  const auto& sigma = problem.diffusion().spec();
  auto linear_rate = [](const FunctionSpec& f) -> std::optional<double> {
    if (f.intercept() != 0.0) return std::nullopt;
    return f.form() == FunctionSpec::Form::affine ? f.slope() : 0.0;
  };
  const auto a = linear_rate(mu);
  const auto b = linear_rate(sigma);
  if (!a || !b) {
    return std::nullopt;
  }
  return GbmParameters{*a, *b};
}

StudyContext::StudyContext(SdeProblem p, double nu_fraction)
    : problem(std::move(p)),
      transform(build_transform(problem, nu_fraction)),
      transformed(transform, problem) {}

std::vector<double> reference_path(const SdeProblem& problem, const GTransform& /*transform*/,
                                   const TransformedProblem& tp, const BrownianPath& path,
                                   ReferenceKind mode) {
  switch (mode) {
    case ReferenceKind::transformed_fine:
      return transformed_em(tp, path.increments()).values;
    case ReferenceKind::direct_fine:
      return em_discrete(problem, path.increments()).values;
    case ReferenceKind::closed_form_gbm: {
      const auto gbm = as_gbm(problem);
      if (!gbm) {
        throw std::invalid_argument("closed_form_gbm reference requires a GBM problem");
      }
      const auto w = path.values();
      const double n_fine = static_cast<double>(path.n_fine());
      const double drift = gbm->drift_rate - 0.5 * gbm->volatility * gbm->volatility;
      std::vector<double> out(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double t = static_cast<double>(j) / n_fine;
        out[j] = problem.x0() * std::exp(drift * t + gbm->volatility * w[j]);
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown reference mode");
}

ErrorSamples::ErrorSamples(StudyConfig config, std::vector<ErrorKind> kinds)
    : config_(std::move(config)), kinds_(std::move(kinds)) {
  data_.assign(kinds_.size() * config_.n_list.size() * config_.paths, 0.0);
}

bool ErrorSamples::has(ErrorKind kind) const {
  return std::find(kinds_.begin(), kinds_.end(), kind) != kinds_.end();
}

std::size_t ErrorSamples::offset(ErrorKind kind, std::size_t n_index) const {
  const auto it = std::find(kinds_.begin(), kinds_.end(), kind);
  if (it == kinds_.end()) {
    throw std::invalid_argument("error kind was not sampled: " + std::string(to_string(kind)));
  }
  if (n_index >= config_.n_list.size()) {
    throw std::out_of_range("n index out of range");
  }
  const auto k = static_cast<std::size_t>(it - kinds_.begin());
  return (k * config_.n_list.size() + n_index) * config_.paths;
}

std::span<const double> ErrorSamples::per_path(ErrorKind kind, std::size_t n_index) const {
  return {data_.data() + offset(kind, n_index), config_.paths};
}

std::span<double> ErrorSamples::slots(ErrorKind kind, std::size_t n_index) {
  return {data_.data() + offset(kind, n_index), config_.paths};
}

ErrorTable ErrorSamples::table(ErrorKind kind, std::optional<double> p) const {
  ErrorTable out;
  out.kind = kind;
  out.p = p.value_or(config_.p);
  out.q = config_.q;
  out.scheme = config_.scheme;
  out.reference = config_.reference;
  for (std::size_t ni = 0; ni < config_.n_list.size(); ++ni) {
    const auto est = pth_mean(per_path(kind, ni), out.p);
    out.rows.push_back({config_.n_list[ni], est.value, est.std_error, config_.paths});
  }
  return out;
}

ErrorSamples sample_errors(const StudyConfig& config, const SdeProblem& problem,
                           std::vector<ErrorKind> kinds) {
  config.check();
  if (kinds.empty()) {
    throw std::invalid_argument("no error kind requested");
  }
  if (config.reference == ReferenceKind::closed_form_gbm && !as_gbm(problem)) {
    throw std::invalid_argument("closed_form_gbm reference requires a GBM problem");
  }
  const StudyContext ctx(problem, config.nu_fraction);
  ErrorSamples samples(config, std::move(kinds));

  const bool want_final = samples.has(ErrorKind::final_time);
  const bool want_sup = samples.has(ErrorKind::sup_norm);
  const bool want_lq = samples.has(ErrorKind::path_lq);
  const bool transformed = config.scheme == SchemeKind::transformed_em;

  // Each path writes only its own slot in every table.
  std::vector<std::span<double>> final_slots, sup_slots, lq_slots;
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    if (want_final) final_slots.push_back(samples.slots(ErrorKind::final_time, ni));
    if (want_sup) sup_slots.push_back(samples.slots(ErrorKind::sup_norm, ni));
    if (want_lq) lq_slots.push_back(samples.slots(ErrorKind::path_lq, ni));
  }

  parallel_for(config.paths, config.threads, [&](std::size_t index) {
    const auto path = generate_path(config.seed, index, config.n_fine);
    const auto ref =
        reference_path(ctx.problem, ctx.transform, ctx.transformed, path, config.reference);
    std::vector<double> diff(config.n_fine + 1);

    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
      const std::size_t n = config.n_list[ni];
      if (want_final || want_lq) {
        const auto increments = coarsen(path, n);
        const auto nodes = transformed ? transformed_em(ctx.transformed, increments)
                                       : em_discrete(ctx.problem, increments);
        if (want_final) {
          final_slots[ni][index] = std::abs(ref[config.n_fine] - nodes.values[n]);
        }
        if (want_lq) {
          const auto interp = linear_interpolant_on_fine(nodes, config.n_fine);
          for (std::size_t j = 0; j <= config.n_fine; ++j) {
            diff[j] = ref[j] - interp[j];
          }
          lq_slots[ni][index] = lq_norm_on_fine(diff, config.q);
        }
      }
      if (want_sup) {
        const auto cont = transformed ? transformed_em_continuous_on_fine(ctx.transformed, path, n)
                                      : em_continuous_on_fine(ctx.problem, path, n);
        double max = 0.0;
        for (std::size_t j = 0; j <= config.n_fine; ++j) {
          max = std::max(max, std::abs(ref[j] - cont.values[j]));
        }
        sup_slots[ni][index] = max;
      }
    }
  });
  return samples;
}

ErrorTable final_time_error(const StudyConfig& config, const SdeProblem& problem) {
  return sample_errors(config, problem, {ErrorKind::final_time}).table(ErrorKind::final_time);
}

ErrorTable supnorm_error(const StudyConfig& config, const SdeProblem& problem) {
  return sample_errors(config, problem, {ErrorKind::sup_norm}).table(ErrorKind::sup_norm);
}

ErrorTable path_lq_error(const StudyConfig& config, const SdeProblem& problem) {
  return sample_errors(config, problem, {ErrorKind::path_lq}).table(ErrorKind::path_lq);
}

std::vector<OccupationRow> OccupationTable::for_breakpoint(double xi) const {
  std::vector<OccupationRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [xi](const OccupationRow& r) { return r.xi == xi; });
  return out;
}

namespace {

// The same path seen at resolution n_fine / 2; nodes stay on the grid when
// n_fine / n is even.
ContinuousEmEval every_other_point(const ContinuousEmEval& cont) {
  ContinuousEmEval half{cont.n, cont.n_fine / 2, {}};
  half.values.reserve(half.n_fine + 1);
  for (std::size_t j = 0; j <= cont.n_fine; j += 2) half.values.push_back(cont.values[j]);
  return half;
}

}  // namespace

OccupationTable occupation_study(const StudyConfig& config, const SdeProblem& problem,
                                 std::optional<std::vector<double>> breakpoints) {
  config.check();
  const std::vector<double> xi =
      breakpoints ? std::move(*breakpoints)
                  : std::vector<double>(problem.drift().breakpoints().begin(),
                                        problem.drift().breakpoints().end());
  if (xi.empty()) {
    throw std::invalid_argument("occupation study needs at least one breakpoint");
  }
  const StudyContext ctx(problem, config.nu_fraction);
  const bool transformed = config.scheme == SchemeKind::transformed_em;
  const std::size_t n_count = config.n_list.size();

  // Layout: [n index][breakpoint][path].
  std::vector<double> slots(n_count * xi.size() * config.paths, 0.0);
  std::vector<double> half_slots(slots.size(), 0.0);
  parallel_for(config.paths, config.threads, [&](std::size_t index) {
    const auto path = generate_path(config.seed, index, config.n_fine);
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      const std::size_t n = config.n_list[ni];
      const auto cont = transformed ? transformed_em_continuous_on_fine(ctx.transformed, path, n)
                                    : em_continuous_on_fine(ctx.problem, path, n);
      const bool halvable = (config.n_fine / n) % 2 == 0;
      const auto half = halvable ? every_other_point(cont) : ContinuousEmEval{};
      for (std::size_t b = 0; b < xi.size(); ++b) {
        const std::size_t slot = (ni * xi.size() + b) * config.paths + index;
        slots[slot] = sign_change_occupation(cont, xi[b]);
        half_slots[slot] = halvable ? sign_change_occupation(half, xi[b])
                                    : std::numeric_limits<double>::quiet_NaN();
      }
    }
  });

  OccupationTable table;
  table.p = config.p;
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t b = 0; b < xi.size(); ++b) {
      const std::size_t first = (ni * xi.size() + b) * config.paths;
      const std::span<const double> values(slots.data() + first, config.paths);
      const std::span<const double> half(half_slots.data() + first, config.paths);
      const auto mean = pth_mean(values, 1.0);
      const auto pmean = pth_mean(values, config.p);
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      table.rows.push_back({config.n_list[ni], xi[b], mean.value, mean.std_error, pmean.value,
                            pmean.std_error, *lo, *hi, config.paths,
                            std::isnan(half[0]) ? half[0] : pth_mean(half, 1.0).value});
    }
  }
  return table;
}

RateFit fit_rate(std::span<const std::size_t> n, std::span<const double> error) {
  if (n.size() != error.size()) {
    throw std::invalid_argument("n and error columns differ in length");
  }
  RateFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(error[i] > 0.0) || !std::isfinite(error[i])) {
      fit.warnings.push_back("excluded row n = " + std::to_string(n[i]) +
                             " with nonpositive error");
      continue;
    }
    lx.push_back(std::log(static_cast<double>(n[i])));
    ly.push_back(std::log(error[i]));
  }
  if (lx.size() < 3) {
    throw std::invalid_argument("rate fit needs at least 3 rows with positive error");
  }
  const auto m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("rate fit needs at least two distinct n");
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  // Constant data is fitted exactly.
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points_used = lx.size();
  return fit;
}

RateFit fit_rate(const ErrorTable& table) {
  std::vector<std::size_t> n;
  std::vector<double> error;
  for (const auto& row : table.rows) {
    n.push_back(row.n);
    error.push_back(row.error);
  }
  return fit_rate(n, error);
}

ReferenceCrossCheck reference_cross_check(const StudyConfig& config, const SdeProblem& problem) {
  StudyConfig a = config;
  a.reference = ReferenceKind::transformed_fine;
  StudyConfig b = config;
  b.reference = ReferenceKind::direct_fine;
  ReferenceCrossCheck out{final_time_error(a, problem), final_time_error(b, problem), {}};
  for (std::size_t i = 0; i < out.transformed_fine.rows.size(); ++i) {
    const auto& r1 = out.transformed_fine.rows[i];
    const auto& r2 = out.direct_fine.rows[i];
    const double combined = std::hypot(r1.std_error, r2.std_error);
    out.agrees.push_back(std::abs(r1.error - r2.error) <= 3.0 * combined);
  }
  return out;
}

}  // namespace sdekit
