#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdekit/brownian.hpp"
#include "sdekit/g_transform.hpp"
#include "sdekit/sde_problem.hpp"

namespace sdekit {

enum class SchemeKind { em, transformed_em };
enum class ReferenceKind { transformed_fine, direct_fine, closed_form_gbm };
enum class ErrorKind { final_time, sup_norm, path_lq };

std::string_view to_string(SchemeKind kind);
std::string_view to_string(ReferenceKind kind);
std::string_view to_string(ErrorKind kind);
std::optional<SchemeKind> parse_scheme(std::string_view name);
std::optional<ReferenceKind> parse_reference(std::string_view name);
std::optional<ErrorKind> parse_error_kind(std::string_view name);

/// Monte Carlo study setup. The reference resolution equals n_fine and the
/// same Brownian path drives the reference and every coarse scheme.
struct StudyConfig {
  std::vector<std::size_t> n_list{16, 32, 64, 128, 256, 512, 1024};
  std::size_t n_fine = std::size_t{1} << 14;
  std::size_t paths = 1000;  // M
  double p = 2.0;
  double q = std::numeric_limits<double>::infinity();
  SchemeKind scheme = SchemeKind::em;
  ReferenceKind reference = ReferenceKind::transformed_fine;
  SeedSpec seed{};
  double nu_fraction = kDefaultNuFraction;
  unsigned threads = 1;  // worker bound; never changes results

  /// Throws std::invalid_argument describing the first violated constraint.
  void check() const;
};

struct ErrorRow {
  std::size_t n = 0;
  double error = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
};

struct ErrorTable {
  ErrorKind kind = ErrorKind::final_time;
  double p = 2.0;
  double q = std::numeric_limits<double>::infinity();
  SchemeKind scheme = SchemeKind::em;
  ReferenceKind reference = ReferenceKind::transformed_fine;
  std::vector<ErrorRow> rows;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  std::vector<std::string> warnings;
};

/// (mean of v^p)^(1/p) with its delta-method standard error.
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
MomentEstimate pth_mean(std::span<const double> values, double p);

/// Rectangle rule on (0, 1] for q < inf, max over the grid for q = inf.
/// `differences` holds n_fine + 1 samples at j / n_fine.
double lq_norm_on_fine(std::span<const double> differences, double q);

struct GbmParameters {
  double drift_rate = 0.0;
  double volatility = 0.0;
};

/// Recognizes dX = a X dt + b X dW (no breakpoints, zero intercepts).
std::optional<GbmParameters> as_gbm(const SdeProblem& problem);

/// Problem plus its transformation, built once per study.
struct StudyContext {
  StudyContext(SdeProblem problem, double nu_fraction);

  SdeProblem problem;
  GTransform transform;
  TransformedProblem transformed;
};

/// Reference solution on the fine grid j / path.n_fine().
std::vector<double> reference_path(const SdeProblem& problem, const GTransform& transform,
                                   const TransformedProblem& tp, const BrownianPath& path,
                                   ReferenceKind mode);

/// Raw per-path errors for every requested kind, n in n_list and path.
class ErrorSamples {
 public:
  ErrorSamples(StudyConfig config, std::vector<ErrorKind> kinds);

  const StudyConfig& config() const { return config_; }
  std::span<const ErrorKind> kinds() const { return kinds_; }
  bool has(ErrorKind kind) const;

  /// Per-path errors for n = n_list[n_index], indexed by path id.
  std::span<const double> per_path(ErrorKind kind, std::size_t n_index) const;
  std::span<double> slots(ErrorKind kind, std::size_t n_index);

  /// Reduces to a table with moment p (defaults to config.p).
  ErrorTable table(ErrorKind kind, std::optional<double> p = std::nullopt) const;

 private:
  std::size_t offset(ErrorKind kind, std::size_t n_index) const;

  StudyConfig config_;
  std::vector<ErrorKind> kinds_;
  std::vector<double> data_;
};

ErrorSamples sample_errors(const StudyConfig& config, const SdeProblem& problem,
                           std::vector<ErrorKind> kinds);

ErrorTable final_time_error(const StudyConfig& config, const SdeProblem& problem);
ErrorTable supnorm_error(const StudyConfig& config, const SdeProblem& problem);
ErrorTable path_lq_error(const StudyConfig& config, const SdeProblem& problem);

struct OccupationRow {
  std::size_t n = 0;
  double xi = 0.0;
  double mean = 0.0;
  double mean_std_error = 0.0;
  double pmean = 0.0;
  double pmean_std_error = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t paths = 0;
  /// E[meas] recomputed at resolution n_fine / 2 on the same paths, exposing
  /// the fine-grid proxy's sensitivity. NaN when n_fine / n is odd.
  double half_fine_mean = std::numeric_limits<double>::quiet_NaN();
};

struct OccupationTable {
  double p = 1.0;
  std::vector<OccupationRow> rows;

  /// Rows for one breakpoint, in n_list order.
  std::vector<OccupationRow> for_breakpoint(double xi) const;
};

/// Moments of the sign-change occupation statistic for every breakpoint.
/// `breakpoints` overrides the drift breakpoints when given.
OccupationTable occupation_study(const StudyConfig& config, const SdeProblem& problem,
                                 std::optional<std::vector<double>> breakpoints = std::nullopt);

/// Least squares of log(error) on log(n). Rows with nonpositive error are
/// dropped with a warning; fewer than 3 usable rows throw std::invalid_argument.
RateFit fit_rate(const ErrorTable& table);
RateFit fit_rate(std::span<const std::size_t> n, std::span<const double> error);

/// Final-time errors of the same scheme against both fine references.
struct ReferenceCrossCheck {
  ErrorTable transformed_fine;
  ErrorTable direct_fine;
  /// |difference| <= 3 * combined std error, per row.
  std::vector<bool> agrees;
};
ReferenceCrossCheck reference_cross_check(const StudyConfig& config, const SdeProblem& problem);

}  // namespace sdekit
