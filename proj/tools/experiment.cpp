#include "experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "sdekit/csv.hpp"
#include "sdekit/g_transform.hpp"
#include "sdekit/problem_json.hpp"
#include "sdekit/schemes.hpp"

namespace sdekit::cli {

namespace {

using nlohmann::json;

constexpr std::initializer_list<const char*> kTopLevelKeys = {
    "study",   "problem",   "seed",   "seed_tag",     "threads",   "nu_fraction",
    "n_list",  "n_fine",    "M",      "p",            "q",         "scheme",
    "reference", "errors",  "cross_check", "zero_tol", "occupation_breakpoints",
    "grid",    "simulate",  "out_dir"};

double as_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  return j.get<double>();
}

std::uint64_t as_unsigned(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ConfigError(key + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError(key + ": expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ConfigError(key + ": expected a number or an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(as_number(v, key));
  return out;
}

double as_order(const json& j, const std::string& key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw ConfigError(key + ": expected a number or \"inf\"");
  }
  return as_number(j, key);
}

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  try {
    require_known_keys(j, keys, where);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  }
}

SdeProblem load_problem(const json& j) {
  try {
    return problem_from_json(j);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + (dir / name).string());
  return out;
}

void write_json(const std::filesystem::path& dir, const std::string& name, const json& doc) {
  auto out = open_output(dir, name);
  out << doc.dump(2) << '\n';
}

json report_to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"assumption", c.assumption}, {"description", c.description}, {"passed", c.passed}});
  }
  return {{"admissible", report.admissible},
          {"growth_constant", report.growth_constant},
          {"reason", report.reason()},
          {"checks", checks}};
}

json fit_to_json(const RateFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"r_squared", fit.r_squared},
          {"points_used", fit.points_used},
          {"warnings", fit.warnings}};
}

// Returns an exit code when the problem is inadmissible, nothing otherwise.
std::optional<int> require_admissible(const SdeProblem& problem, const ExperimentConfig& config,
                                      std::ostream& out) {
  const auto report = validate(problem, config.zero_tol);
  if (report.admissible) return std::nullopt;
  out << "inadmissible: " << report.reason() << '\n';
  return kInadmissible;
}

int run_validate(const ExperimentConfig& config, std::ostream& out) {
  const auto problem = load_problem(config.problem_json);
  const auto report = validate(problem, config.zero_tol);
  write_json(config.out_dir, "validation.json", report_to_json(report));
  if (!report.admissible) {
    out << "inadmissible: " << report.reason() << '\n';
    return kInadmissible;
  }
  out << "admissible: K = " << report.growth_constant << '\n';
  return kSuccess;
}

int run_transform_check(const ExperimentConfig& config, std::ostream& out) {
  const auto problem = load_problem(config.problem_json);
  if (auto code = require_admissible(problem, config, out)) return *code;
  const auto t = build_transform(problem, config.study_config.nu_fraction);

  auto csv = open_output(config.out_dir, "transform_check.csv");
  csv << "x,G,G_prime,G_second,G_inverse_of_G\n";
  const auto& grid = config.grid;
  for (std::size_t m = 0; m < grid.points; ++m) {
    const double x = grid.points == 1 ? grid.lo
                                      : grid.lo + (grid.hi - grid.lo) * static_cast<double>(m) /
                                                      static_cast<double>(grid.points - 1);
    const double gx = t.value(x);
    csv << format_double(x) << ',' << format_double(gx) << ',' << format_double(t.derivative(x))
        << ',' << format_double(t.second_derivative(x)) << ',' << format_double(t.inverse(gx))
        << '\n';
  }
  write_json(config.out_dir, "transform.json",
             {{"breakpoints", std::vector<double>(t.breakpoints().begin(), t.breakpoints().end())},
              {"alpha", std::vector<double>(t.alphas().begin(), t.alphas().end())},
              {"rho", std::isinf(t.rho()) ? json("inf") : json(t.rho())},
              {"nu", t.nu()},
              {"gprime_min", t.gprime_min()},
              {"gprime_max", t.gprime_max()}});
  out << "transform: k = " << t.breakpoints().size() << ", nu = " << t.nu()
      << ", G' in [" << t.gprime_min() << ", " << t.gprime_max() << "]\n";
  return kSuccess;
}

int run_simulate(const ExperimentConfig& config, std::ostream& out) {
  const auto problem = load_problem(config.problem_json);
  if (auto code = require_admissible(problem, config, out)) return *code;
  const auto& sc = config.study_config;
  const auto& opt = config.simulate;
  if (opt.n == 0 || sc.n_fine % opt.n != 0) {
    throw ConfigError("simulate.n must divide n_fine");
  }
  const StudyContext ctx(problem, sc.nu_fraction);
  const auto path = generate_path(sc.seed, opt.path_index, sc.n_fine);
  const auto cont = em_continuous_on_fine(ctx.problem, path, opt.n);
  std::optional<ContinuousEmEval> z_cont;
  if (opt.z_column) z_cont = em_continuous_on_fine(ctx.transformed, path, opt.n);

  auto csv = open_output(config.out_dir, "simulate.csv");
  csv << "t,x_em" << (opt.z_column ? ",z_em,x_transformed_em" : "") << '\n';
  for (std::size_t j = 0; j <= sc.n_fine; ++j) {
    csv << format_double(static_cast<double>(j) / static_cast<double>(sc.n_fine)) << ','
        << format_double(cont.values[j]);
    if (z_cont) {
      const double z = z_cont->values[j];
      csv << ',' << format_double(z) << ',' << format_double(ctx.transform.inverse(z));
    }
    csv << '\n';
  }
  out << "simulate: path " << opt.path_index << ", n = " << opt.n << ", X_1 = "
      << cont.values.back() << '\n';
  return kSuccess;
}

int run_convergence(const ExperimentConfig& config, std::ostream& out) {
  const auto problem = load_problem(config.problem_json);
  if (auto code = require_admissible(problem, config, out)) return *code;
  const auto& sc = config.study_config;
  if (sc.reference == ReferenceKind::closed_form_gbm && !as_gbm(problem)) {
    throw ConfigError("reference closed_form_gbm requires a GBM problem");
  }
  const auto samples = sample_errors(sc, problem, config.errors);

  json summary = {{"study", "convergence"},
                  {"scheme", to_string(sc.scheme)},
                  {"reference", to_string(sc.reference)},
                  {"M", sc.paths},
                  {"n_fine", sc.n_fine},
                  {"seed", sc.seed.master_seed},
                  {"fits", json::array()}};
  std::ostringstream line;
  line << "convergence:";
  for (const auto kind : config.errors) {
    auto csv = open_output(config.out_dir, "convergence_" + std::string(to_string(kind)) + ".csv");
    csv << "n,error,std_error,M,p,q,scheme,reference\n";
    for (const double p : config.p_values) {
      const auto table = samples.table(kind, p);
      for (const auto& row : table.rows) {
        csv << row.n << ',' << format_double(row.error) << ',' << format_double(row.std_error) << ','
            << row.paths << ',' << format_double(p) << ',' << format_double(sc.q) << ','
            << to_string(sc.scheme) << ',' << to_string(sc.reference) << '\n';
      }
      json entry = {{"kind", to_string(kind)}, {"p", p}};
      try {
        const auto fit = fit_rate(table);
        entry["fit"] = fit_to_json(fit);
        line << ' ' << to_string(kind) << "(p=" << p << ") slope=" << fit.slope
             << " r2=" << fit.r_squared << ';';
      } catch (const std::invalid_argument& e) {
        entry["fit"] = nullptr;
        entry["fit_error"] = e.what();
        line << ' ' << to_string(kind) << "(p=" << p << ") no fit (" << e.what() << ");";
      }
      summary["fits"].push_back(entry);
    }
  }
  if (config.cross_check) {
    const auto check = reference_cross_check(sc, problem);
    json rows = json::array();
    for (std::size_t i = 0; i < check.agrees.size(); ++i) {
      rows.push_back({{"n", check.transformed_fine.rows[i].n},
                      {"transformed_fine", check.transformed_fine.rows[i].error},
                      {"direct_fine", check.direct_fine.rows[i].error},
                      {"agrees", static_cast<bool>(check.agrees[i])}});
      if (!check.agrees[i]) {
        line << " reference disagreement at n=" << check.transformed_fine.rows[i].n << ';';
      }
    }
    summary["reference_cross_check"] = rows;
  }
  write_json(config.out_dir, "convergence_summary.json", summary);
  out << line.str() << '\n';
  return kSuccess;
}

int run_occupation(const ExperimentConfig& config, std::ostream& out) {
  const auto problem = load_problem(config.problem_json);
  if (auto code = require_admissible(problem, config, out)) return *code;
  const auto& sc = config.study_config;
  if (!config.occupation_breakpoints && problem.drift().breakpoint_count() == 0) {
    throw ConfigError("occupation study needs a drift with at least one breakpoint");
  }
  const auto table = occupation_study(sc, problem, config.occupation_breakpoints);

  auto csv = open_output(config.out_dir, "occupation.csv");
  csv << "n,xi,mean_meas,pmean_meas,std_error,M\n";
  for (const auto& row : table.rows) {
    csv << row.n << ',' << format_double(row.xi) << ',' << format_double(row.mean) << ','
        << format_double(row.pmean) << ',' << format_double(row.pmean_std_error) << ','
        << row.paths << '\n';
  }

  json summary = {{"study", "occupation"}, {"p", sc.p}, {"M", sc.paths}, {"fits", json::array()}};
  std::ostringstream line;
  line << "occupation:";
  std::vector<double> seen;
  for (const auto& row : table.rows) {
    if (std::find(seen.begin(), seen.end(), row.xi) != seen.end()) continue;
    seen.push_back(row.xi);
    const auto rows = table.for_breakpoint(row.xi);
    std::vector<std::size_t> n;
    std::vector<double> mean, pmean;
    for (const auto& r : rows) {
      n.push_back(r.n);
      mean.push_back(r.mean);
      pmean.push_back(r.pmean);
    }
    json entry = {{"xi", row.xi}};
    json sensitivity = json::array();
    for (const auto& r : rows) {
      sensitivity.push_back({{"n", r.n},
                             {"mean_meas", r.mean},
                             {"mean_meas_half_fine", std::isnan(r.half_fine_mean) ? json(nullptr)
                                                                                  : json(r.half_fine_mean)}});
    }
    entry["fine_resolution_sensitivity"] = sensitivity;
    try {
      const auto f_mean = fit_rate(n, mean);
      const auto f_pmean = fit_rate(n, pmean);
      entry["mean_fit"] = fit_to_json(f_mean);
      entry["pmean_fit"] = fit_to_json(f_pmean);
      line << " xi=" << row.xi << " mean slope=" << f_mean.slope << " pmean slope=" << f_pmean.slope
           << ';';
    } catch (const std::invalid_argument& e) {
      entry["fit_error"] = e.what();
      line << " xi=" << row.xi << " no fit (" << e.what() << ");";
    }
    summary["fits"].push_back(entry);
  }
  write_json(config.out_dir, "occupation_summary.json", summary);
  out << line.str() << '\n';
  return kSuccess;
}

}  // namespace

std::optional<StudyKind> parse_study(std::string_view name) {
  for (auto kind : {StudyKind::validate, StudyKind::transform_check, StudyKind::simulate,
                    StudyKind::convergence, StudyKind::occupation}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::validate:
      return "validate";
    case StudyKind::transform_check:
      return "transform-check";
    case StudyKind::simulate:
      return "simulate";
    case StudyKind::convergence:
      return "convergence";
    case StudyKind::occupation:
      return "occupation";
  }
  return "unknown";
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key has an empty component: " + key);
    if (!node->is_object()) throw ConfigError("override key does not address an object: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig parse_experiment(const json& doc, StudyKind study) {
  check_keys(doc, kTopLevelKeys, "config");
  ExperimentConfig cfg;
  cfg.study = study;
  if (doc.contains("study")) {
    const auto named = parse_study(as_string(doc["study"], "study"));
    if (!named) throw ConfigError("study: unknown study kind");
    if (*named != study) {
      throw ConfigError("study: config is for \"" + std::string(to_string(*named)) +
                        "\" but subcommand is \"" + std::string(to_string(study)) + "\"");
    }
  }
  if (!doc.contains("problem")) throw ConfigError("config: missing key \"problem\"");
  cfg.problem_json = doc["problem"];
  load_problem(cfg.problem_json);  // schema check up front

  auto& sc = cfg.study_config;
  if (doc.contains("seed")) sc.seed.master_seed = as_unsigned(doc["seed"], "seed");
  if (doc.contains("seed_tag")) sc.seed.tag = as_string(doc["seed_tag"], "seed_tag");
  if (doc.contains("threads")) {
    const auto t = as_unsigned(doc["threads"], "threads");
    if (t == 0) throw ConfigError("threads must be at least 1");
    sc.threads = static_cast<unsigned>(t);
  }
  if (doc.contains("nu_fraction")) sc.nu_fraction = as_number(doc["nu_fraction"], "nu_fraction");
  if (doc.contains("n_list")) {
    const auto& j = doc["n_list"];
    if (!j.is_array()) throw ConfigError("n_list: expected an array of integers");
    sc.n_list.clear();
    for (const auto& v : j) sc.n_list.push_back(as_unsigned(v, "n_list"));
  }
  if (doc.contains("n_fine")) sc.n_fine = as_unsigned(doc["n_fine"], "n_fine");
  if (doc.contains("M")) sc.paths = as_unsigned(doc["M"], "M");
  if (doc.contains("p")) {
    cfg.p_values = as_numbers(doc["p"], "p");
    if (cfg.p_values.empty()) throw ConfigError("p: need at least one value");
  }
  sc.p = cfg.p_values.front();
  if (doc.contains("q")) sc.q = as_order(doc["q"], "q");
  if (doc.contains("scheme")) {
    const auto s = parse_scheme(as_string(doc["scheme"], "scheme"));
    if (!s) throw ConfigError("scheme: unknown scheme");
    sc.scheme = *s;
  }
  if (doc.contains("reference")) {
    const auto r = parse_reference(as_string(doc["reference"], "reference"));
    if (!r) throw ConfigError("reference: unknown reference mode");
    sc.reference = *r;
  }
  if (doc.contains("errors")) {
    const auto& j = doc["errors"];
    if (!j.is_array() || j.empty()) throw ConfigError("errors: expected a nonempty array");
    cfg.errors.clear();
    for (const auto& v : j) {
      const auto k = parse_error_kind(as_string(v, "errors"));
      if (!k) throw ConfigError("errors: unknown error kind");
      cfg.errors.push_back(*k);
    }
  }
  if (doc.contains("cross_check")) cfg.cross_check = as_bool(doc["cross_check"], "cross_check");
  if (doc.contains("zero_tol")) {
    cfg.zero_tol = as_number(doc["zero_tol"], "zero_tol");
    if (!(cfg.zero_tol > 0.0)) throw ConfigError("zero_tol must be positive");
  }
  if (doc.contains("occupation_breakpoints")) {
    cfg.occupation_breakpoints = as_numbers(doc["occupation_breakpoints"], "occupation_breakpoints");
  }
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    check_keys(g, {"lo", "hi", "points"}, "grid");
    if (g.contains("lo")) cfg.grid.lo = as_number(g["lo"], "grid.lo");
    if (g.contains("hi")) cfg.grid.hi = as_number(g["hi"], "grid.hi");
    if (g.contains("points")) cfg.grid.points = as_unsigned(g["points"], "grid.points");
    if (cfg.grid.points == 0 || !(cfg.grid.hi >= cfg.grid.lo)) {
      throw ConfigError("grid: need points >= 1 and hi >= lo");
    }
  }
  if (doc.contains("simulate")) {
    const auto& s = doc["simulate"];
    check_keys(s, {"n", "path_index", "z_column"}, "simulate");
    if (s.contains("n")) cfg.simulate.n = as_unsigned(s["n"], "simulate.n");
    if (s.contains("path_index")) cfg.simulate.path_index = as_unsigned(s["path_index"], "simulate.path_index");
    if (s.contains("z_column")) cfg.simulate.z_column = as_bool(s["z_column"], "simulate.z_column");
  }
  if (doc.contains("out_dir")) cfg.out_dir = as_string(doc["out_dir"], "out_dir");

  for (const double p : cfg.p_values) {
    if (!(p >= 1.0) || std::isinf(p)) throw ConfigError("p: every value must lie in [1, inf)");
  }
  if (study == StudyKind::convergence || study == StudyKind::occupation) {
    try {
      sc.check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (!(sc.nu_fraction > 0.0 && sc.nu_fraction < 1.0)) {
    throw ConfigError("nu_fraction must lie in (0, 1)");
  }
  return cfg;
}

int run(StudyKind study, const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    std::ifstream in(options.config_path);
    if (!in) throw ConfigError("cannot read config file " + options.config_path.string());
    json doc;
    try {
      doc = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/false);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : options.overrides) apply_override(doc, o);
    if (options.seed) doc["seed"] = *options.seed;
    if (options.threads) doc["threads"] = *options.threads;
    if (options.out_dir) doc["out_dir"] = options.out_dir->string();
    config = parse_experiment(doc, study);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    switch (study) {
      case StudyKind::validate:
        return run_validate(config, out);
      case StudyKind::transform_check:
        return run_transform_check(config, out);
      case StudyKind::simulate:
        return run_simulate(config, out);
      case StudyKind::convergence:
        return run_convergence(config, out);
      case StudyKind::occupation:
        return run_occupation(config, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}

}  // namespace sdekit::cli
