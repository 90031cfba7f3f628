#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

int main(int argc, char** argv) {
  using sdekit::cli::StudyKind;

  CLI::App app{"sdekit: Euler-Maruyama experiments for SDEs with discontinuous drift"};
  app.require_subcommand(1);

  sdekit::cli::RunOptions options;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto add_study = [&](StudyKind kind, const std::string& help) {
    auto* sub = app.add_subcommand(std::string(sdekit::cli::to_string(kind)), help);
    sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed, overrides the config");
    sub->add_option("--threads", threads, "Worker bound; results do not depend on it")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "Output directory, overrides the config");
    sub->add_option("--override", options.overrides, "Config override key=value (repeatable)");
    return sub;
  };

  auto* validate = add_study(StudyKind::validate, "Check assumptions and print the growth constant");
  auto* transform = add_study(StudyKind::transform_check, "Tabulate G, G', G'' and G^-1(G(x))");
  auto* simulate = add_study(StudyKind::simulate, "Write one time-continuous EM path on the fine grid");
  auto* convergence = add_study(StudyKind::convergence, "Strong error tables and rate fits");
  auto* occupation = add_study(StudyKind::occupation, "Sign-change occupation statistics");

  CLI11_PARSE(app, argc, argv);

  StudyKind kind = StudyKind::validate;
  CLI::App* chosen = nullptr;
  for (auto [sub, k] : {std::pair{validate, StudyKind::validate},
                        std::pair{transform, StudyKind::transform_check},
                        std::pair{simulate, StudyKind::simulate},
                        std::pair{convergence, StudyKind::convergence},
                        std::pair{occupation, StudyKind::occupation}}) {
    if (sub->parsed()) {
      kind = k;
      chosen = sub;
    }
  }

  options.config_path = config_path;
  if (chosen->count("--seed") > 0) options.seed = seed;
  if (chosen->count("--threads") > 0) options.threads = threads;
  if (chosen->count("--out-dir") > 0) options.out_dir = out_dir;

  return sdekit::cli::run(kind, options, std::cout, std::cerr);
}
