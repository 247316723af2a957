// Batch driver: kirchhoff <check|theta-star|solve|sweep> --config FILE [--out DIR] [--seed N]

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kirchhoff/error.hpp"
#include "kirchhoff/experiments.hpp"

namespace ex = kirchhoff::experiments;

int main(int argc, char** argv) {
  CLI::App app{"Finite-element experiments for the two-parameter Kirchhoff problem"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool verbose = false;
  app.add_option("--config", config_path, "config file (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "seed override");
  auto* q = app.add_flag("--quiet", quiet, "print nothing on success");
  app.add_flag("--verbose", verbose, "print the full report")->excludes(q);
  app.fallthrough();

  struct Entry {
    const char* name;
    ex::CommandResult (*run)(const ex::RunConfig&);
    const char* help;
  };
  const Entry entries[] = {
      {"check", ex::cmd_check, "audit the hypotheses for the configured law and nonlinearity"},
      {"theta-star", ex::cmd_theta_star, "estimate the threshold theta*"},
      {"solve", ex::cmd_solve, "search for critical points at one (lambda, mu)"},
      {"sweep", ex::cmd_sweep, "count solutions over a (lambda, mu) grid"},
  };
  for (const auto& e : entries) app.add_subcommand(e.name, e.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ex::kSuccess : ex::kUsageError;
  }

  const Entry* chosen = nullptr;
  for (const auto& e : entries)
    if (app.got_subcommand(e.name)) chosen = &e;

  try {
    ex::RunConfig cfg = ex::load_config(config_path);
    if (seed) ex::set_seed(cfg, *seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const ex::CommandResult res = chosen->run(cfg);
    std::string stem = chosen->name;
    for (auto& c : stem)
      if (c == '-') c = '_';
    const auto files = ex::write_outputs(cfg.output_dir, stem, res);
    if (verbose) std::cout << res.report.dump(2) << "\n";
    if (!quiet || res.exit_code != ex::kSuccess) {
      std::cout << res.message;
      for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    }
    return res.exit_code;
  } catch (const kirchhoff::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == kirchhoff::ErrorKind::config ? ex::kUsageError : ex::kMathFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::kMathFailure;
  }
}
