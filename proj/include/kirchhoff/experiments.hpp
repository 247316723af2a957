#pragma once

// Config-driven runs: hypothesis audits, theta* estimation, single solves
// and (lambda, mu) sweeps. Every report carries the config echo and seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kirchhoff/solvers.hpp"

namespace kirchhoff::experiments {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

enum ExitCode : int { kSuccess = 0, kMathFailure = 1, kUsageError = 2 };

struct DomainSpec {
  int dimension = 1;
  std::vector<int> cells{64};
  std::vector<double> lengths{1.0};
  /// Optional nested series (cells per direction) for theta*.
  std::vector<int> refinements;
  /// Dimension n used when auditing class A and the (a6) dimension shortcut.
  int nominal_dimension = 0;
};

struct SweepSpec {
  std::vector<double> lambdas;
  std::vector<double> lambda_theta_factors;
  std::vector<double> mu_values;
  /// mu bisection over [0, factor * lambda] when set.
  std::optional<double> mu_bisection_max_factor;
  double mu_bisection_tol_factor = 1e-3;
};

struct RunConfig {
  DomainSpec domain;
  std::string law = "affine(1,1)";
  std::string f = "bump";
  std::string g = "zero";
  std::optional<double> alpha;
  std::optional<double> q;
  std::optional<double> lambda;
  std::optional<double> lambda_theta_factor;
  double mu = 0.0;
  SweepSpec sweep;
  solvers::NewtonOptions newton;
  solvers::StartLibraryOptions starts;
  solvers::ThetaStarOptions theta;
  model::SamplingConfig sampling;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  /// Normalized echo of the parsed config.
  json echo;
};

/// Parses and validates; throws Error(config) on any problem.
RunConfig parse_config(const json& doc);
RunConfig load_config(const std::filesystem::path& path);
void set_seed(RunConfig& cfg, std::uint64_t seed);

fem::Mesh build_mesh(const DomainSpec& domain, int refinement_index = -1);
model::KirchhoffLaw make_law(const RunConfig& cfg);
model::Nonlinearity make_f(const RunConfig& cfg);
model::Nonlinearity make_g(const RunConfig& cfg);

struct CommandResult {
  int exit_code = kSuccess;
  json report;
  /// Flat table rows (sweep only), header first.
  std::vector<std::string> table;
  std::string message;
};

CommandResult cmd_check(const RunConfig& cfg);
CommandResult cmd_theta_star(const RunConfig& cfg);
CommandResult cmd_solve(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);

/// Writes <dir>/<name>_report.json and, for non-empty tables, <dir>/<name>_table.csv.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const std::string& name,
                                                 const CommandResult& result);

json to_json(const model::HypothesisReport& report);
json to_json(const solvers::ThetaStarEstimate& est, const fem::Mesh& mesh, bool with_curves);
json to_json(const solvers::SolutionSet& set, const fem::AssembledOperators& ops, double lambda, double mu);

}  // namespace kirchhoff::experiments
