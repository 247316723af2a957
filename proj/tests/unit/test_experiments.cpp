#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "kirchhoff/error.hpp"
#include "kirchhoff/experiments.hpp"

using namespace kirchhoff;
namespace ex = kirchhoff::experiments;
using nlohmann::json;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::domain;
}

json bump_config() {
  return json::parse(R"cfg({
    "format_version": 1,
    "domain": {"dimension": 1, "cells": [48]},
    "law": "affine(1,1)",
    "f": "bump",
    "problem": {"lambda_theta_factor": 2.0},
    "solver": {"random_starts": 10},
    "seed": 3
  })cfg");
}

}  // namespace

TEST_CASE("config parsing fills defaults and echoes the input") {
  const auto cfg = ex::parse_config(bump_config());
  CHECK(cfg.domain.cells == std::vector<int>{48});
  CHECK(cfg.domain.lengths == std::vector<double>{1.0});
  CHECK(cfg.lambda_theta_factor == 2.0);
  CHECK(cfg.seed == 3);
  CHECK(cfg.theta.seed == 3);
  CHECK(cfg.starts.seed == 3);
  CHECK(cfg.echo["law"] == "affine(1,1)");
  auto copy = cfg;
  ex::set_seed(copy, 9);
  CHECK(copy.echo["seed"] == 9);
  CHECK(copy.starts.seed == 9);
}

TEST_CASE("config validation") {
  auto bad = [](const std::function<void(json&)>& edit) {
    json doc = bump_config();
    edit(doc);
    return kind_of([&] { ex::parse_config(doc); });
  };
  CHECK(bad([](json& d) { d["domain"]["cells"] = {0}; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["domain"]["dimension"] = 3; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["solver"]["accept_tol"] = 0.0; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["law"] = "affine(1,"; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["f"] = "bumpy"; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["problem"]["lamda"] = 1.0; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["format_version"] = 2; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["problem"]["lambda"] = 1.0; }) == ErrorKind::config);
  CHECK(bad([](json& d) { d["domain"]["cells"] = "many"; }) == ErrorKind::config);
  CHECK(kind_of([] { ex::load_config("/nonexistent/config.json"); }) == ErrorKind::config);
}

TEST_CASE("check command exit codes") {
  json doc = bump_config();
  doc.erase("problem");
  CHECK(ex::cmd_check(ex::parse_config(doc)).exit_code == ex::kSuccess);
  doc["law"] = "exp_decay";
  const auto r = ex::cmd_check(ex::parse_config(doc));
  CHECK(r.exit_code == ex::kMathFailure);
  CHECK(r.report["format_version"] == ex::kFormatVersion);
}

TEST_CASE("solve with lambda = mu = 0 finds exactly zero") {
  json doc = bump_config();
  doc["problem"] = {{"lambda", 0.0}, {"mu", 0.0}};
  const auto r = ex::cmd_solve(ex::parse_config(doc));
  CHECK(r.exit_code == ex::kSuccess);
  REQUIRE(r.report["solution_set"]["count"] == 1);
  CHECK(r.report["solution_set"]["solutions"][0]["norm"] == 0.0);
}

TEST_CASE("sweep: mu = 0 column matches solve and norms stay below r") {
  json doc = bump_config();
  const auto solve = ex::cmd_solve(ex::parse_config(doc));
  doc.erase("problem");
  doc["g"] = "sine";
  doc["sweep"] = {{"lambda_theta_factors", {2.0}}, {"mu_values", {0.0, 1.0}}};
  const auto sweep = ex::cmd_sweep(ex::parse_config(doc));
  CHECK(sweep.exit_code == ex::kSuccess);
  const auto& row = sweep.report["rows"][0];
  CHECK(row["lambda"] == solve.report["lambda"]);
  CHECK(row["cells"][0]["mu"] == 0.0);
  // g only enters through mu, so at mu = 0 the points coincide bit for bit.
  const auto& a = row["cells"][0]["solution_set"];
  const auto& b = solve.report["solution_set"];
  REQUIRE(a["count"] == b["count"]);
  for (std::size_t k = 0; k < a["solutions"].size(); ++k) {
    CHECK(a["solutions"][k]["values"] == b["solutions"][k]["values"]);
    CHECK(a["solutions"][k]["residual"] == b["solutions"][k]["residual"]);
    CHECK(a["solutions"][k]["energy"]["total"] == b["solutions"][k]["energy"]["total"]);
  }

  const double r = sweep.report["empirical_r"].get<double>();
  for (const auto& c : row["cells"])
    if (c["count"].get<int>() >= 3) CHECK(c["max_norm"].get<double>() <= r);
  // Table: header plus one row per cell.
  CHECK(sweep.table.size() == 1 + row["cells"].size());
  CHECK(sweep.table.front().rfind("lambda_index,lambda,mu_index,mu,count", 0) == 0);
}

TEST_CASE("sweep below theta* is marked exploratory") {
  json doc = bump_config();
  doc.erase("problem");
  doc["sweep"] = {{"lambdas", {1.0}}, {"mu_values", {0.0}}};
  const auto sweep = ex::cmd_sweep(ex::parse_config(doc));
  CHECK(sweep.report["exploratory"] == true);
  CHECK(sweep.report["rows"][0]["cells"][0]["count"] == 1);
}

TEST_CASE("theta-star infeasibility maps to a mathematical failure") {
  json doc = bump_config();
  doc.erase("problem");
  doc["f"] = "zero";
  const auto r = ex::cmd_theta_star(ex::parse_config(doc));
  CHECK(r.exit_code == ex::kMathFailure);
  CHECK(r.report.contains("error"));
}

TEST_CASE("outputs carry the format version") {
  json doc = bump_config();
  doc.erase("problem");
  doc["sweep"] = {{"lambdas", {1.0}}, {"mu_values", {0.0}}};
  const auto res = ex::cmd_sweep(ex::parse_config(doc));
  const auto dir = std::filesystem::temp_directory_path() / "kirchhoff_unit_outputs";
  const auto files = ex::write_outputs(dir, "sweep", res);
  REQUIRE(files.size() == 2);
  std::ifstream table(files[1]);
  std::string first;
  std::getline(table, first);
  CHECK(first == "# format_version=1");
  std::ifstream report(files[0]);
  CHECK(json::parse(report)["format_version"] == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mu bisection brackets the loss of the three-solution regime") {
  // g(t) = -t damps the problem, so large mu leaves only the trivial solution.
  json doc = bump_config();
  doc.erase("problem");
  doc["g"] = "scaled(-1,linear)";
  doc["sweep"] = {{"lambda_theta_factors", {2.0}}, {"mu_bisection_max_factor", 0.1}};
  const auto sweep = ex::cmd_sweep(ex::parse_config(doc));
  const auto& row = sweep.report["rows"][0];
  const double lambda = row["lambda"].get<double>();
  const double delta = row["delta_emp"].get<double>();
  REQUIRE(row["has_delta"] == true);
  CHECK(delta > 0.0);
  CHECK(delta < 0.1 * lambda);
  double above = INFINITY;
  for (const auto& c : row["cells"]) {
    const double mu = c["mu"].get<double>();
    if (mu <= delta) CHECK(c["count"].get<int>() >= 3);
    else if (c["count"].get<int>() < 3) above = std::min(above, mu);
  }
  CHECK(above - delta <= 1e-3 * lambda);
  CHECK(row["anomalies"].empty());
}
