#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "kirchhoff/error.hpp"
#include "kirchhoff/experiments.hpp"

namespace kirchhoff::experiments {

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json interior_coordinates(const fem::Mesh& mesh) {
  json out = json::array();
  for (int node : mesh.interior_nodes()) {
    const auto& p = mesh.nodes()[node];
    if (mesh.dimension() == 1) {
      out.push_back(p[0]);
    } else {
      out.push_back(json::array({p[0], p[1]}));
    }
  }
  return out;
}

json header(const RunConfig& cfg, const std::string& command) {
  json h;
  h["format_version"] = kFormatVersion;
  h["command"] = command;
  h["seed"] = cfg.seed;
  h["config"] = cfg.echo;
  return h;
}

std::shared_ptr<const fem::AssembledOperators> assemble_shared(const fem::Mesh& mesh) {
  return std::make_shared<const fem::AssembledOperators>(fem::assemble(mesh));
}

/// Shared state for solve-type runs on one mesh.
struct Setup {
  fem::Mesh mesh;
  std::shared_ptr<const fem::AssembledOperators> ops;
  model::KirchhoffLaw law;
  model::Nonlinearity f;
  model::Nonlinearity g;
};

Setup make_setup(const RunConfig& cfg) {
  fem::Mesh mesh = build_mesh(cfg.domain);
  auto ops = assemble_shared(mesh);
  return Setup{std::move(mesh), std::move(ops), make_law(cfg), make_f(cfg), make_g(cfg)};
}

solvers::NewtonResult solve_cell(const Setup& s, const RunConfig& cfg, double lambda, double mu,
                                 const std::optional<fem::FeFunction>& theta_minimizer) {
  variational::Problem p{s.ops, s.law, s.f, s.g, lambda, mu};
  const auto starts = solvers::standard_starts(*s.ops, cfg.starts, theta_minimizer);
  return solvers::newton_deflated(p, starts, cfg.newton);
}

json start_log_summary(const std::vector<solvers::StartLog>& log) {
  std::map<std::string, int> counts;
  for (const auto& e : log) ++counts[e.outcome];
  json out = json::object();
  for (const auto& [k, v] : counts) out[k] = v;
  return out;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

json to_json(const model::HypothesisReport& report) {
  json out;
  json conds = json::array();
  for (const auto& c : report.conditions) {
    json j;
    j["name"] = c.name;
    j["status"] = model::to_string(c.status);
    j["detail"] = c.detail;
    json ev = json::object();
    for (const auto& [k, v] : c.evidence) ev[k] = finite_or_null(v);
    j["evidence"] = ev;
    if (c.witness) {
      j["witness"] = {{"description", c.witness->description},
                      {"argument", finite_or_null(c.witness->argument)},
                      {"value", finite_or_null(c.witness->value)}};
    }
    conds.push_back(j);
  }
  out["conditions"] = conds;
  out["gamma"] = finite_or_null(report.gamma);
  out["tail_ratio"] = finite_or_null(report.tail_ratio);
  out["tail_slope"] = finite_or_null(report.tail_slope);
  out["any_fail"] = report.any_fail();
  return out;
}

json to_json(const solvers::ThetaStarEstimate& est, const fem::Mesh& mesh, bool with_curves) {
  json out;
  out["value"] = est.value;
  out["mesh"] = est.mesh_id;
  out["multistarts"] = est.multistarts;
  out["probes"] = est.probes;
  out["polish_iterations"] = est.polish_iterations;
  out["nodes"] = interior_coordinates(mesh);
  out["minimizer"] = vector_json(est.minimizer);
  json scans = json::array();
  for (const auto& sc : est.scans) {
    json s;
    s["direction"] = sc.direction;
    s["best_t"] = sc.best_t;
    s["best_ratio"] = finite_or_null(sc.best_ratio);
    if (with_curves) {
      s["t"] = sc.t;
      json r = json::array();
      for (double v : sc.ratio) r.push_back(finite_or_null(v));
      s["ratio"] = r;
    }
    scans.push_back(s);
  }
  out["scans"] = scans;
  return out;
}

json to_json(const solvers::SolutionSet& set, const fem::AssembledOperators& ops, double lambda, double mu) {
  json out;
  out["count"] = set.size();
  out["max_norm"] = set.max_norm();
  out["min_pairwise_distance"] = finite_or_null(set.min_pairwise_distance(ops));
  out["distinct_tol"] = set.distinct_tol();
  json sols = json::array();
  for (const auto& m : set.members()) {
    json s;
    s["norm"] = m.energies.norm;
    s["residual"] = m.residual_norm;
    s["energy"] = {{"phi", m.energies.phi},
                   {"j", m.energies.j},
                   {"psi", m.energies.psi},
                   {"total", m.energies.total(lambda, mu)}};
    s["iterations"] = m.iterations;
    s["origin"] = solvers::to_string(m.origin);
    s["values"] = vector_json(m.u);
    sols.push_back(s);
  }
  out["solutions"] = sols;
  return out;
}

CommandResult cmd_check(const RunConfig& cfg) {
  CommandResult res;
  const fem::Mesh mesh = build_mesh(cfg.domain);
  const auto report = model::check_hypotheses(make_law(cfg), make_f(cfg), mesh, cfg.sampling);
  res.report = header(cfg, "check");
  res.report["mesh"] = mesh.id();
  res.report["hypotheses"] = to_json(report);
  std::vector<std::string> undecided;
  for (const auto& c : report.conditions)
    if (c.status == model::Status::inconclusive) undecided.push_back(c.name);
  res.report["inconclusive"] = undecided;
  res.exit_code = report.any_fail() ? kMathFailure : kSuccess;
  std::ostringstream msg;
  for (const auto& c : report.conditions) msg << c.name << ": " << model::to_string(c.status) << "\n";
  res.message = msg.str();
  return res;
}

CommandResult cmd_theta_star(const RunConfig& cfg) {
  CommandResult res;
  res.report = header(cfg, "theta-star");
  const auto law = make_law(cfg);
  const auto f = make_f(cfg);
  try {
    if (cfg.domain.refinements.empty()) {
      const fem::Mesh mesh = build_mesh(cfg.domain);
      const auto est = solvers::estimate_theta_star(assemble_shared(mesh), law, f, cfg.theta);
      res.report["theta_star"] = to_json(est, mesh, true);
      res.message = "theta* estimate " + csv_number(est.value) + " on " + est.mesh_id + "\n";
      return res;
    }
    // Nested series: each level is warm-started from the previous minimizer.
    json series = json::array();
    std::optional<fem::Mesh> prev_mesh;
    fem::FeFunction prev_min;
    std::ostringstream msg;
    for (std::size_t k = 0; k < cfg.domain.refinements.size(); ++k) {
      const fem::Mesh mesh = build_mesh(cfg.domain, static_cast<int>(k));
      auto opts = cfg.theta;
      if (prev_mesh) opts.warm_start = fem::transfer(*prev_mesh, prev_min, mesh);
      const auto est = solvers::estimate_theta_star(assemble_shared(mesh), law, f, opts);
      series.push_back(to_json(est, mesh, false));
      msg << "theta* estimate " << csv_number(est.value) << " on " << est.mesh_id << "\n";
      prev_mesh = mesh;
      prev_min = est.minimizer;
    }
    bool nonincreasing = true;
    for (std::size_t k = 1; k < series.size(); ++k)
      nonincreasing = nonincreasing && series[k]["value"].get<double>() <= series[k - 1]["value"].get<double>();
    res.report["series"] = series;
    res.report["nonincreasing"] = nonincreasing;
    res.report["theta_star"] = series.back();
    res.message = msg.str();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::feasibility) throw;
    res.exit_code = kMathFailure;
    res.report["error"] = e.what();
    res.message = std::string(e.what()) + "\n";
  }
  return res;
}

CommandResult cmd_solve(const RunConfig& cfg) {
  CommandResult res;
  res.report = header(cfg, "solve");
  const Setup s = make_setup(cfg);
  std::optional<fem::FeFunction> theta_min;
  double lambda = cfg.lambda.value_or(0.0);
  if (cfg.lambda_theta_factor) {
    try {
      const auto est = solvers::estimate_theta_star(s.ops, s.law, s.f, cfg.theta);
      theta_min = est.minimizer;
      lambda = *cfg.lambda_theta_factor * est.value;
      res.report["theta_star"] = to_json(est, s.mesh, false);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::feasibility) throw;
      res.exit_code = kMathFailure;
      res.report["error"] = e.what();
      res.message = std::string(e.what()) + "\n";
      return res;
    }
  }
  const auto result = solve_cell(s, cfg, lambda, cfg.mu, theta_min);
  res.report["mesh"] = s.mesh.id();
  res.report["lambda"] = lambda;
  res.report["mu"] = cfg.mu;
  res.report["nodes"] = interior_coordinates(s.mesh);
  res.report["solution_set"] = to_json(result.solutions, *s.ops, lambda, cfg.mu);
  res.report["start_outcomes"] = start_log_summary(result.log);
  if (result.solutions.size() == 0) {
    res.exit_code = kMathFailure;
    res.message = "no start converged\n";
  } else {
    res.message = std::to_string(result.solutions.size()) + " solution(s) at lambda = " +
                  csv_number(lambda) + ", mu = " + csv_number(cfg.mu) + "\n";
  }
  return res;
}

namespace {

struct Cell {
  double mu = 0.0;
  std::size_t count = 0;
  double max_norm = 0.0;
  double min_distance = std::numeric_limits<double>::infinity();
  double max_residual = 0.0;
  std::string status = "ok";
  json solutions;
};

struct LambdaRow {
  double lambda = 0.0;
  std::vector<Cell> cells;  // sorted by mu
  double delta = 0.0;
  bool has_delta = false;
  double r_mu0 = 0.0;
  std::vector<double> anomalies;
};

Cell run_cell(const Setup& s, const RunConfig& cfg, double lambda, double mu,
              const std::optional<fem::FeFunction>& theta_min) {
  Cell c;
  c.mu = mu;
  try {
    const auto r = solve_cell(s, cfg, lambda, mu, theta_min);
    c.count = r.solutions.size();
    c.max_norm = r.solutions.max_norm();
    c.min_distance = r.solutions.min_pairwise_distance(*s.ops);
    for (const auto& m : r.solutions.members()) c.max_residual = std::max(c.max_residual, m.residual_norm);
    c.solutions = to_json(r.solutions, *s.ops, lambda, mu);
  } catch (const std::exception& e) {
    c.status = std::string("failed: ") + e.what();
  }
  return c;
}

LambdaRow run_lambda(const Setup& s, const RunConfig& cfg, double lambda,
                     const std::optional<fem::FeFunction>& theta_min) {
  LambdaRow row;
  row.lambda = lambda;
  std::map<double, Cell> cells;
  auto eval = [&](double mu) -> const Cell& {
    auto it = cells.find(mu);
    if (it == cells.end()) it = cells.emplace(mu, run_cell(s, cfg, lambda, mu, theta_min)).first;
    return it->second;
  };

  eval(0.0);
  for (double mu : cfg.sweep.mu_values) eval(mu);
  if (cfg.sweep.mu_bisection_max_factor) {
    const double mu_max = *cfg.sweep.mu_bisection_max_factor * lambda;
    const double tol = cfg.sweep.mu_bisection_tol_factor * lambda;
    if (eval(0.0).count >= 3) {
      double lo = 0.0, hi = mu_max;
      if (eval(mu_max).count >= 3) {
        lo = mu_max;
      } else {
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          if (eval(mid).count >= 3) lo = mid; else hi = mid;
        }
      }
      row.delta = lo;
      row.has_delta = lo > 0.0;
      if (row.has_delta) eval(0.5 * lo);
    }
  } else {
    for (const auto& [mu, cell] : cells) {
      if (cell.count < 3) break;
      row.delta = mu;
      row.has_delta = mu > 0.0;
    }
  }

  for (auto& [mu, cell] : cells) {
    if (row.has_delta && mu <= row.delta && cell.count < 3) row.anomalies.push_back(mu);
    row.cells.push_back(std::move(cell));
  }
  row.r_mu0 = 1.1 * row.cells.front().max_norm;
  return row;
}

}  // namespace

CommandResult cmd_sweep(const RunConfig& cfg) {
  CommandResult res;
  res.report = header(cfg, "sweep");
  const Setup s = make_setup(cfg);

  std::optional<solvers::ThetaStarEstimate> est;
  try {
    est = solvers::estimate_theta_star(s.ops, s.law, s.f, cfg.theta);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::feasibility || !cfg.sweep.lambda_theta_factors.empty()) throw;
  }
  std::vector<double> lambdas = cfg.sweep.lambdas;
  if (est) {
    for (double k : cfg.sweep.lambda_theta_factors) lambdas.push_back(k * est->value);
  } else if (!cfg.sweep.lambda_theta_factors.empty()) {
    throw Error(ErrorKind::feasibility, "theta* unavailable for lambda_theta_factors");
  }
  if (lambdas.empty()) throw Error(ErrorKind::config, "sweep needs lambdas or lambda_theta_factors");

  std::optional<fem::FeFunction> theta_min;
  if (est) theta_min = est->minimizer;

  // Lambda rows are independent; results are assembled in grid order.
  std::vector<std::future<LambdaRow>> jobs;
  for (double lambda : lambdas) {
    jobs.push_back(std::async(std::launch::async, [&, lambda] { return run_lambda(s, cfg, lambda, theta_min); }));
  }
  std::vector<LambdaRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  res.table.push_back("lambda_index,lambda,mu_index,mu,count,max_norm,min_pairwise_distance,max_residual,status");
  json jrows = json::array();
  double r_emp = 0.0;
  bool any_solution = false;
  bool exploratory = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const bool below = est && row.lambda <= est->value;
    exploratory = exploratory || below;
    json jr;
    jr["lambda"] = row.lambda;
    jr["exploratory"] = below;
    jr["delta_emp"] = row.delta;
    jr["has_delta"] = row.has_delta;
    jr["r_mu0"] = row.r_mu0;
    jr["anomalies"] = row.anomalies;
    json jc = json::array();
    for (std::size_t k = 0; k < row.cells.size(); ++k) {
      const auto& c = row.cells[k];
      any_solution = any_solution || c.count > 0;
      if (c.count >= 3) r_emp = std::max(r_emp, 1.1 * c.max_norm);
      json cell;
      cell["mu"] = c.mu;
      cell["count"] = c.count;
      cell["max_norm"] = c.max_norm;
      cell["min_pairwise_distance"] = finite_or_null(c.min_distance);
      cell["max_residual"] = c.max_residual;
      cell["status"] = c.status;
      cell["solution_set"] = c.solutions;
      jc.push_back(cell);
      res.table.push_back(std::to_string(i) + "," + csv_number(row.lambda) + "," + std::to_string(k) + "," +
                          csv_number(c.mu) + "," + std::to_string(c.count) + "," + csv_number(c.max_norm) +
                          "," + csv_number(c.min_distance) + "," + csv_number(c.max_residual) + "," +
                          (c.status == "ok" ? "ok" : "failed"));
    }
    jr["cells"] = jc;
    jrows.push_back(jr);
  }

  res.report["mesh"] = s.mesh.id();
  res.report["nodes"] = interior_coordinates(s.mesh);
  if (est) res.report["theta_star"] = to_json(*est, s.mesh, false);
  res.report["rows"] = jrows;
  res.report["empirical_r"] = r_emp;
  res.report["exploratory"] = exploratory;
  res.exit_code = any_solution ? kSuccess : kMathFailure;
  std::ostringstream msg;
  if (exploratory) msg << "warning: lambda grid not inside (theta*, inf); rows marked exploratory\n";
  for (const auto& row : rows) {
    msg << "lambda " << csv_number(row.lambda) << ": delta_emp " << csv_number(row.delta) << ", cells "
        << row.cells.size() << "\n";
  }
  msg << "empirical r " << csv_number(r_emp) << "\n";
  res.message = msg.str();
  return res;
}

std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const std::string& name,
                                                 const CommandResult& result) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto report_path = dir / (name + "_report.json");
  {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::config, "cannot write " + report_path.string());
    out << result.report.dump(2) << "\n";
  }
  written.push_back(report_path);
  if (!result.table.empty()) {
    const auto table_path = dir / (name + "_table.csv");
    std::ofstream out(table_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::config, "cannot write " + table_path.string());
    out << "# format_version=" << kFormatVersion << "\n";
    for (const auto& line : result.table) out << line << "\n";
    written.push_back(table_path);
  }
  return written;
}

}  // namespace kirchhoff::experiments
