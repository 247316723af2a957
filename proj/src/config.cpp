#include <fstream>
#include <set>

#include "kirchhoff/error.hpp"
#include "kirchhoff/experiments.hpp"

namespace kirchhoff::experiments {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::config, what); }

/// Strict view of one JSON object: unknown keys are errors.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) bad(path_ + " must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) bad("unknown key " + path_ + "." + key);
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(path_ + "." + key + " has the wrong type");
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T v{};
    read(key, v);
    out = v;
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void validate(const RunConfig& c) {
  const auto& d = c.domain;
  if (d.dimension != 1 && d.dimension != 2) bad("domain.dimension must be 1 or 2");
  if (static_cast<int>(d.cells.size()) != d.dimension) bad("domain.cells needs one entry per dimension");
  if (static_cast<int>(d.lengths.size()) != d.dimension) bad("domain.lengths needs one entry per dimension");
  for (int n : d.cells)
    if (n < 2) bad("domain.cells entries must be >= 2");
  for (double l : d.lengths)
    if (!(l > 0.0)) bad("domain.lengths entries must be positive");
  for (int n : d.refinements)
    if (n < 2) bad("domain.refinements entries must be >= 2");
  if (d.nominal_dimension < 0) bad("domain.nominal_dimension must be >= 0");
  if (c.alpha && !(*c.alpha > 0.0)) bad("alpha must be positive");
  if (c.q && !(*c.q > 0.0)) bad("q must be positive");
  if (c.lambda && c.lambda_theta_factor) bad("problem sets both lambda and lambda_theta_factor");
  if (c.lambda_theta_factor && !(*c.lambda_theta_factor > 0.0)) bad("problem.lambda_theta_factor must be positive");
  if (c.mu < 0.0) bad("problem.mu must be >= 0");
  for (double m : c.sweep.mu_values)
    if (m < 0.0) bad("sweep.mu_values must be >= 0");
  if (c.sweep.mu_bisection_max_factor && !(*c.sweep.mu_bisection_max_factor > 0.0)) {
    bad("sweep.mu_bisection_max_factor must be positive");
  }
  if (!(c.sweep.mu_bisection_tol_factor > 0.0)) bad("sweep.mu_bisection_tol_factor must be positive");
  const auto& n = c.newton;
  if (!(n.accept_tol > 0.0) || !(n.distinct_tol > 0.0)) bad("solver tolerances must be positive");
  if (n.max_iter < 1 || n.max_roots_per_start < 1) bad("solver iteration limits must be positive");
  if (c.starts.random_starts < 0 || c.starts.eigen_functions < 0) bad("solver start counts must be >= 0");
  const auto& t = c.theta;
  if (!(t.t_min > 0.0) || !(t.t_max > t.t_min)) bad("theta_star scan range must satisfy 0 < t_min < t_max");
  if (t.scan_points_per_decade < 1) bad("theta_star.scan_points_per_decade must be >= 1");
  const auto& s = c.sampling;
  if (s.points_per_decade < 2) bad("sampling.points_per_decade must be >= 2");
  if (!(s.positive_tol > 0.0)) bad("sampling.positive_tol must be positive");
  // Resolve specimen names now so typos surface as config errors.
  make_law(c);
  make_f(c);
  make_g(c);
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  {
    Section root(doc, "config");
    int version = kFormatVersion;
    root.read("format_version", version);
    if (version != kFormatVersion) bad("unsupported format_version " + std::to_string(version));

    if (root.has("domain")) {
      Section d(root.at("domain"), "domain");
      d.read("dimension", c.domain.dimension);
      if (!d.has("cells")) c.domain.cells.assign(c.domain.dimension, c.domain.cells.front());
      if (!d.has("lengths")) c.domain.lengths.assign(c.domain.dimension, 1.0);
      d.read("cells", c.domain.cells);
      d.read("lengths", c.domain.lengths);
      d.read("refinements", c.domain.refinements);
      d.read("nominal_dimension", c.domain.nominal_dimension);
    }
    root.read("law", c.law);
    root.read("f", c.f);
    root.read("g", c.g);
    root.read("alpha", c.alpha);
    root.read("q", c.q);
    if (root.has("problem")) {
      Section p(root.at("problem"), "problem");
      p.read("lambda", c.lambda);
      p.read("lambda_theta_factor", c.lambda_theta_factor);
      p.read("mu", c.mu);
    }
    if (root.has("sweep")) {
      Section s(root.at("sweep"), "sweep");
      s.read("lambdas", c.sweep.lambdas);
      s.read("lambda_theta_factors", c.sweep.lambda_theta_factors);
      s.read("mu_values", c.sweep.mu_values);
      s.read("mu_bisection_max_factor", c.sweep.mu_bisection_max_factor);
      s.read("mu_bisection_tol_factor", c.sweep.mu_bisection_tol_factor);
    }
    if (root.has("solver")) {
      Section s(root.at("solver"), "solver");
      s.read("accept_tol", c.newton.accept_tol);
      s.read("distinct_tol", c.newton.distinct_tol);
      s.read("max_iter", c.newton.max_iter);
      s.read("max_roots_per_start", c.newton.max_roots_per_start);
      s.read("eigen_starts", c.starts.eigen_functions);
      s.read("amplitudes", c.starts.amplitudes);
      s.read("random_starts", c.starts.random_starts);
    }
    if (root.has("theta_star")) {
      Section t(root.at("theta_star"), "theta_star");
      t.read("eigen_directions", c.theta.eigen_directions);
      t.read("random_directions", c.theta.random_directions);
      t.read("t_min", c.theta.t_min);
      t.read("t_max", c.theta.t_max);
      t.read("scan_points_per_decade", c.theta.scan_points_per_decade);
      t.read("polish_candidates", c.theta.polish_candidates);
      t.read("polish_max_iter", c.theta.polish_max_iter);
    }
    if (root.has("sampling")) {
      Section s(root.at("sampling"), "sampling");
      s.read("points_per_decade", c.sampling.points_per_decade);
      s.read("positive_tol", c.sampling.positive_tol);
      s.read("tail_min", c.sampling.tail_min);
      s.read("tail_max", c.sampling.tail_max);
      s.read("slope_tol", c.sampling.slope_tol);
      s.read("amplitudes_per_decade", c.sampling.amplitudes_per_decade);
    }
    std::uint64_t seed = 0;
    root.read("seed", seed);
    set_seed(c, seed);
    if (root.has("output")) {
      Section o(root.at("output"), "output");
      o.read("dir", c.output_dir);
    }
  }
  c.sampling.nominal_dimension = c.domain.nominal_dimension;
  validate(c);
  c.echo = doc;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    bad("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.theta.seed = seed;
  cfg.starts.seed = seed;
  if (cfg.echo.is_object()) cfg.echo["seed"] = seed;
}

fem::Mesh build_mesh(const DomainSpec& d, int refinement_index) {
  std::vector<int> cells = d.cells;
  if (refinement_index >= 0) cells.assign(d.dimension, d.refinements.at(refinement_index));
  if (d.dimension == 1) return fem::build_interval_mesh(cells[0], d.lengths[0]);
  return fem::build_rect_mesh(cells[0], cells[1], d.lengths[0], d.lengths[1]);
}

model::KirchhoffLaw make_law(const RunConfig& cfg) {
  auto law = model::law_by_name(cfg.law);
  if (cfg.alpha) law.alpha = *cfg.alpha;
  return law;
}

model::Nonlinearity make_f(const RunConfig& cfg) {
  auto nl = model::nonlinearity_by_name(cfg.f);
  if (cfg.q) nl.q = *cfg.q;
  return nl;
}

model::Nonlinearity make_g(const RunConfig& cfg) { return model::nonlinearity_by_name(cfg.g); }

}  // namespace kirchhoff::experiments
