#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kirchhoff/error.hpp"
#include "kirchhoff/model.hpp"

namespace kirchhoff::model {

const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ConditionResult ConditionResult::passed(std::string name, std::string detail) {
  ConditionResult r;
  r.name = std::move(name);
  r.status = Status::pass;
  r.detail = std::move(detail);
  return r;
}

ConditionResult ConditionResult::failed(std::string name, std::string detail, Witness witness) {
  ConditionResult r;
  r.name = std::move(name);
  r.status = Status::fail;
  r.detail = std::move(detail);
  r.witness = std::move(witness);
  return r;
}

ConditionResult ConditionResult::undecided(std::string name, std::string detail) {
  ConditionResult r;
  r.name = std::move(name);
  r.status = Status::inconclusive;
  r.detail = std::move(detail);
  return r;
}

const ConditionResult& HypothesisReport::get(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw Error(ErrorKind::config, "no condition named " + name);
}

bool HypothesisReport::any_fail() const {
  return std::any_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.status == Status::fail; });
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

std::vector<Point> sample_points(const fem::AssembledOperators& ops, const Nonlinearity& nl) {
  const auto& mesh = ops.mesh();
  std::vector<Point> pts;
  if (!nl.x_dependent) {
    // Any interior point represents the whole domain.
    pts.push_back(mesh.nodes()[mesh.interior_nodes()[mesh.num_interior() / 2]]);
    return pts;
  }
  for (int node : mesh.interior_nodes()) pts.push_back(mesh.nodes()[node]);
  for (const auto& q : ops.quadrature()) pts.push_back(q.x);
  return pts;
}

double sup_F(const Nonlinearity& nl, const std::vector<Point>& pts, double t) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : pts) best = std::max(best, eval_F(nl, x, t));
  return best;
}

/// Decides limsup <= 0 from samples ordered toward the limit. `progress`
/// increases toward the limit (log-scale). A positive tail whose log decays
/// at least like progress^-0.25 vanishes; a flat or growing positive tail
/// fails.
ConditionResult classify_limsup(const std::string& name, const std::vector<double>& progress,
                                const std::vector<double>& values, const std::vector<double>& args,
                                double tol, int window) {
  const std::size_t n = values.size();
  const std::size_t start = n > static_cast<std::size_t>(window) ? n - window : 0;
  double tail_max = -std::numeric_limits<double>::infinity();
  std::size_t arg_max = start;
  for (std::size_t i = start; i < n; ++i) {
    if (values[i] > tail_max) {
      tail_max = values[i];
      arg_max = i;
    }
  }
  ConditionResult r;
  if (tail_max <= tol) {
    r = ConditionResult::passed(name, "sampled ratio <= " + fmt(tol) + " over the final decade");
    r.evidence.emplace_back("tail_max", tail_max);
    return r;
  }
  // Positive tail: look at the trend of log(ratio) over the last two decades.
  const std::size_t trend_start = n > static_cast<std::size_t>(2 * window) ? n - 2 * window : 0;
  std::vector<double> xs, ys;
  for (std::size_t i = trend_start; i < n; ++i) {
    if (values[i] > 0.0) {
      xs.push_back(progress[i]);
      ys.push_back(std::log(values[i]));
    }
  }
  const double slope = xs.size() >= 2 ? fit_slope(xs, ys) : 0.0;
  const bool mostly_positive = 2 * xs.size() >= n - trend_start;
  if (mostly_positive && slope > -0.05) {
    r = ConditionResult::failed(
        name, "positive non-vanishing trend (log-slope " + fmt(slope) + ")",
        Witness{"sampled ratio at t", args[arg_max], values[arg_max]});
  } else if (slope <= -0.25) {
    r = ConditionResult::passed(name, "positive samples vanish toward the limit (log-slope " +
                                          fmt(slope) + ")");
  } else {
    r = ConditionResult::undecided(name, "ambiguous trend (log-slope " + fmt(slope) + ")");
  }
  r.evidence.emplace_back("tail_max", tail_max);
  r.evidence.emplace_back("log_slope", slope);
  return r;
}

ConditionResult check_class_a(const Nonlinearity& nl, const std::vector<Point>& pts, int n,
                              const SamplingConfig& cfg) {
  ConditionResult r;
  if (n == 1) {
    // x -> sup_{|t| <= r} |f(x, t)| must be integrable; on samples: finite.
    double worst = 0.0;
    for (double radius : {1.0, 10.0, 100.0}) {
      for (const auto& x : pts) {
        for (int i = -200; i <= 200; ++i) {
          const double t = radius * i / 200.0;
          const double v = std::abs(eval_f(nl, x, t));
          if (!std::isfinite(v)) {
            return ConditionResult::failed("class_A", "f is not finite on a bounded t-range",
                                           Witness{"t with non-finite f", t, v});
          }
          worst = std::max(worst, v);
        }
      }
    }
    r = ConditionResult::passed("class_A", "x -> sup_{|t|<=r}|f(x,t)| finite for r in {1,10,100}");
    r.evidence.emplace_back("sup_abs_f_r100", worst);
    return r;
  }
  if (n > 2) {
    const double critical = (n + 2.0) / (n - 2.0);
    if (!(nl.q < critical)) {
      return ConditionResult::failed("class_A", "growth exponent is not subcritical",
                                     Witness{"q vs (n+2)/(n-2)", nl.q, critical});
    }
  }
  const auto grid = log_grid(1.0, cfg.large_t_max, std::max(1, cfg.points_per_decade / 10));
  std::vector<double> xs, ys;
  double sup_ratio = 0.0;
  for (double t : grid) {
    double v = 0.0;
    for (const auto& x : pts)
      v = std::max({v, std::abs(eval_f(nl, x, t)), std::abs(eval_f(nl, x, -t))});
    const double ratio = v / (1.0 + std::pow(t, nl.q));
    if (!std::isfinite(ratio)) {
      return ConditionResult::failed("class_A", "growth ratio is not finite",
                                     Witness{"t with non-finite ratio", t, ratio});
    }
    sup_ratio = std::max(sup_ratio, ratio);
    if (ratio > 0.0 && t >= cfg.large_t_max / 100.0) {
      xs.push_back(std::log(t));
      ys.push_back(std::log(ratio));
    }
  }
  const double slope = xs.size() >= 2 ? fit_slope(xs, ys) : 0.0;
  if (slope > cfg.slope_tol) {
    return ConditionResult::failed("class_A", "|f|/(1+|t|^q) grows in the tail",
                                   Witness{"tail log-slope of |f|/(1+|t|^q)", cfg.large_t_max, slope});
  }
  r = ConditionResult::passed("class_A", "|f|/(1+|t|^q) bounded on samples");
  r.evidence.emplace_back("sup_growth_ratio", sup_ratio);
  r.evidence.emplace_back("tail_log_slope", slope);
  return r;
}

ConditionResult check_a1(const Nonlinearity& nl, const fem::AssembledOperators& ops,
                         const SamplingConfig& cfg) {
  const auto amplitudes = log_grid(cfg.amplitude_min, cfg.amplitude_max, cfg.amplitudes_per_decade);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [name, profile] : fem::profile_library(ops.mesh())) {
    const fem::FeFunction shape = fem::interpolate(ops.mesh(), profile);
    for (double amp : amplitudes) {
      for (double sign : {1.0, -1.0}) {
        double j = 0.0;
        for (const auto& q : ops.quadrature()) {
          j += q.weight * eval_F(nl, q.x, sign * amp * ops.value_at(shape, q));
        }
        best = std::max(best, j);
        if (j > cfg.positive_tol) {
          auto r = ConditionResult::passed(
              "a1", "probe " + name + " at amplitude " + fmt(sign * amp) + " gives J = " + fmt(j));
          r.evidence.emplace_back("amplitude", sign * amp);
          r.evidence.emplace_back("J", j);
          return r;
        }
      }
    }
  }
  auto r = ConditionResult::undecided("a1", "no probe with J > 0 found");
  r.evidence.emplace_back("best_J", best);
  return r;
}

}  // namespace

HypothesisReport check_hypotheses(const KirchhoffLaw& law, const Nonlinearity& nl,
                                  const fem::Mesh& domain, const SamplingConfig& cfg) {
  const fem::AssembledOperators ops = fem::assemble(domain);
  const int n = cfg.nominal_dimension > 0 ? cfg.nominal_dimension : domain.dimension();
  const auto pts = sample_points(ops, nl);
  const double tol = cfg.positive_tol;
  HypothesisReport report;

  report.conditions.push_back(check_class_a(nl, pts, n, cfg));
  report.conditions.push_back(check_a1(nl, ops, cfg));

  // (a2): inf K > 0.
  {
    std::vector<double> grid{0.0};
    const auto lg = log_grid(cfg.k_grid_min, cfg.k_grid_max, cfg.points_per_decade);
    grid.insert(grid.end(), lg.begin(), lg.end());
    double kmin = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    std::optional<Witness> witness;
    for (double t : grid) {
      const double k = eval_K(law, t);
      if (k < kmin) {
        kmin = k;
        arg = t;
      }
      if (!witness && !(k > tol)) witness = Witness{"K(t) <= tolerance at t", t, k};
    }
    report.gamma = kmin;
    ConditionResult r;
    if (witness) {
      r = ConditionResult::failed("a2", "K is not bounded away from 0", *witness);
    } else {
      // A K still decreasing over the last decade might tend to 0.
      const double k_end = eval_K(law, cfg.k_grid_max);
      const double k_prev = eval_K(law, cfg.k_grid_max / 10.0);
      if (k_end < k_prev * (1.0 - 1e-9)) {
        r = ConditionResult::undecided("a2", "K positive on samples but still decreasing in the tail");
      } else {
        r = ConditionResult::passed("a2", "sampled inf K = " + fmt(kmin) + " > 0");
      }
    }
    r.evidence.emplace_back("gamma", kmin);
    r.evidence.emplace_back("argmin_t", arg);
    report.conditions.push_back(std::move(r));
  }

  // (a3): liminf K~(t) / t^alpha > 0.
  {
    const auto tail = log_grid(cfg.tail_min, cfg.tail_max, cfg.points_per_decade);
    std::vector<double> xs, ys;
    std::optional<Witness> witness;
    double ratio_min = std::numeric_limits<double>::infinity();
    const double last_decade = cfg.tail_max / 10.0;
    for (double t : tail) {
      const double kt = eval_tilde_K(law, t);
      if (!(kt > 0.0)) {
        if (!witness) witness = Witness{"K~(t) <= 0 at t", t, kt};
        continue;
      }
      xs.push_back(std::log(t));
      ys.push_back(std::log(kt));
      if (t >= last_decade) ratio_min = std::min(ratio_min, kt / std::pow(t, law.alpha));
    }
    const double slope = xs.size() >= 2 ? fit_slope(xs, ys) : 0.0;
    report.tail_slope = slope;
    report.tail_ratio = std::isfinite(ratio_min) ? ratio_min : 0.0;
    ConditionResult r;
    if (witness) {
      r = ConditionResult::failed("a3", "K~ not positive in the tail", *witness);
    } else if (slope >= law.alpha - cfg.slope_tol && ratio_min > tol) {
      r = ConditionResult::passed("a3", "log K~ slope " + fmt(slope) + " >= alpha = " +
                                            fmt(law.alpha) + " within tolerance");
    } else if (slope <= law.alpha - 0.5) {
      r = ConditionResult::failed(
          "a3", "K~(t)/t^alpha decays like t^" + fmt(slope - law.alpha),
          Witness{"K~(t)/t^alpha at t", cfg.tail_max,
                  eval_tilde_K(law, cfg.tail_max) / std::pow(cfg.tail_max, law.alpha)});
    } else {
      r = ConditionResult::undecided("a3", "tail slope " + fmt(slope) + " near alpha");
    }
    r.evidence.emplace_back("alpha", law.alpha);
    r.evidence.emplace_back("tail_log_slope", slope);
    r.evidence.emplace_back("tail_ratio", report.tail_ratio);
    report.conditions.push_back(std::move(r));
  }

  // (a4): continuous left inverse of t -> t K(t^2), via the monotone-onto route.
  {
    ConditionResult r;
    if (!law.monotone) {
      r = ConditionResult::undecided("a4", "law does not claim t K(t^2) increasing and onto");
    } else {
      const auto grid = log_grid(cfg.k_grid_min, cfg.k_grid_max, std::max(1, cfg.points_per_decade / 10));
      std::optional<Witness> witness;
      std::string why;
      double prev = 0.0;
      bool k_nondecreasing = true;
      double k_prev = eval_K(law, 0.0);
      const bool k0_positive = k_prev > 0.0;
      for (double t : grid) {
        const double s = t * eval_K(law, t * t);
        if (!(s > prev)) {
          witness = Witness{"t K(t^2) not increasing at t", t, s};
          why = "t K(t^2) is not strictly increasing";
          break;
        }
        prev = s;
        const double k = eval_K(law, t);
        if (k < k_prev) k_nondecreasing = false;
        k_prev = k;
        try {
          const double back = solve_h(law, s);
          if (std::abs(back - t) > 1e-9 * (1.0 + t)) {
            witness = Witness{"|h(t K(t^2)) - t| at t", t, std::abs(back - t)};
            why = "left-inverse identity violated";
            break;
          }
          const double hs = solve_h(law, t);
          if (std::abs(hs * eval_K(law, hs * hs) - t) > 1e-12 * (1.0 + t)) {
            witness = Witness{"|h(s) K(h(s)^2) - s| at s", t, hs};
            why = "forward map does not recover s";
            break;
          }
        } catch (const Error& e) {
          witness = Witness{"h(s) has no root at s", s, 0.0};
          why = e.what();
          break;
        }
      }
      if (witness) {
        r = ConditionResult::failed("a4", why, *witness);
      } else {
        r = ConditionResult::passed("a4", "h(t K(t^2)) = t verified on a log grid");
      }
      r.evidence.emplace_back("K_nondecreasing", k_nondecreasing ? 1.0 : 0.0);
      r.evidence.emplace_back("K0_positive", k0_positive ? 1.0 : 0.0);
    }
    report.conditions.push_back(std::move(r));
  }

  // (a5): limsup_{t->0} sup_x F(x,t)/t^2 <= 0.
  {
    auto grid = log_grid(cfg.small_t_min, cfg.small_t_max, cfg.points_per_decade);
    std::reverse(grid.begin(), grid.end());
    std::vector<double> progress, values;
    for (double t : grid) {
      const double v = std::max(sup_F(nl, pts, t), sup_F(nl, pts, -t)) / (t * t);
      progress.push_back(-std::log(t));
      values.push_back(v);
    }
    report.conditions.push_back(
        classify_limsup("a5", progress, values, grid, tol, cfg.points_per_decade));
  }

  // (a6): limsup_{|t|->inf} sup_x F(x,t)/|t|^{2 alpha} <= 0.
  {
    const double shortcut_exponent = n >= 3 ? static_cast<double>(n) / (n - 2) : 0.0;
    const bool shortcut = n >= 3 && law.alpha >= shortcut_exponent &&
                          report.conditions.front().status == Status::pass;
    ConditionResult r;
    if (shortcut) {
      r = ConditionResult::passed("a6", "automatic: n = " + std::to_string(n) + " and alpha >= n/(n-2)");
      r.evidence.emplace_back("dimension_shortcut", 1.0);
    } else {
      const auto grid = log_grid(cfg.large_t_min, cfg.large_t_max, cfg.points_per_decade);
      std::vector<double> progress, values;
      for (double t : grid) {
        const double v = std::max(sup_F(nl, pts, t), sup_F(nl, pts, -t)) / std::pow(t, 2.0 * law.alpha);
        progress.push_back(std::log(t));
        values.push_back(v);
      }
      r = classify_limsup("a6", progress, values, grid, tol, cfg.points_per_decade);
      r.evidence.emplace_back("dimension_shortcut", 0.0);
    }
    report.conditions.push_back(std::move(r));
  }

  return report;
}

}  // namespace kirchhoff::model
