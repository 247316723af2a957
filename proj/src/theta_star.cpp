#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kirchhoff/error.hpp"
#include "kirchhoff/solvers.hpp"

namespace kirchhoff::solvers {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

FeFunction unit_sup(FeFunction v) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m > 0.0) v /= m;
  return v;
}

/// Running minimum over every feasible ratio evaluation.
class RatioTracker {
 public:
  RatioTracker(const fem::AssembledOperators& ops, const model::KirchhoffLaw& law,
               const model::Nonlinearity& nl, const std::function<void(double)>& observer)
      : ops_(ops), law_(law), nl_(nl), observer_(observer) {}

  std::optional<double> operator()(const FeFunction& u) {
    auto r = theta_ratio(ops_, law_, nl_, u);
    if (!r) return r;
    ++probes_;
    if (observer_) observer_(*r);
    if (*r < best_) {
      best_ = *r;
      best_u_ = u;
    }
    return r;
  }

  double best() const { return best_; }
  const FeFunction& best_u() const { return best_u_; }
  long probes() const { return probes_; }

 private:
  const fem::AssembledOperators& ops_;
  const model::KirchhoffLaw& law_;
  const model::Nonlinearity& nl_;
  const std::function<void(double)>& observer_;
  double best_ = std::numeric_limits<double>::infinity();
  FeFunction best_u_;
  long probes_ = 0;
};

/// Riesz gradient of K~(||u||^2) / (2 J(u)) at a feasible u.
FeFunction ratio_gradient(const fem::AssembledOperators& ops, const model::KirchhoffLaw& law,
                          const model::Nonlinearity& nl, const FeFunction& u, double ratio) {
  const double norm_sq = fem::h1_inner(ops, u, u);
  const double denom = 2.0 * variational::j_functional(ops, nl, u);
  const FeFunction gj = variational::grad_j(ops, nl, u);
  return (2.0 * model::eval_K(law, norm_sq) * u - 2.0 * ratio * gj) / denom;
}

int polish(const fem::AssembledOperators& ops, const model::KirchhoffLaw& law,
           const model::Nonlinearity& nl, FeFunction u, RatioTracker& tracker,
           const ThetaStarOptions& opts) {
  auto r0 = tracker(u);
  if (!r0) return 0;
  double rho = *r0;
  FeFunction grad = ratio_gradient(ops, law, nl, u, rho);
  double gnorm = fem::h1_norm(ops, grad);
  double step = gnorm > 0.0 ? 0.1 * fem::h1_norm(ops, u) / gnorm : 0.0;
  FeFunction prev_u, prev_grad;
  int stalls = 0;
  int it = 0;
  for (; it < opts.polish_max_iter && gnorm > 0.0; ++it) {
    if (it > 0) {
      const FeFunction du = u - prev_u;
      const FeFunction dg = grad - prev_grad;
      const double den = fem::h1_inner(ops, du, dg);
      if (den > 0.0) step = fem::h1_inner(ops, du, du) / den;
    }
    bool accepted = false;
    double s = step;
    for (int bt = 0; bt < 50; ++bt) {
      FeFunction trial = u - s * grad;
      auto rt = tracker(trial);
      if (rt && *rt <= rho - 1e-4 * s * gnorm * gnorm) {
        const double drop = rho - *rt;
        prev_u = std::move(u);
        prev_grad = grad;
        u = std::move(trial);
        stalls = drop <= opts.polish_rel_tol * rho ? stalls + 1 : 0;
        rho = *rt;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted || stalls >= 5) break;
    grad = ratio_gradient(ops, law, nl, u, rho);
    gnorm = fem::h1_norm(ops, grad);
  }
  return it;
}

struct Candidate {
  double ratio;
  FeFunction u;
};

}  // namespace

std::optional<double> theta_ratio(const fem::AssembledOperators& ops, const model::KirchhoffLaw& law,
                                  const model::Nonlinearity& nl, const FeFunction& u) {
  const double j = variational::j_functional(ops, nl, u);
  if (!(j > 0.0)) return std::nullopt;
  const double norm_sq = fem::h1_inner(ops, u, u);
  const double r = model::eval_tilde_K(law, norm_sq) / (2.0 * j);
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

FeFunction smooth_random_vector(const fem::AssembledOperators& ops, std::uint64_t seed, int index) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));
  std::normal_distribution<double> normal;
  Eigen::VectorXd r(ops.size());
  for (int i = 0; i < ops.size(); ++i) r[i] = normal(rng);
  return unit_sup(fem::riesz_solve(ops, ops.mass() * r));
}

ThetaStarEstimate estimate_theta_star(std::shared_ptr<const fem::AssembledOperators> ops_ptr,
                                      const model::KirchhoffLaw& law, const model::Nonlinearity& nl,
                                      const ThetaStarOptions& opts) {
  const auto& ops = *ops_ptr;
  RatioTracker tracker(ops, law, nl, opts.on_probe);

  std::vector<std::pair<std::string, FeFunction>> directions;
  const auto eig = fem::dirichlet_eigenpairs(ops, opts.eigen_directions);
  for (std::size_t k = 0; k < eig.vectors.size(); ++k) {
    directions.emplace_back("eigen" + std::to_string(k + 1), unit_sup(eig.vectors[k]));
  }
  for (int k = 0; k < opts.random_directions; ++k) {
    directions.emplace_back("random" + std::to_string(k), smooth_random_vector(ops, opts.seed, k));
  }
  for (const auto& prof : fem::profile_library(ops.mesh())) {
    directions.emplace_back(prof.name, fem::interpolate(ops.mesh(), prof.fn));
  }
  {
    const std::size_t n = directions.size();
    for (std::size_t k = 0; k < n; ++k) directions.emplace_back("-" + directions[k].first, -directions[k].second);
  }
  if (opts.warm_start) {
    fem::check_shape(ops, *opts.warm_start, "warm start");
    directions.emplace_back("warm_start", *opts.warm_start);
  }

  ThetaStarEstimate est;
  est.mesh_id = ops.mesh().id();
  est.multistarts = static_cast<int>(directions.size());

  const auto ts = model::log_grid(opts.t_min, opts.t_max, opts.scan_points_per_decade);
  std::vector<Candidate> candidates;
  for (const auto& [name, v] : directions) {
    ScanCurve curve;
    curve.direction = name;
    curve.t = ts;
    curve.ratio.assign(ts.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t best_i = ts.size();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      auto r = tracker(FeFunction(ts[i] * v));
      if (!r) continue;
      curve.ratio[i] = *r;
      if (best_i == ts.size() || *r < curve.ratio[best_i]) best_i = i;
    }
    if (best_i == ts.size()) {
      est.scans.push_back(std::move(curve));
      continue;
    }
    // Golden-section refinement of log t around the best scan point.
    double lo = std::log(ts[best_i > 0 ? best_i - 1 : 0]);
    double hi = std::log(ts[std::min(best_i + 1, ts.size() - 1)]);
    auto f = [&](double lt) {
      auto r = tracker(FeFunction(std::exp(lt) * v));
      return r ? *r : std::numeric_limits<double>::infinity();
    };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < 60 && hi - lo > 1e-12; ++k) {
      if (f1 <= f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = f(x2);
      }
    }
    double best_t = ts[best_i];
    double best_r = curve.ratio[best_i];
    const double lt = f1 <= f2 ? x1 : x2;
    if (std::min(f1, f2) < best_r) {
      best_r = std::min(f1, f2);
      best_t = std::exp(lt);
    }
    curve.best_t = best_t;
    curve.best_ratio = best_r;
    candidates.push_back({best_r, FeFunction(best_t * v)});
    est.scans.push_back(std::move(curve));
  }

  if (candidates.empty()) {
    throw Error(ErrorKind::feasibility,
                "no probe with J > 0 on mesh " + est.mesh_id + "; refine the mesh or widen the scan");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio; });
  const std::size_t npolish = std::min<std::size_t>(candidates.size(), std::max(0, opts.polish_candidates));
  for (std::size_t k = 0; k < npolish; ++k) {
    est.polish_iterations += polish(ops, law, nl, candidates[k].u, tracker, opts);
  }

  est.value = tracker.best();
  est.minimizer = tracker.best_u();
  est.probes = tracker.probes();
  return est;
}

ScaleInvarianceReport scale_invariance_check(std::shared_ptr<const fem::AssembledOperators> ops,
                                             const model::KirchhoffLaw& law,
                                             const model::Nonlinearity& nl, double c,
                                             const ThetaStarOptions& opts) {
  if (!(c > 0.0)) throw Error(ErrorKind::domain, "scale factor must be positive");
  ScaleInvarianceReport rep;
  rep.c = c;
  rep.base = estimate_theta_star(ops, law, nl, opts).value;
  rep.scaled = estimate_theta_star(ops, law, model::scaled(nl, c), opts).value;
  rep.expected = rep.base / c;
  rep.relative_error = std::abs(rep.scaled - rep.expected) / std::abs(rep.expected);
  rep.passed = std::abs(rep.scaled - rep.expected) <= 1e-6 * rep.base;
  return rep;
}

std::vector<FeFunction> standard_starts(const fem::AssembledOperators& ops,
                                        const StartLibraryOptions& opts,
                                        const std::optional<FeFunction>& theta_minimizer) {
  std::vector<FeFunction> starts;
  starts.push_back(FeFunction::Zero(ops.size()));
  const auto eig = fem::dirichlet_eigenpairs(ops, opts.eigen_functions);
  for (const auto& v : eig.vectors) {
    const FeFunction shape = unit_sup(v);
    for (double amp : opts.amplitudes) {
      starts.push_back(amp * shape);
      starts.push_back(-amp * shape);
    }
  }
  for (int k = 0; k < opts.random_starts; ++k) {
    std::mt19937_64 rng(splitmix64(opts.seed + 0x51ed270b27ULL * static_cast<std::uint64_t>(k + 1)));
    std::uniform_real_distribution<double> amp(opts.random_amplitude_min, opts.random_amplitude_max);
    starts.push_back(amp(rng) * smooth_random_vector(ops, opts.seed, 1000 + k));
  }
  if (theta_minimizer) {
    fem::check_shape(ops, *theta_minimizer, "theta* minimizer");
    for (double s : {0.5, 1.0, 2.0}) starts.push_back(s * *theta_minimizer);
  }
  return starts;
}

}  // namespace kirchhoff::solvers
