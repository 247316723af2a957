#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "kirchhoff/error.hpp"
#include "kirchhoff/solvers.hpp"

namespace kirchhoff::solvers {

const char* to_string(Origin o) {
  switch (o) {
    case Origin::newton: return "newton";
    case Origin::fixed_point: return "fixed_point";
    case Origin::energy_min: return "energy_min";
  }
  return "newton";
}

bool SolutionSet::contains(const fem::AssembledOperators& ops, const FeFunction& u) const {
  return std::any_of(members_.begin(), members_.end(), [&](const CriticalPoint& m) {
    return fem::h1_norm(ops, FeFunction(m.u - u)) <= distinct_tol_;
  });
}

bool SolutionSet::insert(const fem::AssembledOperators& ops, CriticalPoint p) {
  if (contains(ops, p.u)) return false;
  const double key = p.energies.total(lambda_, mu_);
  const double norm = p.energies.norm;
  auto pos = std::find_if(members_.begin(), members_.end(), [&](const CriticalPoint& m) {
    const double mk = m.energies.total(lambda_, mu_);
    return key < mk || (key == mk && norm < m.energies.norm);
  });
  members_.insert(pos, std::move(p));
  return true;
}

double SolutionSet::max_norm() const {
  double out = 0.0;
  for (const auto& m : members_) out = std::max(out, m.energies.norm);
  return out;
}

double SolutionSet::min_pairwise_distance(const fem::AssembledOperators& ops) const {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members_.size(); ++i)
    for (std::size_t j = i + 1; j < members_.size(); ++j)
      out = std::min(out, fem::h1_norm(ops, FeFunction(members_[i].u - members_[j].u)));
  return out;
}

namespace {

/// G(u) = K(||u||^2) A u - lambda b(u) - mu c(u) in coefficient space,
/// together with the A^{-1}-norm of G (= ||R(u)||_A).
struct SystemEval {
  Eigen::VectorXd g;
  Eigen::VectorXd au;
  double norm_sq = 0.0;
  double residual = 0.0;
};

SystemEval eval_system(const Problem& p, const FeFunction& u) {
  const auto& ops = *p.ops;
  SystemEval s;
  s.au = ops.stiffness() * u;
  s.norm_sq = u.dot(s.au);
  s.g = model::eval_K(p.law, s.norm_sq) * s.au;
  if (p.lambda != 0.0) s.g -= p.lambda * variational::load_vector(ops, p.f, u);
  if (p.mu != 0.0) s.g -= p.mu * variational::load_vector(ops, p.g, u);
  const FeFunction rep = ops.solve(s.g);
  s.residual = std::sqrt(std::max(0.0, s.g.dot(rep)));
  return s;
}

struct Deflation {
  double factor = 1.0;
  Eigen::VectorXd grad_log;  // d log m / du
};

Deflation eval_deflation(const fem::AssembledOperators& ops, const FeFunction& u,
                         const std::vector<FeFunction>& roots) {
  Deflation d;
  d.grad_log = Eigen::VectorXd::Zero(u.size());
  for (const auto& r : roots) {
    const FeFunction diff = u - r;
    const Eigen::VectorXd adiff = ops.stiffness() * diff;
    const double dist_sq = diff.dot(adiff);
    if (!(dist_sq > 0.0)) {
      d.factor = std::numeric_limits<double>::infinity();
      return d;
    }
    d.factor *= 1.0 / dist_sq + 1.0;
    d.grad_log -= (2.0 / (dist_sq * (dist_sq + 1.0))) * adiff;
  }
  return d;
}

CriticalPoint make_point(const Problem& p, FeFunction u, double residual, int iterations, Origin origin) {
  CriticalPoint cp;
  cp.energies = variational::energies(p, u);
  cp.u = std::move(u);
  cp.residual_norm = residual;
  cp.iterations = iterations;
  cp.origin = origin;
  return cp;
}

struct RunOutcome {
  std::optional<CriticalPoint> point;
  std::string status;
  int iterations = 0;
};

RunOutcome newton_run(const Problem& p, FeFunction u, const std::vector<FeFunction>& roots,
                      const NewtonOptions& o) {
  const auto& ops = *p.ops;
  const auto& a = ops.stiffness();
  RunOutcome out;
  SystemEval sys = eval_system(p, u);
  for (int it = 0; it <= o.max_iter; ++it) {
    out.iterations = it;
    if (!std::isfinite(sys.residual)) {
      out.status = "non_finite";
      return out;
    }
    if (sys.residual <= o.accept_tol) {
      out.status = "root";
      out.point = make_point(p, std::move(u), sys.residual, it, Origin::newton);
      return out;
    }
    if (it == o.max_iter) break;

    // J = K A + 2 K' (Au)(Au)^T - lambda db - mu dc; the rank-one part is
    // applied by Sherman-Morrison.
    fem::SparseMatrix jac = model::eval_K(p.law, sys.norm_sq) * a;
    if (p.lambda != 0.0) jac -= p.lambda * variational::load_jacobian(ops, p.f, u);
    if (p.mu != 0.0) jac -= p.mu * variational::load_jacobian(ops, p.g, u);
    jac.makeCompressed();
    Eigen::SparseLU<fem::SparseMatrix> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) {
      out.status = "singular";
      return out;
    }
    const double c = 2.0 * model::eval_dK(p.law, sys.norm_sq);
    Eigen::VectorXd step = lu.solve(-sys.g);
    if (c != 0.0) {
      const Eigen::VectorXd z = lu.solve(sys.au);
      const double den = 1.0 + c * sys.au.dot(z);
      if (den == 0.0 || !std::isfinite(den)) {
        out.status = "singular";
        return out;
      }
      step -= (c * sys.au.dot(step) / den) * z;
    }
    if (!step.allFinite()) {
      out.status = "singular";
      return out;
    }

    double merit0 = sys.residual;
    if (o.deflate && !roots.empty()) {
      const Deflation d = eval_deflation(ops, u, roots);
      const double scale_den = 1.0 - d.grad_log.dot(step);
      if (scale_den == 0.0 || !std::isfinite(d.factor)) {
        out.status = "singular";
        return out;
      }
      step /= scale_den;
      merit0 *= d.factor;
    }

    double lambda_step = 1.0;
    bool accepted = false;
    while (lambda_step >= o.damping_floor) {
      FeFunction trial = u + lambda_step * step;
      SystemEval trial_sys = eval_system(p, trial);
      double merit = trial_sys.residual;
      if (o.deflate && !roots.empty()) merit *= eval_deflation(ops, trial, roots).factor;
      if (std::isfinite(merit) && merit < (1.0 - 1e-4 * lambda_step) * merit0) {
        u = std::move(trial);
        sys = std::move(trial_sys);
        accepted = true;
        break;
      }
      lambda_step *= 0.5;
    }
    if (!accepted) {
      out.status = "damping_floor";
      return out;
    }
  }
  out.status = "max_iter";
  return out;
}

}  // namespace

NewtonResult newton_deflated(const Problem& problem, const std::vector<FeFunction>& starts,
                             const NewtonOptions& opts, const std::vector<FeFunction>& known_roots) {
  const auto& ops = *problem.ops;
  NewtonResult result{SolutionSet(problem.lambda, problem.mu, opts.distinct_tol), {}};
  std::vector<FeFunction> roots = known_roots;

  // u = 0 is a member whenever it solves the system.
  {
    const FeFunction zero = FeFunction::Zero(ops.size());
    const auto r = variational::residual(problem, zero);
    const bool known = std::any_of(known_roots.begin(), known_roots.end(), [&](const FeFunction& k) {
      return fem::h1_norm(ops, k) <= opts.distinct_tol;
    });
    if (r.norm <= opts.accept_tol && !known) {
      result.solutions.insert(ops, make_point(problem, zero, r.norm, 0, Origin::newton));
      roots.push_back(zero);
    }
  }

  for (std::size_t s = 0; s < starts.size(); ++s) {
    fem::check_shape(ops, starts[s], "start");
    for (int attempt = 0; attempt < opts.max_roots_per_start; ++attempt) {
      RunOutcome run = newton_run(problem, starts[s], opts.deflate ? roots : std::vector<FeFunction>{}, opts);
      StartLog entry{static_cast<int>(s), attempt, run.status, run.iterations};
      if (!run.point) {
        result.log.push_back(entry);
        break;
      }
      const bool near_known = std::any_of(roots.begin(), roots.end(), [&](const FeFunction& k) {
        return fem::h1_norm(ops, FeFunction(run.point->u - k)) <= opts.distinct_tol;
      });
      if (near_known || !result.solutions.insert(ops, *run.point)) {
        entry.outcome = "duplicate";
        result.log.push_back(entry);
        break;
      }
      roots.push_back(run.point->u);
      result.log.push_back(entry);
      if (!opts.deflate) break;
    }
  }
  return result;
}

}  // namespace kirchhoff::solvers
