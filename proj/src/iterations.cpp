#include <cmath>
#include <sstream>

#include "kirchhoff/error.hpp"
#include "kirchhoff/solvers.hpp"

namespace kirchhoff::solvers {

namespace {

CriticalPoint point_at(const Problem& p, FeFunction u, int iterations, Origin origin) {
  CriticalPoint cp;
  cp.residual_norm = variational::residual(p, u).norm;
  cp.energies = variational::energies(p, u);
  cp.u = std::move(u);
  cp.iterations = iterations;
  cp.origin = origin;
  return cp;
}

/// lambda grad_j(u) + mu grad_psi(u) with a single Riesz solve.
FeFunction forcing_gradient(const Problem& p, const FeFunction& u) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(p.ops->size());
  if (p.lambda != 0.0) load += p.lambda * variational::load_vector(*p.ops, p.f, u);
  if (p.mu != 0.0) load += p.mu * variational::load_vector(*p.ops, p.g, u);
  return fem::riesz_solve(*p.ops, load);
}

}  // namespace

FixedPointResult fixed_point_T(const Problem& p, const FeFunction& u0, const FixedPointOptions& o) {
  const auto& ops = *p.ops;
  fem::check_shape(ops, u0, "u0");
  FixedPointResult out;
  FeFunction u = u0;
  for (int it = 1; it <= o.max_iter; ++it) {
    FeFunction next;
    try {
      next = variational::inverse_T(ops, p.law, forcing_gradient(p, u));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_root) throw;
      out.iterations = it;
      out.status = FixedPointResult::Status::diverged;
      out.message = std::string("iterate left the range of h after ") + std::to_string(it) + " steps: " + e.what();
      return out;
    }
    const double step = fem::h1_norm(ops, FeFunction(next - u));
    const double scale = fem::h1_norm(ops, u);
    out.iterations = it;
    out.last_step = step;
    if (!next.allFinite() || fem::h1_norm(ops, next) > o.blowup_norm) {
      out.status = FixedPointResult::Status::diverged;
      out.message = "iterate left every bounded set after " + std::to_string(it) + " steps";
      return out;
    }
    u = std::move(next);
    if (step <= o.step_tol * (1.0 + scale)) {
      CriticalPoint cp = point_at(p, std::move(u), it, Origin::fixed_point);
      if (cp.residual_norm <= o.accept_tol) {
        out.status = FixedPointResult::Status::converged;
        out.point = std::move(cp);
      } else {
        std::ostringstream os;
        os << "stalled with residual " << cp.residual_norm << " above " << o.accept_tol;
        out.status = FixedPointResult::Status::residual_check_failed;
        out.message = os.str();
      }
      return out;
    }
  }
  std::ostringstream os;
  os << "no convergence in " << o.max_iter << " steps (last step " << out.last_step << ")";
  out.status = FixedPointResult::Status::not_converged;
  out.message = os.str();
  return out;
}

EnergyMinResult minimize_energy(const Problem& p, const FeFunction& u0, const EnergyMinOptions& o) {
  const auto& ops = *p.ops;
  fem::check_shape(ops, u0, "u0");
  auto energy = [&](const FeFunction& u) { return variational::energies(p, u).total(p.lambda, p.mu); };

  EnergyMinResult out;
  FeFunction u = u0;
  double e = energy(u);
  FeFunction grad = variational::residual(p, u).representative;
  double gnorm = fem::h1_norm(ops, grad);
  out.energy_history.push_back(e);
  double step = 1.0 / std::max(model::eval_K(p.law, 0.0), 1e-12);
  FeFunction prev_u, prev_grad;
  int it = 0;
  for (; it < o.max_iter; ++it) {
    if (gnorm <= std::min(o.grad_tol * (1.0 + std::abs(e)), o.accept_tol)) {
      out.converged = true;
      break;
    }
    if (it > 0) {
      // Barzilai-Borwein in the H^1_0 inner product.
      const FeFunction du = u - prev_u;
      const FeFunction dg = grad - prev_grad;
      const double den = fem::h1_inner(ops, du, dg);
      if (den > 0.0) step = fem::h1_inner(ops, du, du) / den;
    }
    bool accepted = false;
    double s = step;
    for (int bt = 0; bt < 60; ++bt) {
      FeFunction trial = u - s * grad;
      const double et = energy(trial);
      if (std::isfinite(et) && et <= e - o.armijo * s * gnorm * gnorm) {
        prev_u = std::move(u);
        prev_grad = grad;
        u = std::move(trial);
        e = et;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
    grad = variational::residual(p, u).representative;
    gnorm = fem::h1_norm(ops, grad);
    out.energy_history.push_back(e);
  }
  if (!out.converged && gnorm <= std::min(o.grad_tol * (1.0 + std::abs(e)), o.accept_tol)) {
    out.converged = true;
  }
  out.point = point_at(p, std::move(u), it, Origin::energy_min);
  return out;
}

}  // namespace kirchhoff::solvers
