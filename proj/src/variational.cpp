#include "kirchhoff/variational.hpp"

#include <cmath>

namespace kirchhoff::variational {

double phi(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& u) {
  const double norm = fem::h1_norm(ops, u);
  return 0.5 * model::eval_tilde_K(law, norm * norm);
}

FeFunction grad_phi(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& u) {
  const double norm = fem::h1_norm(ops, u);
  return model::eval_K(law, norm * norm) * u;
}

double j_functional(const AssembledOperators& ops, const model::Nonlinearity& nl, const FeFunction& u) {
  fem::check_shape(ops, u, "u");
  double sum = 0.0;
  for (const auto& q : ops.quadrature()) sum += q.weight * model::eval_F(nl, q.x, ops.value_at(u, q));
  return sum;
}

Eigen::VectorXd load_vector(const AssembledOperators& ops, const model::Nonlinearity& nl,
                            const FeFunction& u) {
  fem::check_shape(ops, u, "u");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ops.size());
  const int nv = ops.mesh().vertices_per_element();
  for (const auto& q : ops.quadrature()) {
    const double fq = q.weight * model::eval_f(nl, q.x, ops.value_at(u, q));
    for (int k = 0; k < nv; ++k)
      if (q.dofs[k] >= 0) b[q.dofs[k]] += fq * q.shape[k];
  }
  return b;
}

fem::SparseMatrix load_jacobian(const AssembledOperators& ops, const model::Nonlinearity& nl,
                                const FeFunction& u) {
  fem::check_shape(ops, u, "u");
  std::vector<Eigen::Triplet<double>> trip;
  const int nv = ops.mesh().vertices_per_element();
  trip.reserve(ops.quadrature().size() * nv * nv);
  for (const auto& q : ops.quadrature()) {
    const double dq = q.weight * model::eval_dfdt(nl, q.x, ops.value_at(u, q));
    if (dq == 0.0) continue;
    for (int a = 0; a < nv; ++a) {
      if (q.dofs[a] < 0) continue;
      for (int b = 0; b < nv; ++b) {
        if (q.dofs[b] < 0) continue;
        trip.emplace_back(q.dofs[a], q.dofs[b], dq * q.shape[a] * q.shape[b]);
      }
    }
  }
  fem::SparseMatrix m(ops.size(), ops.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

FeFunction grad_j(const AssembledOperators& ops, const model::Nonlinearity& nl, const FeFunction& u) {
  return fem::riesz_solve(ops, load_vector(ops, nl, u));
}

FeFunction inverse_T(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& v) {
  const double norm = fem::h1_norm(ops, v);
  if (norm == 0.0) return FeFunction::Zero(ops.size());
  return (model::solve_h(law, norm) / norm) * v;
}

Residual residual(const AssembledOperators& ops, const model::KirchhoffLaw& law,
                  const model::Nonlinearity& f, const model::Nonlinearity& g, double lambda,
                  double mu, const FeFunction& u) {
  // One Riesz solve for the combined load.
  Eigen::VectorXd load = Eigen::VectorXd::Zero(ops.size());
  if (lambda != 0.0) load += lambda * load_vector(ops, f, u);
  if (mu != 0.0) load += mu * load_vector(ops, g, u);
  Residual r;
  r.representative = grad_phi(ops, law, u) - fem::riesz_solve(ops, load);
  r.norm = fem::h1_norm(ops, r.representative);
  return r;
}

Residual residual(const Problem& p, const FeFunction& u) {
  return residual(*p.ops, p.law, p.f, p.g, p.lambda, p.mu, u);
}

EnergyBreakdown energies(const Problem& p, const FeFunction& u) {
  EnergyBreakdown e;
  e.norm = fem::h1_norm(*p.ops, u);
  e.phi = 0.5 * model::eval_tilde_K(p.law, e.norm * e.norm);
  e.j = j_functional(*p.ops, p.f, u);
  e.psi = psi_functional(*p.ops, p.g, u);
  return e;
}

}  // namespace kirchhoff::variational
