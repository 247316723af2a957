#pragma once

// Energy functionals Phi(u) = K~(||u||^2)/2, J(u) = int F(x,u), Psi(u) = int G(x,u)
// and their gradients. Every gradient is the Riesz representative in the
// H^1_0 (stiffness) inner product, so grad Phi(u) = K(||u||^2) u verbatim.

#include <memory>

#include "kirchhoff/fem.hpp"
#include "kirchhoff/model.hpp"

namespace kirchhoff::variational {

using fem::AssembledOperators;
using fem::FeFunction;

struct EnergyBreakdown {
  double phi = 0.0;
  double j = 0.0;
  double psi = 0.0;
  double norm = 0.0;

  double total(double lambda, double mu) const { return phi - lambda * j - mu * psi; }
};

/// The perturbed problem -K(||u||^2) Lap u = lambda f(x,u) + mu g(x,u).
struct Problem {
  std::shared_ptr<const AssembledOperators> ops;
  model::KirchhoffLaw law;
  model::Nonlinearity f;
  model::Nonlinearity g = model::zero_nonlinearity();
  double lambda = 0.0;
  double mu = 0.0;
};

double phi(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& u);
FeFunction grad_phi(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& u);

/// int F(x, u_h(x)) dx by the element Gauss rules.
double j_functional(const AssembledOperators& ops, const model::Nonlinearity& nl, const FeFunction& u);
/// b_i = int f(x, u_h) phi_i dx, the coefficient-space derivative of J.
Eigen::VectorXd load_vector(const AssembledOperators& ops, const model::Nonlinearity& nl,
                            const FeFunction& u);
/// d b_i / d u_j = int f_t(x, u_h) phi_i phi_j dx.
fem::SparseMatrix load_jacobian(const AssembledOperators& ops, const model::Nonlinearity& nl,
                                const FeFunction& u);
FeFunction grad_j(const AssembledOperators& ops, const model::Nonlinearity& nl, const FeFunction& u);

inline double psi_functional(const AssembledOperators& ops, const model::Nonlinearity& g,
                             const FeFunction& u) {
  return j_functional(ops, g, u);
}
inline FeFunction grad_psi(const AssembledOperators& ops, const model::Nonlinearity& g,
                           const FeFunction& u) {
  return grad_j(ops, g, u);
}

/// T(v) = (h(||v||)/||v||) v, T(0) = 0; inverts grad_phi.
FeFunction inverse_T(const AssembledOperators& ops, const model::KirchhoffLaw& law, const FeFunction& v);

struct Residual {
  FeFunction representative;
  double norm = 0.0;
};

/// R(u) = grad_phi(u) - lambda grad_j(u) - mu grad_psi(u) and ||R(u)||.
Residual residual(const Problem& problem, const FeFunction& u);
Residual residual(const AssembledOperators& ops, const model::KirchhoffLaw& law,
                  const model::Nonlinearity& f, const model::Nonlinearity& g, double lambda,
                  double mu, const FeFunction& u);

EnergyBreakdown energies(const Problem& problem, const FeFunction& u);

}  // namespace kirchhoff::variational
