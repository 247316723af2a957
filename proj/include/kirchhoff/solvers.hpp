#pragma once

// Multi-solution search for the discrete problem and the threshold estimate
// theta* = inf { K~(||u||^2) / (2 J(u)) : J(u) > 0 }.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kirchhoff/variational.hpp"

namespace kirchhoff::solvers {

using fem::FeFunction;
using variational::EnergyBreakdown;
using variational::Problem;

enum class Origin { newton, fixed_point, energy_min };
const char* to_string(Origin o);

struct CriticalPoint {
  FeFunction u;
  double residual_norm = 0.0;
  EnergyBreakdown energies;
  int iterations = 0;
  Origin origin = Origin::newton;
};

/// Pairwise-distinct critical points, sorted by total energy, then by norm.
class SolutionSet {
 public:
  SolutionSet(double lambda, double mu, double distinct_tol = 1e-3)
      : lambda_(lambda), mu_(mu), distinct_tol_(distinct_tol) {}

  /// Adds p unless it lies within the distinctness threshold of a member.
  bool insert(const fem::AssembledOperators& ops, CriticalPoint p);
  bool contains(const fem::AssembledOperators& ops, const FeFunction& u) const;

  const std::vector<CriticalPoint>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  double distinct_tol() const { return distinct_tol_; }
  double max_norm() const;
  /// +inf with fewer than two members.
  double min_pairwise_distance(const fem::AssembledOperators& ops) const;

 private:
  double lambda_;
  double mu_;
  double distinct_tol_;
  std::vector<CriticalPoint> members_;
};

struct NewtonOptions {
  double accept_tol = 1e-8;
  double distinct_tol = 1e-3;
  int max_iter = 100;
  double damping_floor = 1.0 / (1 << 20);
  /// Deflated restarts from one start after each new root.
  int max_roots_per_start = 4;
  bool deflate = true;
};

struct StartLog {
  int start_index = 0;
  int attempt = 0;
  std::string outcome;  // "root", "duplicate", "singular", "damping_floor", "max_iter", "non_finite"
  int iterations = 0;
};

struct NewtonResult {
  SolutionSet solutions;
  std::vector<StartLog> log;
};

/// Damped Newton with multiplicative deflation
/// m(u) = prod_k (1/||u - u_k||_A^2 + 1) over the roots found so far.
NewtonResult newton_deflated(const Problem& problem, const std::vector<FeFunction>& starts,
                             const NewtonOptions& opts = {},
                             const std::vector<FeFunction>& known_roots = {});

struct FixedPointOptions {
  double accept_tol = 1e-8;
  double step_tol = 1e-10;
  int max_iter = 500;
  double blowup_norm = 1e12;
};

struct FixedPointResult {
  enum class Status { converged, diverged, not_converged, residual_check_failed };
  Status status = Status::not_converged;
  std::optional<CriticalPoint> point;
  int iterations = 0;
  double last_step = 0.0;
  std::string message;
};

/// u <- T(lambda grad_j(u) + mu grad_psi(u)).
FixedPointResult fixed_point_T(const Problem& problem, const FeFunction& u0,
                               const FixedPointOptions& opts = {});

struct EnergyMinOptions {
  double accept_tol = 1e-8;
  double grad_tol = 1e-8;
  int max_iter = 20000;
  double armijo = 1e-4;
};

struct EnergyMinResult {
  CriticalPoint point;
  bool converged = false;
  std::vector<double> energy_history;
};

/// Gradient descent with Armijo backtracking on Phi - lambda J - mu Psi.
EnergyMinResult minimize_energy(const Problem& problem, const FeFunction& u0,
                                const EnergyMinOptions& opts = {});

struct ThetaStarOptions {
  int eigen_directions = 5;
  int random_directions = 8;
  std::uint64_t seed = 0;
  double t_min = 1e-3;
  double t_max = 1e3;
  int scan_points_per_decade = 20;
  int polish_candidates = 3;
  int polish_max_iter = 400;
  double polish_rel_tol = 1e-12;
  /// Extra direction, e.g. a minimizer transferred from a coarser mesh.
  std::optional<FeFunction> warm_start;
  /// Called with every finite ratio evaluated (J > 0).
  std::function<void(double)> on_probe;
};

struct ScanCurve {
  std::string direction;
  std::vector<double> t;
  std::vector<double> ratio;  // NaN where J(t v) <= 0
  double best_t = 0.0;
  double best_ratio = 0.0;
};

struct ThetaStarEstimate {
  double value = 0.0;
  FeFunction minimizer;
  std::string mesh_id;
  std::vector<ScanCurve> scans;
  int multistarts = 0;
  long probes = 0;
  int polish_iterations = 0;
};

/// K~(||u||^2) / (2 J(u)), or nullopt when J(u) <= 0.
std::optional<double> theta_ratio(const fem::AssembledOperators& ops, const model::KirchhoffLaw& law,
                                  const model::Nonlinearity& nl, const FeFunction& u);

ThetaStarEstimate estimate_theta_star(std::shared_ptr<const fem::AssembledOperators> ops,
                                      const model::KirchhoffLaw& law, const model::Nonlinearity& nl,
                                      const ThetaStarOptions& opts = {});

struct ScaleInvarianceReport {
  double c = 1.0;
  double base = 0.0;
  double scaled = 0.0;
  double expected = 0.0;
  double relative_error = 0.0;
  bool passed = false;
};

/// theta*(c f) against theta*(f)/c with identical starts and seed.
ScaleInvarianceReport scale_invariance_check(std::shared_ptr<const fem::AssembledOperators> ops,
                                             const model::KirchhoffLaw& law,
                                             const model::Nonlinearity& nl, double c,
                                             const ThetaStarOptions& opts = {});

struct StartLibraryOptions {
  int eigen_functions = 3;
  std::vector<double> amplitudes{1.0, 2.0, 4.0};
  int random_starts = 20;
  double random_amplitude_min = 0.5;
  double random_amplitude_max = 4.0;
  std::uint64_t seed = 0;
};

/// 0, +/- eigenfunction multiples, smoothed seeded random vectors, and the
/// theta* minimizer scaled by {0.5, 1, 2} when given.
std::vector<FeFunction> standard_starts(const fem::AssembledOperators& ops,
                                        const StartLibraryOptions& opts,
                                        const std::optional<FeFunction>& theta_minimizer = std::nullopt);

/// Smoothed Gaussian nodal vector A^{-1} M r, scaled to unit sup-norm.
FeFunction smooth_random_vector(const fem::AssembledOperators& ops, std::uint64_t seed, int index);

}  // namespace kirchhoff::solvers
