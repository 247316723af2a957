#pragma once

// Problem data: the Kirchhoff coefficient K with its primitive and the
// Caratheodory nonlinearities f, g with their primitives in t.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kirchhoff/fem.hpp"

namespace kirchhoff::model {

using fem::Point;

struct KirchhoffLaw {
  std::string name;
  std::function<double(double)> k;
  /// Optional closed forms; empty means "use quadrature / finite differences".
  std::function<double(double)> tilde_k;
  std::function<double(double)> dk;
  /// Exponent with liminf K~(t)/t^alpha > 0.
  double alpha = 1.0;
  /// Claims t -> t K(t^2) is strictly increasing and onto [0, inf).
  bool monotone = false;
};

struct Nonlinearity {
  std::string name;
  std::function<double(const Point&, double)> f;
  std::function<double(const Point&, double)> primitive;
  std::function<double(const Point&, double)> dfdt;
  /// Growth exponent of the class-A bound.
  double q = 1.0;
  bool x_dependent = false;
};

/// Adaptive Simpson on [a, b]; b < a integrates backward.
double integrate_adaptive(const std::function<double(double)>& fn, double a, double b,
                          double abs_tol = 1e-10, int max_depth = 60);

/// K~(t) = int_0^t K(s) ds.
double eval_tilde_K(const KirchhoffLaw& law, double t);
double eval_K(const KirchhoffLaw& law, double t);
/// K'(t); central difference with step 1e-6 (1 + t) without a closed form.
double eval_dK(const KirchhoffLaw& law, double t);

/// F(x, t) = int_0^t f(x, s) ds.
double eval_F(const Nonlinearity& nl, const Point& x, double t);
double eval_f(const Nonlinearity& nl, const Point& x, double t);
double eval_dfdt(const Nonlinearity& nl, const Point& x, double t);

/// The left inverse h with h(t K(t^2)) = t, for laws flagged monotone.
double solve_h(const KirchhoffLaw& law, double s);

/// x -> c f(x, t), with primitive and derivative scaled accordingly.
Nonlinearity scaled(const Nonlinearity& nl, double c);

// Specimens.
KirchhoffLaw affine_law(double a, double b);
KirchhoffLaw constant_law(double gamma);
KirchhoffLaw exp_decay_law();
/// f(t) = (t - 1)(2 - t) on [1, 2], zero elsewhere.
Nonlinearity bump_nonlinearity();
Nonlinearity linear_nonlinearity();
Nonlinearity cubic_nonlinearity();
Nonlinearity sine_nonlinearity();
Nonlinearity zero_nonlinearity();
/// t-independent forcing s(x) = sin(pi x) (1D) or sin(pi x) sin(pi y) (2D).
Nonlinearity sine_forcing(int dimension);

struct SpecimenLibrary {
  std::map<std::string, KirchhoffLaw> laws;
  std::map<std::string, Nonlinearity> nonlinearities;
};

SpecimenLibrary specimen_library();

/// Parses "affine(1,2)", "constant(5)", "exp_decay".
KirchhoffLaw law_by_name(const std::string& name);
/// Parses "bump", "linear", "cubic", "sine", "zero", "sine_forcing",
/// "sine_forcing_2d", and "scaled(c,<name>)".
Nonlinearity nonlinearity_by_name(const std::string& name);

// Hypothesis audit.

enum class Status { pass, fail, inconclusive };
const char* to_string(Status s);

struct Witness {
  std::string description;
  double argument = 0.0;
  double value = 0.0;
};

struct ConditionResult {
  std::string name;
  Status status = Status::inconclusive;
  std::string detail;
  std::vector<std::pair<std::string, double>> evidence;
  std::optional<Witness> witness;

  static ConditionResult passed(std::string name, std::string detail);
  static ConditionResult failed(std::string name, std::string detail, Witness witness);
  static ConditionResult undecided(std::string name, std::string detail);
};

struct HypothesisReport {
  /// Order: class_A, a1, a2, a3, a4, a5, a6.
  std::vector<ConditionResult> conditions;
  /// Sampled inf of K.
  double gamma = 0.0;
  /// Sampled liminf surrogate of K~(t) / t^alpha and the fitted log-log slope.
  double tail_ratio = 0.0;
  double tail_slope = 0.0;

  const ConditionResult& get(const std::string& name) const;
  bool any_fail() const;
};

struct SamplingConfig {
  int points_per_decade = 200;
  double positive_tol = 1e-9;
  /// K is sampled on {0} and a log grid over [k_grid_min, k_grid_max].
  double k_grid_min = 1e-6;
  double k_grid_max = 1e6;
  double tail_min = 1e2;
  double tail_max = 1e6;
  double slope_tol = 0.05;
  /// (a5) samples |t| in [small_t_min, small_t_max], (a6) in [large_t_min, large_t_max].
  double small_t_min = 1e-8;
  double small_t_max = 1e-1;
  double large_t_min = 1e1;
  double large_t_max = 1e6;
  /// Amplitude scan for the (a1) probes.
  double amplitude_min = 1e-3;
  double amplitude_max = 1e3;
  int amplitudes_per_decade = 20;
  /// Dimension n used for class A and the (a6) dimension shortcut; 0 means the mesh dimension.
  int nominal_dimension = 0;
};

HypothesisReport check_hypotheses(const KirchhoffLaw& law, const Nonlinearity& nl,
                                  const fem::Mesh& domain, const SamplingConfig& config = {});

/// Log-spaced grid with `per_decade` points per decade, both ends included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace kirchhoff::model
