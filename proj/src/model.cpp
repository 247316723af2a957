#include "kirchhoff/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>

#include "kirchhoff/error.hpp"

namespace kirchhoff::model {

namespace {

struct SimpsonPanel {
  const std::function<double(double)>& fn;
  bool failed = false;

  double refine(double a, double b, double fa, double fm, double fb, double whole, double tol,
                int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = fn(lm);
    const double frm = fn(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
      failed = true;
      return left + right;
    }
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
    if (std::abs(delta) <= 15.0 * std::max(tol, floor)) return left + right + delta / 15.0;
    if (depth <= 0) {
      failed = true;
      return left + right + delta / 15.0;
    }
    return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& fn, double a, double b,
                          double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_adaptive(fn, b, a, abs_tol, max_depth);

  // Geometric panels [a, a+1], [a+1, a+2], [a+2, a+4], ... so narrow features
  // near the origin are not skipped on long ranges.
  std::vector<double> cuts{a};
  double width = 1.0;
  while (cuts.back() + width < b) {
    cuts.push_back(cuts.back() + width);
    width = cuts.back() - a;
  }
  cuts.push_back(b);

  const double panel_tol = abs_tol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  SimpsonPanel panel{fn};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const double fa = fn(lo), fb = fn(hi), fm = fn(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += panel.refine(lo, hi, fa, fm, fb, whole, panel_tol, max_depth);
  }
  if (panel.failed || !std::isfinite(total)) {
    throw Error(ErrorKind::integration,
                "adaptive Simpson did not converge on [" + fmt(a) + ", " + fmt(b) + "]");
  }
  return total;
}

double eval_K(const KirchhoffLaw& law, double t) {
  if (t < 0.0) throw Error(ErrorKind::domain, "K evaluated at negative t = " + fmt(t));
  return law.k(t);
}

double eval_tilde_K(const KirchhoffLaw& law, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::domain, "K~ evaluated at negative t = " + fmt(t));
  if (law.tilde_k) return law.tilde_k(t);
  try {
    return integrate_adaptive(law.k, 0.0, t);
  } catch (const Error& e) {
    throw Error(ErrorKind::integration, "K~(" + fmt(t) + ") for law " + law.name + ": " + e.what());
  }
}

double eval_dK(const KirchhoffLaw& law, double t) {
  if (t < 0.0) throw Error(ErrorKind::domain, "K' evaluated at negative t = " + fmt(t));
  if (law.dk) return law.dk(t);
  const double h = 1e-6 * (1.0 + t);
  if (t < h) return (law.k(t + h) - law.k(t)) / h;
  return (law.k(t + h) - law.k(t - h)) / (2.0 * h);
}

double eval_f(const Nonlinearity& nl, const Point& x, double t) { return nl.f(x, t); }

double eval_F(const Nonlinearity& nl, const Point& x, double t) {
  if (nl.primitive) return nl.primitive(x, t);
  try {
    return integrate_adaptive([&](double s) { return nl.f(x, s); }, 0.0, t);
  } catch (const Error& e) {
    throw Error(ErrorKind::integration, "F(x, " + fmt(t) + ") for " + nl.name + ": " + e.what());
  }
}

double eval_dfdt(const Nonlinearity& nl, const Point& x, double t) {
  if (nl.dfdt) return nl.dfdt(x, t);
  const double h = 1e-6 * (1.0 + std::abs(t));
  return (nl.f(x, t + h) - nl.f(x, t - h)) / (2.0 * h);
}

double solve_h(const KirchhoffLaw& law, double s) {
  if (!law.monotone) {
    throw Error(ErrorKind::unsupported_law,
                "law " + law.name + " does not claim t K(t^2) increasing and onto");
  }
  if (!(s >= 0.0)) throw Error(ErrorKind::domain, "h evaluated at negative s = " + fmt(s));
  if (s == 0.0) return 0.0;

  auto forward = [&](double t) { return t * law.k(t * t); };
  const double tol = 1e-12 * (1.0 + s);

  double lo = 0.0, hi = 1.0;
  while (forward(hi) < s) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) {
      throw Error(ErrorKind::no_root, "bracket for h(" + fmt(s) + ") exceeds 1e12 in law " + law.name);
    }
  }

  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double r = forward(t) - s;
    if (std::abs(r) <= tol) return t;
    if (r > 0) hi = t; else lo = t;
    // Newton polish, kept inside the bracket.
    const double deriv = law.k(t * t) + 2.0 * t * t * eval_dK(law, t * t);
    double next = t - r / deriv;
    if (!(deriv > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  // Bracket collapsed to adjacent doubles; return the closer end.
  const double rl = std::abs(forward(lo) - s), rh = std::abs(forward(hi) - s);
  const double best = rl < rh ? lo : hi;
  const double res = std::min(rl, rh);
  if (res <= tol || std::nextafter(lo, hi) >= hi) return best;
  throw Error(ErrorKind::no_root, "h(" + fmt(s) + ") did not converge for law " + law.name);
}

Nonlinearity scaled(const Nonlinearity& nl, double c) {
  Nonlinearity out = nl;
  out.name = "scaled(" + fmt(c) + "," + nl.name + ")";
  auto f = nl.f;
  out.f = [f, c](const Point& x, double t) { return c * f(x, t); };
  if (nl.primitive) {
    auto p = nl.primitive;
    out.primitive = [p, c](const Point& x, double t) { return c * p(x, t); };
  }
  if (nl.dfdt) {
    auto d = nl.dfdt;
    out.dfdt = [d, c](const Point& x, double t) { return c * d(x, t); };
  }
  return out;
}

KirchhoffLaw affine_law(double a, double b) {
  KirchhoffLaw law;
  law.name = "affine(" + fmt(a) + "," + fmt(b) + ")";
  law.k = [a, b](double t) { return a + b * t; };
  law.tilde_k = [a, b](double t) { return a * t + 0.5 * b * t * t; };
  law.dk = [b](double) { return b; };
  law.alpha = b > 0.0 ? 2.0 : 1.0;
  law.monotone = a > 0.0 && b >= 0.0;
  return law;
}

KirchhoffLaw constant_law(double gamma) {
  KirchhoffLaw law;
  law.name = "constant(" + fmt(gamma) + ")";
  law.k = [gamma](double) { return gamma; };
  law.tilde_k = [gamma](double t) { return gamma * t; };
  law.dk = [](double) { return 0.0; };
  law.alpha = 1.0;
  law.monotone = gamma > 0.0;
  return law;
}

KirchhoffLaw exp_decay_law() {
  KirchhoffLaw law;
  law.name = "exp_decay";
  law.k = [](double t) { return std::exp(-t); };
  law.tilde_k = [](double t) { return -std::expm1(-t); };
  law.dk = [](double t) { return -std::exp(-t); };
  law.alpha = 1.0;
  law.monotone = false;
  return law;
}

Nonlinearity bump_nonlinearity() {
  Nonlinearity nl;
  nl.name = "bump";
  nl.f = [](const Point&, double t) { return (t > 1.0 && t < 2.0) ? (t - 1.0) * (2.0 - t) : 0.0; };
  nl.primitive = [](const Point&, double t) {
    if (t <= 1.0) return 0.0;
    const double w = std::min(t, 2.0) - 1.0;
    return w * w / 2.0 - w * w * w / 3.0;
  };
  nl.dfdt = [](const Point&, double t) { return (t > 1.0 && t < 2.0) ? 3.0 - 2.0 * t : 0.0; };
  nl.q = 1.0;
  return nl;
}

Nonlinearity linear_nonlinearity() {
  Nonlinearity nl;
  nl.name = "linear";
  nl.f = [](const Point&, double t) { return t; };
  nl.primitive = [](const Point&, double t) { return 0.5 * t * t; };
  nl.dfdt = [](const Point&, double) { return 1.0; };
  nl.q = 1.0;
  return nl;
}

Nonlinearity cubic_nonlinearity() {
  Nonlinearity nl;
  nl.name = "cubic";
  nl.f = [](const Point&, double t) { return t * t * t; };
  nl.primitive = [](const Point&, double t) { return 0.25 * t * t * t * t; };
  nl.dfdt = [](const Point&, double t) { return 3.0 * t * t; };
  nl.q = 3.0;
  return nl;
}

Nonlinearity sine_nonlinearity() {
  Nonlinearity nl;
  nl.name = "sine";
  nl.f = [](const Point&, double t) { return std::sin(t); };
  nl.primitive = [](const Point&, double t) { return 1.0 - std::cos(t); };
  nl.dfdt = [](const Point&, double t) { return std::cos(t); };
  nl.q = 1.0;
  return nl;
}

Nonlinearity zero_nonlinearity() {
  Nonlinearity nl;
  nl.name = "zero";
  nl.f = [](const Point&, double) { return 0.0; };
  nl.primitive = [](const Point&, double) { return 0.0; };
  nl.dfdt = [](const Point&, double) { return 0.0; };
  nl.q = 1.0;
  return nl;
}

Nonlinearity sine_forcing(int dimension) {
  using std::numbers::pi;
  Nonlinearity nl;
  nl.x_dependent = true;
  nl.q = 1.0;
  std::function<double(const Point&)> s;
  if (dimension == 1) {
    nl.name = "sine_forcing";
    s = [](const Point& x) { return std::sin(pi * x[0]); };
  } else {
    nl.name = "sine_forcing_2d";
    s = [](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  }
  nl.f = [s](const Point& x, double) { return s(x); };
  nl.primitive = [s](const Point& x, double t) { return s(x) * t; };
  nl.dfdt = [](const Point&, double) { return 0.0; };
  return nl;
}

SpecimenLibrary specimen_library() {
  SpecimenLibrary lib;
  for (auto law : {affine_law(1, 1), affine_law(1, 0), affine_law(2, 3), constant_law(1),
                   exp_decay_law()}) {
    lib.laws.emplace(law.name, law);
  }
  for (auto nl : {bump_nonlinearity(), linear_nonlinearity(), cubic_nonlinearity(),
                  sine_nonlinearity(), zero_nonlinearity(), sine_forcing(1), sine_forcing(2)}) {
    lib.nonlinearities.emplace(nl.name, nl);
  }
  return lib;
}

namespace {

std::vector<double> parse_args(const std::string& name, const std::string& args) {
  std::vector<double> out;
  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "bad numeric argument '" + item + "' in " + name);
    }
  }
  return out;
}

}  // namespace

KirchhoffLaw law_by_name(const std::string& name) {
  static const std::regex pattern(R"(^\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) throw Error(ErrorKind::config, "unknown law '" + name + "'");
  const std::string head = m[1];
  const auto args = parse_args(name, m[2]);
  if (head == "affine" && args.size() == 2) return affine_law(args[0], args[1]);
  if (head == "constant" && args.size() == 1) return constant_law(args[0]);
  if (head == "exp_decay" && args.empty()) return exp_decay_law();
  throw Error(ErrorKind::config, "unknown law '" + name + "'");
}

Nonlinearity nonlinearity_by_name(const std::string& name) {
  const std::string prefix = "scaled(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    const std::string inner = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    const auto comma = inner.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::config, "bad scaled specimen '" + name + "'");
    const auto c = parse_args(name, inner.substr(0, comma));
    if (c.size() != 1) throw Error(ErrorKind::config, "bad scale in '" + name + "'");
    return scaled(nonlinearity_by_name(inner.substr(comma + 1)), c[0]);
  }
  if (name == "bump") return bump_nonlinearity();
  if (name == "linear") return linear_nonlinearity();
  if (name == "cubic") return cubic_nonlinearity();
  if (name == "sine") return sine_nonlinearity();
  if (name == "zero") return zero_nonlinearity();
  if (name == "sine_forcing") return sine_forcing(1);
  if (name == "sine_forcing_2d") return sine_forcing(2);
  throw Error(ErrorKind::config, "unknown nonlinearity '" + name + "'");
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const double decades = std::log10(hi / lo);
  const int n = std::max(1, static_cast<int>(std::lround(decades * per_decade)));
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = lo * std::pow(10.0, decades * i / n);
  out.back() = hi;
  return out;
}

}  // namespace kirchhoff::model
