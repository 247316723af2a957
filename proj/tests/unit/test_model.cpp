#include <cmath>

#include <doctest.h>

#include "kirchhoff/error.hpp"
#include "kirchhoff/fem.hpp"
#include "kirchhoff/model.hpp"

using namespace kirchhoff;

namespace {

const fem::Point kOrigin{0.0, 0.0};

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

/// Same law without closed forms, so K~ and K' go through quadrature and differences.
model::KirchhoffLaw opaque(model::KirchhoffLaw law) {
  law.tilde_k = nullptr;
  law.dk = nullptr;
  return law;
}

}  // namespace

TEST_CASE("K~ values") {
  CHECK(model::eval_tilde_K(model::affine_law(1, 2), 3.0) == doctest::Approx(12.0));
  CHECK(model::eval_tilde_K(opaque(model::affine_law(1, 2)), 3.0) == doctest::Approx(12.0).epsilon(1e-10));
  CHECK(model::eval_tilde_K(model::constant_law(5.0), 4.0) == doctest::Approx(20.0));
  for (const auto& law : {model::affine_law(1, 1), model::exp_decay_law(), opaque(model::affine_law(2, 3))})
    CHECK(model::eval_tilde_K(law, 0.0) == 0.0);
  CHECK(kind_of([] { model::eval_tilde_K(model::affine_law(1, 1), -1.0); }) == ErrorKind::domain);
}

TEST_CASE("K~ quadrature matches closed forms on a log grid") {
  for (const auto& law : {model::affine_law(1, 1), model::affine_law(2, 3), model::constant_law(0.5), model::exp_decay_law()}) {
    const auto bare = opaque(law);
    for (double t : model::log_grid(1e-4, 1e6, 4)) {
      const double closed = model::eval_tilde_K(law, t);
      CHECK(std::abs(model::eval_tilde_K(bare, t) - closed) <= 1e-9 * (1.0 + std::abs(closed)));
    }
  }
}

TEST_CASE("law invariants: dK~/dt = K and K finite") {
  for (const auto& law : {model::affine_law(1, 1), model::affine_law(2, 3), model::exp_decay_law()}) {
    for (double t : model::log_grid(1e-2, 1e3, 3)) {
      const double h = 1e-5 * (1 + t);
      const double fd = (model::eval_tilde_K(law, t + h) - model::eval_tilde_K(law, t - h)) / (2 * h);
      CHECK(fd == doctest::Approx(model::eval_K(law, t)).epsilon(1e-6));
    }
    for (double t : model::log_grid(1e-6, 1e6, 5)) CHECK(std::isfinite(model::eval_K(law, t)));
  }
  CHECK(model::eval_dK(opaque(model::affine_law(1, 3)), 2.0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(model::eval_dK(opaque(model::affine_law(1, 3)), 0.0) == doctest::Approx(3.0).epsilon(1e-5));
}

TEST_CASE("primitive F") {
  const auto lin = model::linear_nonlinearity();
  CHECK(model::eval_F(lin, kOrigin, 2.0) == doctest::Approx(2.0));
  const auto bump = model::bump_nonlinearity();
  for (const auto& nl : {lin, bump, model::cubic_nonlinearity(), model::sine_nonlinearity(), model::sine_forcing(1)})
    CHECK(model::eval_F(nl, {0.3, 0.0}, 0.0) == 0.0);
  for (double t : {-5.0, -1.0, 0.0, 0.5, 1.0}) {
    CHECK(model::eval_F(bump, kOrigin, t) == 0.0);
    CHECK(model::eval_f(bump, kOrigin, t) == 0.0);
  }
}

TEST_CASE("bump specimen") {
  const auto bump = model::bump_nonlinearity();
  CHECK(model::eval_f(bump, kOrigin, 1.5) == doctest::Approx(0.25));
  CHECK(model::eval_f(bump, kOrigin, 2.5) == 0.0);
  CHECK(model::eval_F(bump, kOrigin, 2.0) == doctest::Approx(1.0 / 6.0));
  CHECK(model::eval_F(bump, kOrigin, 7.0) == doctest::Approx(1.0 / 6.0));
  for (double t = -1.0; t < 4.0; t += 0.125) CHECK(model::eval_f(bump, kOrigin, t) >= 0.0);
}

TEST_CASE("nonlinearity invariants: dF/dt = f") {
  for (const auto& nl : {model::bump_nonlinearity(), model::cubic_nonlinearity(), model::sine_nonlinearity(),
                         model::sine_forcing(2)}) {
    for (double t : {-2.3, -0.4, 0.7, 1.3, 1.7, 3.1}) {
      const fem::Point x{0.37, 0.61};
      const double h = 1e-5;
      const double fd = (model::eval_F(nl, x, t + h) - model::eval_F(nl, x, t - h)) / (2 * h);
      const double f = model::eval_f(nl, x, t);
      CHECK(std::abs(fd - f) <= 1e-6 * std::max(1.0, std::abs(f)));
    }
  }
}

TEST_CASE("solve_h") {
  CHECK(model::solve_h(model::constant_law(1.0), 3.7) == doctest::Approx(3.7));
  CHECK(model::solve_h(model::affine_law(1, 1), 2.0) == doctest::Approx(1.0));
  CHECK(model::solve_h(model::affine_law(2, 3), 5.0) == doctest::Approx(1.0));
  CHECK(model::solve_h(model::affine_law(1, 1), 0.0) == 0.0);
  CHECK(kind_of([] { model::solve_h(model::exp_decay_law(), 1.0); }) == ErrorKind::unsupported_law);
  for (const auto& law : {model::affine_law(1, 0), model::affine_law(1, 1), model::affine_law(2, 3)}) {
    for (double s : model::log_grid(1e-6, 1e6, 5)) {
      const double h = model::solve_h(law, s);
      CHECK(std::abs(h * model::eval_K(law, h * h) - s) <= 1e-12 * (1 + s));
    }
  }
}

TEST_CASE("specimen names") {
  const auto law = model::law_by_name("affine(1,1)");
  CHECK(model::eval_K(law, 2.0) == doctest::Approx(3.0));
  CHECK(model::eval_tilde_K(law, 2.0) == doctest::Approx(4.0));
  CHECK(model::eval_K(model::law_by_name("constant(2.5)"), 9.0) == doctest::Approx(2.5));
  CHECK(model::eval_F(model::nonlinearity_by_name("scaled(10,linear)"), kOrigin, 1.0) == doctest::Approx(5.0));
  CHECK(kind_of([] { model::law_by_name("quadratic"); }) == ErrorKind::config);
  CHECK(kind_of([] { model::nonlinearity_by_name("bmp"); }) == ErrorKind::config);
  const auto lib = model::specimen_library();
  CHECK(lib.laws.count("affine(1,1)"));
  CHECK(lib.nonlinearities.count("bump"));
}

TEST_CASE("hypothesis audit on the affine/bump specimen") {
  const auto mesh = fem::build_interval_mesh(64, 1.0);
  auto law = model::affine_law(1, 1);
  const auto rep = model::check_hypotheses(law, model::bump_nonlinearity(), mesh, {});
  for (const auto& c : rep.conditions) CHECK_MESSAGE(c.status == model::Status::pass, c.name << ": " << c.detail);
  CHECK(rep.gamma >= 1.0 - 1e-12);
  CHECK(rep.tail_slope == doctest::Approx(2.0).epsilon(0.01));
  // Deterministic under a fixed sampling config.
  const auto again = model::check_hypotheses(law, model::bump_nonlinearity(), mesh, {});
  CHECK(again.tail_slope == rep.tail_slope);
  CHECK(again.gamma == rep.gamma);
}

TEST_CASE("hypothesis audit negative controls") {
  const auto mesh = fem::build_interval_mesh(32, 1.0);
  const auto decay = model::check_hypotheses(model::exp_decay_law(), model::bump_nonlinearity(), mesh, {});
  const auto& a2 = decay.get("a2");
  CHECK(a2.status == model::Status::fail);
  REQUIRE(a2.witness.has_value());
  CHECK(a2.witness->value <= 1e-9);
  CHECK(a2.witness->value == doctest::Approx(std::exp(-a2.witness->argument)));
  CHECK(decay.any_fail());

  const auto lin = model::check_hypotheses(model::affine_law(1, 1), model::linear_nonlinearity(), mesh, {});
  const auto& a5 = lin.get("a5");
  CHECK(a5.status == model::Status::fail);
  REQUIRE(a5.witness.has_value());
  CHECK(a5.witness->value == doctest::Approx(0.5));
}

TEST_CASE("audit invariants: fail implies witness, pass on a2 implies gamma > 0") {
  const auto mesh = fem::build_interval_mesh(32, 1.0);
  for (const auto& law : {model::affine_law(1, 1), model::constant_law(2.0), model::exp_decay_law()}) {
    for (const auto& nl : {model::bump_nonlinearity(), model::linear_nonlinearity(), model::cubic_nonlinearity(),
                           model::zero_nonlinearity()}) {
      const auto rep = model::check_hypotheses(law, nl, mesh, {});
      for (const auto& c : rep.conditions)
        if (c.status == model::Status::fail) CHECK(c.witness.has_value());
      if (rep.get("a2").status == model::Status::pass) CHECK(rep.gamma > 0.0);
    }
  }
}

TEST_CASE("dimension shortcut for a6") {
  const auto mesh = fem::build_interval_mesh(32, 1.0);
  model::SamplingConfig cfg;
  cfg.nominal_dimension = 4;
  auto law = model::affine_law(1, 1);
  const auto rep = model::check_hypotheses(law, model::bump_nonlinearity(), mesh, cfg);
  CHECK(rep.get("a6").status == model::Status::pass);
  CHECK(rep.get("a6").detail.find("automatic") != std::string::npos);
}

TEST_CASE("slowly vanishing limit is not claimed as a pass") {
  // F(t) = t^2 / (2 (1 + |log t|)) decays to 0 relative to t^2 only logarithmically.
  model::Nonlinearity slow;
  slow.name = "slow";
  slow.primitive = [](const fem::Point&, double t) {
    return t == 0.0 ? 0.0 : t * t / (2.0 * (1.0 + std::abs(std::log(std::abs(t)))));
  };
  slow.f = [](const fem::Point&, double t) {
    if (t == 0.0) return 0.0;
    const double l = 1.0 + std::abs(std::log(std::abs(t)));
    const double sign = std::abs(t) < 1.0 ? 1.0 : -1.0;
    return t / l + sign * t / (2.0 * l * l);
  };
  const auto rep = model::check_hypotheses(model::affine_law(1, 1), slow, fem::build_interval_mesh(16, 1.0), {});
  CHECK(rep.get("a5").status != model::Status::pass);
}
