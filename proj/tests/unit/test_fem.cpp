#include <cmath>
#include <random>

#include <doctest.h>

#include "kirchhoff/error.hpp"
#include "kirchhoff/fem.hpp"

using namespace kirchhoff;
using fem::FeFunction;

namespace {

FeFunction random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FeFunction v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::config;
}

}  // namespace

TEST_CASE("interval mesh layout") {
  const auto m2 = fem::build_interval_mesh(2, 1.0);
  REQUIRE(m2.nodes().size() == 3);
  CHECK(m2.nodes()[0][0] == 0.0);
  CHECK(m2.nodes()[1][0] == doctest::Approx(0.5));
  CHECK(m2.nodes()[2][0] == 1.0);
  CHECK(m2.num_interior() == 1);
  CHECK(m2.is_boundary(0));
  CHECK(m2.is_boundary(2));

  const auto m4 = fem::build_interval_mesh(4, 1.0);
  REQUIRE(m4.num_interior() == 3);
  const double expect[] = {0.25, 0.5, 0.75};
  for (int k = 0; k < 3; ++k) CHECK(m4.nodes()[m4.interior_nodes()[k]][0] == doctest::Approx(expect[k]));
  CHECK(m4.id() == "interval:4:1");
}

TEST_CASE("rectangle mesh layout") {
  const auto m = fem::build_rect_mesh(2, 2, 1.0, 1.0);
  REQUIRE(m.num_interior() == 1);
  CHECK(m.elements().size() == 8);
  const auto& p = m.nodes()[m.interior_nodes()[0]];
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(fem::build_rect_mesh(3, 3, 1.0, 1.0).num_interior() == 4);
  for (int e = 0; e < static_cast<int>(m.elements().size()); ++e) CHECK(m.signed_measure(e) > 0.0);
}

TEST_CASE("mesh preconditions") {
  CHECK(kind_of([] { fem::build_interval_mesh(1, 1.0); }) == ErrorKind::invalid_mesh);
  CHECK(kind_of([] { fem::build_rect_mesh(2, 1, 1.0, 1.0); }) == ErrorKind::invalid_mesh);
  CHECK(kind_of([] { fem::build_interval_mesh(4, -1.0); }) == ErrorKind::invalid_mesh);
}

TEST_CASE("mesh invariants: interior map is a bijection and boundary is flagged") {
  const auto m = fem::build_rect_mesh(5, 4, 2.0, 1.0);
  m.validate();
  std::vector<int> seen(m.num_interior(), 0);
  for (int i = 0; i < static_cast<int>(m.nodes().size()); ++i) {
    const auto& p = m.nodes()[i];
    const bool on_edge = p[0] == 0.0 || p[1] == 0.0 || std::abs(p[0] - 2.0) < 1e-12 || std::abs(p[1] - 1.0) < 1e-12;
    CHECK(m.is_boundary(i) == on_edge);
    if (!on_edge) ++seen.at(m.interior_index(i));
    else CHECK(m.interior_index(i) == -1);
  }
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("hand-integrated P1 matrices") {
  const auto ops2 = fem::assemble(fem::build_interval_mesh(2, 1.0));
  CHECK(ops2.stiffness().coeff(0, 0) == doctest::Approx(4.0));
  CHECK(ops2.mass().coeff(0, 0) == doctest::Approx(1.0 / 3.0));

  const auto ops4 = fem::assemble(fem::build_interval_mesh(4, 1.0));
  const Eigen::MatrixXd a = Eigen::MatrixXd(ops4.stiffness());
  for (int i = 0; i < 3; ++i) {
    CHECK(a(i, i) == doctest::Approx(8.0));
    if (i + 1 < 3) {
      CHECK(a(i, i + 1) == doctest::Approx(-4.0));
      CHECK(a(i + 1, i) == doctest::Approx(-4.0));
    }
  }
  CHECK(a(0, 2) == 0.0);
}

TEST_CASE("operator invariants") {
  for (const auto& mesh : {fem::build_interval_mesh(37, 2.5), fem::build_rect_mesh(7, 5, 1.5, 0.5)}) {
    const auto ops = fem::assemble(mesh);
    const Eigen::MatrixXd a = Eigen::MatrixXd(ops.stiffness());
    const Eigen::MatrixXd m = Eigen::MatrixXd(ops.mass());
    CHECK((a - a.transpose()).norm() <= 1e-14 * a.norm());
    CHECK((m - m.transpose()).norm() <= 1e-14 * m.norm());
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const FeFunction x = random_vector(ops.size(), s);
      CHECK(x.dot(a * x) > 0.0);
    }
    // Summed over all nodes the mass matrix integrates 1; the interior block
    // misses the boundary hats, so compare the quadrature weights instead.
    double w = 0.0;
    for (const auto& q : ops.quadrature()) w += q.weight;
    CHECK(w == doctest::Approx(ops.domain_measure()).epsilon(1e-12));
  }
}

TEST_CASE("assembly is deterministic") {
  const auto mesh = fem::build_rect_mesh(6, 6, 1.0, 1.0);
  const auto a = fem::assemble(mesh);
  const auto b = fem::assemble(mesh);
  CHECK(Eigen::MatrixXd(a.stiffness()) == Eigen::MatrixXd(b.stiffness()));
  CHECK(Eigen::MatrixXd(a.mass()) == Eigen::MatrixXd(b.mass()));
}

TEST_CASE("degenerate element is rejected") {
  std::vector<fem::Point> nodes{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {0.0, 1.0}};
  std::vector<std::array<int, 3>> elems{{0, 1, 3}, {0, 1, 2}};
  const fem::Mesh mesh(2, nodes, elems, {true, true, true, true});
  try {
    fem::assemble(mesh);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::assembly || e.kind() == ErrorKind::invalid_mesh));
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("h1 norm") {
  const auto ops = fem::assemble(fem::build_interval_mesh(2, 1.0));
  CHECK(fem::h1_norm(ops, FeFunction::Zero(1)) == 0.0);
  CHECK(fem::h1_norm(ops, FeFunction::Ones(1)) == doctest::Approx(2.0));

  const auto big = fem::assemble(fem::build_rect_mesh(8, 8, 1.0, 1.0));
  const FeFunction u = random_vector(big.size(), 3), v = random_vector(big.size(), 4);
  CHECK(fem::h1_norm(big, FeFunction(-3.5 * u)) == doctest::Approx(3.5 * fem::h1_norm(big, u)).epsilon(1e-14));
  // Parallelogram law.
  const double lhs = std::pow(fem::h1_norm(big, FeFunction(u + v)), 2) + std::pow(fem::h1_norm(big, FeFunction(u - v)), 2);
  const double rhs = 2 * std::pow(fem::h1_norm(big, u), 2) + 2 * std::pow(fem::h1_norm(big, v), 2);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
  CHECK(kind_of([&] { fem::h1_norm(big, FeFunction::Zero(3)); }) == ErrorKind::shape);
}

TEST_CASE("riesz solve") {
  const auto ops2 = fem::assemble(fem::build_interval_mesh(2, 1.0));
  CHECK(fem::riesz_solve(ops2, Eigen::VectorXd::Ones(1))[0] == doctest::Approx(0.25));

  const auto ops = fem::assemble(fem::build_rect_mesh(9, 7, 1.0, 2.0));
  CHECK(fem::riesz_solve(ops, Eigen::VectorXd::Zero(ops.size())).norm() == 0.0);
  const FeFunction u = random_vector(ops.size(), 9);
  const FeFunction w = fem::riesz_solve(ops, ops.stiffness() * u);
  CHECK((w - u).norm() <= 1e-10 * u.norm());
  CHECK(kind_of([&] { fem::riesz_solve(ops, Eigen::VectorXd::Zero(2)); }) == ErrorKind::shape);
}

TEST_CASE("interpolated Dirichlet integral converges at order 2 in the value") {
  // u = sin(pi x) sin(pi y): int |grad u|^2 = pi^2 / 2.
  const double exact = M_PI * M_PI / 2.0;
  std::vector<double> errs;
  for (int n : {8, 16, 32}) {
    const auto mesh = fem::build_rect_mesh(n, n, 1.0, 1.0);
    const auto ops = fem::assemble(mesh);
    const FeFunction u = fem::interpolate(mesh, [](const fem::Point& p) { return std::sin(M_PI * p[0]) * std::sin(M_PI * p[1]); });
    errs.push_back(std::abs(std::pow(fem::h1_norm(ops, u), 2) - exact));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  CHECK(std::log2(errs[1] / errs[2]) > 1.8);
}

TEST_CASE("evaluate and transfer reproduce P1 functions") {
  const auto coarse = fem::build_rect_mesh(4, 4, 1.0, 1.0);
  const auto fine = fem::build_rect_mesh(8, 8, 1.0, 1.0);
  const auto fn = [](const fem::Point& p) { return p[0] * (1 - p[0]) * p[1] * (1 - p[1]); };
  const FeFunction uc = fem::interpolate(coarse, fn);
  const FeFunction uf = fem::transfer(coarse, uc, fine);
  // Nested spaces: transferring back is exact at the coarse nodes.
  const FeFunction back = fem::transfer(fine, uf, coarse);
  CHECK((back - uc).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(fem::evaluate(coarse, uc, {0.5, 0.5}) == doctest::Approx(fn({0.5, 0.5})));
  CHECK(fem::evaluate(coarse, uc, {0.0, 0.3}) == 0.0);
}

TEST_CASE("Dirichlet eigenpairs on the unit interval") {
  const auto ops = fem::assemble(fem::build_interval_mesh(128, 1.0));
  const auto eig = fem::dirichlet_eigenpairs(ops, 3);
  REQUIRE(eig.values.size() == 3);
  for (int k = 1; k <= 3; ++k) CHECK(eig.values[k - 1] == doctest::Approx(k * k * M_PI * M_PI).epsilon(2e-3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(eig.vectors[i].dot(ops.mass() * eig.vectors[j]) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
}

TEST_CASE("profile library is nonempty and nonnegative") {
  const auto mesh = fem::build_interval_mesh(32, 1.0);
  const auto lib = fem::profile_library(mesh);
  CHECK(lib.size() >= 3);
  for (const auto& p : lib) {
    const FeFunction u = fem::interpolate(mesh, p.fn);
    CHECK(u.minCoeff() >= 0.0);
    CHECK(u.maxCoeff() > 0.0);
  }
}
