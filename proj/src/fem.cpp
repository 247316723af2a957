#include "kirchhoff/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_mesh: return "invalid mesh";
    case ErrorKind::assembly: return "assembly error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::linear_solve: return "linear solve error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::integration: return "integration error";
    case ErrorKind::unsupported_law: return "unsupported law";
    case ErrorKind::no_root: return "no root";
    case ErrorKind::feasibility: return "feasibility error";
    case ErrorKind::config: return "config error";
  }
  return "error";
}

}  // namespace kirchhoff

namespace kirchhoff::fem {

namespace {

using Triplet = Eigen::Triplet<double>;

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Mesh::Mesh(int dimension, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
           std::vector<bool> boundary, std::optional<GridInfo> grid)
    : dimension_(dimension),
      nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary)),
      grid_(grid) {
  if (dimension_ != 1 && dimension_ != 2) {
    throw Error(ErrorKind::invalid_mesh, "dimension must be 1 or 2");
  }
  if (boundary_.size() != nodes_.size()) {
    throw Error(ErrorKind::invalid_mesh, "boundary flags do not match node count");
  }
  interior_index_.assign(nodes_.size(), -1);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (!boundary_[n]) {
      interior_index_[n] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(static_cast<int>(n));
    }
  }
  const int nv = vertices_per_element();
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int k = 0; k < nv; ++k) {
      const int v = elements_[e][k];
      if (v < 0 || v >= static_cast<int>(nodes_.size())) {
        throw Error(ErrorKind::invalid_mesh, "element " + std::to_string(e) + " references node " +
                                                 std::to_string(v) + " out of range");
      }
    }
  }
}

double Mesh::signed_measure(int e) const {
  const auto& el = elements_[e];
  const Point& a = nodes_[el[0]];
  const Point& b = nodes_[el[1]];
  if (dimension_ == 1) return b[0] - a[0];
  const Point& c = nodes_[el[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

void Mesh::validate() const {
  if (elements_.empty()) throw Error(ErrorKind::invalid_mesh, "mesh has no elements");
  for (int e = 0; e < static_cast<int>(elements_.size()); ++e) {
    if (!(signed_measure(e) > 0.0)) {
      throw Error(ErrorKind::invalid_mesh,
                  "element " + std::to_string(e) + " has non-positive measure");
    }
  }
  // Facets owned by a single element lie on the boundary.
  std::map<std::vector<int>, int> facet_count;
  for (const auto& el : elements_) {
    if (dimension_ == 1) {
      ++facet_count[{el[0]}];
      ++facet_count[{el[1]}];
    } else {
      for (int k = 0; k < 3; ++k) {
        int a = el[k], b = el[(k + 1) % 3];
        if (a > b) std::swap(a, b);
        ++facet_count[{a, b}];
      }
    }
  }
  for (const auto& [facet, count] : facet_count) {
    if (count != 1) continue;
    for (int v : facet) {
      if (!boundary_[v]) {
        throw Error(ErrorKind::invalid_mesh,
                    "node " + std::to_string(v) + " lies on the boundary but is not flagged");
      }
    }
  }
  for (int i = 0; i < num_interior(); ++i) {
    if (interior_index_[interior_nodes_[i]] != i) {
      throw Error(ErrorKind::invalid_mesh, "interior index map is not a bijection");
    }
  }
}

std::string Mesh::id() const {
  std::ostringstream os;
  if (grid_) {
    if (dimension_ == 1) {
      os << "interval:" << grid_->cells[0] << ":" << format_number(grid_->lengths[0]);
    } else {
      os << "rect:" << grid_->cells[0] << "x" << grid_->cells[1] << ":"
         << format_number(grid_->lengths[0]) << "x" << format_number(grid_->lengths[1]);
    }
  } else {
    os << "custom:" << dimension_ << "d:" << nodes_.size() << "n:" << elements_.size() << "e";
  }
  return os.str();
}

Mesh build_interval_mesh(int n_cells, double length) {
  if (n_cells < 2) throw Error(ErrorKind::invalid_mesh, "interval mesh needs at least 2 cells");
  if (!(length > 0.0)) throw Error(ErrorKind::invalid_mesh, "interval length must be positive");
  std::vector<Point> nodes(n_cells + 1);
  std::vector<bool> boundary(n_cells + 1, false);
  for (int i = 0; i <= n_cells; ++i) nodes[i] = {length * i / n_cells, 0.0};
  boundary.front() = boundary.back() = true;
  std::vector<std::array<int, 3>> elements(n_cells);
  for (int i = 0; i < n_cells; ++i) elements[i] = {i, i + 1, -1};
  Mesh mesh(1, std::move(nodes), std::move(elements), std::move(boundary),
            GridInfo{{n_cells, 1}, {length, 0.0}});
  mesh.validate();
  return mesh;
}

Mesh build_rect_mesh(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2) throw Error(ErrorKind::invalid_mesh, "rectangle mesh needs at least 2x2 cells");
  if (!(lx > 0.0 && ly > 0.0)) throw Error(ErrorKind::invalid_mesh, "rectangle sides must be positive");
  const int stride = nx + 1;
  std::vector<Point> nodes;
  std::vector<bool> boundary;
  nodes.reserve(static_cast<std::size_t>(stride) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      nodes.push_back({lx * i / nx, ly * j / ny});
      boundary.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  }
  std::vector<std::array<int, 3>> elements;
  elements.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = j * stride + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + stride;
      const int v11 = v01 + 1;
      elements.push_back({v00, v10, v11});
      elements.push_back({v00, v11, v01});
    }
  }
  Mesh mesh(2, std::move(nodes), std::move(elements), std::move(boundary),
            GridInfo{{nx, ny}, {lx, ly}});
  mesh.validate();
  return mesh;
}

AssembledOperators::AssembledOperators(Mesh mesh, SparseMatrix stiffness, SparseMatrix mass,
                                       std::vector<QuadPoint> quadrature, double measure)
    : mesh_(std::make_shared<const Mesh>(std::move(mesh))),
      stiffness_(std::move(stiffness)),
      mass_(std::move(mass)),
      quadrature_(std::move(quadrature)),
      measure_(measure) {
  auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
  factor->compute(stiffness_);
  if (factor->info() != Eigen::Success) {
    throw Error(ErrorKind::linear_solve, "stiffness matrix is not positive definite");
  }
  factor_ = std::move(factor);
}

FeFunction AssembledOperators::solve(const Eigen::VectorXd& rhs) const {
  check_shape(*this, rhs, "right-hand side");
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return FeFunction::Zero(size());
  FeFunction w = factor_->solve(rhs);
  Eigen::VectorXd r = rhs - stiffness_ * w;
  for (int sweep = 0; sweep < 3 && r.norm() > 1e-12 * rhs_norm; ++sweep) {
    w += factor_->solve(r);
    r = rhs - stiffness_ * w;
  }
  const double rel = r.norm() / rhs_norm;
  if (!std::isfinite(rel) || rel > 1e-12) {
    throw Error(ErrorKind::linear_solve, "relative residual " + format_number(rel) + " above 1e-12");
  }
  return w;
}

AssembledOperators assemble(const Mesh& mesh) {
  const int n = mesh.num_interior();
  const int nv = mesh.vertices_per_element();
  std::vector<Triplet> a_trip, m_trip;
  std::vector<QuadPoint> quad;
  double measure = 0.0;

  // Reference rules: points in barycentric coordinates, weights sum to 1.
  std::vector<std::array<double, 3>> bary;
  std::vector<double> ref_w;
  if (mesh.dimension() == 1) {
    const double g = 0.5 / std::sqrt(3.0);
    bary = {{0.5 + g, 0.5 - g, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
    ref_w = {0.5, 0.5};
  } else {
    bary = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
    ref_w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  }

  const auto& nodes = mesh.nodes();
  for (int e = 0; e < static_cast<int>(mesh.elements().size()); ++e) {
    const auto& el = mesh.elements()[e];
    const double meas = mesh.signed_measure(e);
    if (!(meas > 0.0) || !std::isfinite(meas)) {
      throw Error(ErrorKind::assembly, "degenerate element " + std::to_string(e) +
                                           " (measure " + format_number(meas) + ")");
    }
    measure += meas;

    // Constant shape gradients.
    std::array<std::array<double, 2>, 3> grad{};
    if (mesh.dimension() == 1) {
      grad[0] = {-1.0 / meas, 0.0};
      grad[1] = {1.0 / meas, 0.0};
    } else {
      const Point& p0 = nodes[el[0]];
      const Point& p1 = nodes[el[1]];
      const Point& p2 = nodes[el[2]];
      const double inv = 1.0 / (2.0 * meas);
      grad[0] = {(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv};
      grad[1] = {(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv};
      grad[2] = {(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv};
    }

    std::array<int, 3> dofs{-1, -1, -1};
    for (int k = 0; k < nv; ++k) dofs[k] = mesh.interior_index(el[k]);

    for (int a = 0; a < nv; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nv; ++b) {
        if (dofs[b] < 0) continue;
        const double k_ab = meas * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
        a_trip.emplace_back(dofs[a], dofs[b], k_ab);
      }
    }

    for (std::size_t q = 0; q < bary.size(); ++q) {
      QuadPoint qp;
      qp.element = e;
      qp.weight = ref_w[q] * meas;
      qp.dofs = dofs;
      for (int k = 0; k < nv; ++k) {
        qp.shape[k] = bary[q][k];
        qp.x[0] += bary[q][k] * nodes[el[k]][0];
        qp.x[1] += bary[q][k] * nodes[el[k]][1];
      }
      for (int a = 0; a < nv; ++a) {
        if (dofs[a] < 0) continue;
        for (int b = 0; b < nv; ++b) {
          if (dofs[b] < 0) continue;
          m_trip.emplace_back(dofs[a], dofs[b], qp.weight * qp.shape[a] * qp.shape[b]);
        }
      }
      quad.push_back(qp);
    }
  }

  SparseMatrix stiffness(n, n), mass(n, n);
  stiffness.setFromTriplets(a_trip.begin(), a_trip.end());
  mass.setFromTriplets(m_trip.begin(), m_trip.end());
  stiffness.makeCompressed();
  mass.makeCompressed();
  return AssembledOperators(mesh, std::move(stiffness), std::move(mass), std::move(quad), measure);
}

void check_shape(const AssembledOperators& ops, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != ops.size()) {
    throw Error(ErrorKind::shape, std::string(what) + " has length " + std::to_string(v.size()) +
                                      ", expected " + std::to_string(ops.size()));
  }
}

double h1_inner(const AssembledOperators& ops, const FeFunction& u, const FeFunction& v) {
  check_shape(ops, u, "u");
  check_shape(ops, v, "v");
  return u.dot(ops.stiffness() * v);
}

double h1_norm(const AssembledOperators& ops, const FeFunction& u) {
  return std::sqrt(std::max(0.0, h1_inner(ops, u, u)));
}

FeFunction riesz_solve(const AssembledOperators& ops, const Eigen::VectorXd& rhs) {
  return ops.solve(rhs);
}

FeFunction interpolate(const Mesh& mesh, const std::function<double(const Point&)>& fn) {
  FeFunction u(mesh.num_interior());
  for (int i = 0; i < mesh.num_interior(); ++i) u[i] = fn(mesh.nodes()[mesh.interior_nodes()[i]]);
  return u;
}

namespace {

double nodal(const Mesh& mesh, const FeFunction& u, int node) {
  const int i = mesh.interior_index(node);
  return i < 0 ? 0.0 : u[i];
}

double evaluate_unstructured(const Mesh& mesh, const FeFunction& u, const Point& x) {
  const auto& nodes = mesh.nodes();
  constexpr double slack = 1e-12;
  for (const auto& el : mesh.elements()) {
    if (mesh.dimension() == 1) {
      const double a = nodes[el[0]][0], b = nodes[el[1]][0];
      if (x[0] < a - slack || x[0] > b + slack) continue;
      const double s = (x[0] - a) / (b - a);
      return (1 - s) * nodal(mesh, u, el[0]) + s * nodal(mesh, u, el[1]);
    }
    const Point& p0 = nodes[el[0]];
    const Point& p1 = nodes[el[1]];
    const Point& p2 = nodes[el[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
    const double l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
    const double l0 = 1 - l1 - l2;
    if (l0 < -slack || l1 < -slack || l2 < -slack) continue;
    return l0 * nodal(mesh, u, el[0]) + l1 * nodal(mesh, u, el[1]) + l2 * nodal(mesh, u, el[2]);
  }
  return 0.0;
}

}  // namespace

double evaluate(const Mesh& mesh, const FeFunction& u, const Point& x) {
  if (u.size() != mesh.num_interior()) {
    throw Error(ErrorKind::shape, "function does not match mesh");
  }
  if (!mesh.grid()) return evaluate_unstructured(mesh, u, x);
  const GridInfo& g = *mesh.grid();
  if (mesh.dimension() == 1) {
    if (x[0] < 0.0 || x[0] > g.lengths[0]) return 0.0;
    const double h = g.lengths[0] / g.cells[0];
    const int i = std::clamp(static_cast<int>(std::floor(x[0] / h)), 0, g.cells[0] - 1);
    const double s = x[0] / h - i;
    return (1 - s) * nodal(mesh, u, i) + s * nodal(mesh, u, i + 1);
  }
  if (x[0] < 0.0 || x[0] > g.lengths[0] || x[1] < 0.0 || x[1] > g.lengths[1]) return 0.0;
  const double hx = g.lengths[0] / g.cells[0];
  const double hy = g.lengths[1] / g.cells[1];
  const int i = std::clamp(static_cast<int>(std::floor(x[0] / hx)), 0, g.cells[0] - 1);
  const int j = std::clamp(static_cast<int>(std::floor(x[1] / hy)), 0, g.cells[1] - 1);
  const double xi = x[0] / hx - i;
  const double eta = x[1] / hy - j;
  const int stride = g.cells[0] + 1;
  const int v00 = j * stride + i;
  const double u00 = nodal(mesh, u, v00);
  const double u10 = nodal(mesh, u, v00 + 1);
  const double u01 = nodal(mesh, u, v00 + stride);
  const double u11 = nodal(mesh, u, v00 + stride + 1);
  if (xi >= eta) return u00 + xi * (u10 - u00) + eta * (u11 - u10);
  return u00 + eta * (u01 - u00) + xi * (u11 - u01);
}

FeFunction transfer(const Mesh& from, const FeFunction& u, const Mesh& to) {
  return interpolate(to, [&](const Point& x) { return evaluate(from, u, x); });
}

std::vector<NamedProfile> profile_library(const Mesh& mesh) {
  using std::numbers::pi;
  std::array<double, 2> len{1.0, 1.0};
  if (mesh.grid()) len = mesh.grid()->lengths;
  const int dim = mesh.dimension();
  // Normalized distance to the bounding box, in [0, 1/2].
  auto dist = [len, dim](const Point& x) {
    double d = std::min(x[0] / len[0], 1.0 - x[0] / len[0]);
    if (dim == 2) d = std::min({d, x[1] / len[1], 1.0 - x[1] / len[1]});
    return std::max(0.0, d);
  };
  std::vector<NamedProfile> out;
  out.push_back({"sine", [len, dim](const Point& x) {
                   double v = std::sin(pi * x[0] / len[0]);
                   if (dim == 2) v *= std::sin(pi * x[1] / len[1]);
                   return v;
                 }});
  out.push_back({"tent", [dist](const Point& x) { return 2.0 * dist(x); }});
  for (int slope : {4, 8, 16}) {
    out.push_back({"plateau(" + std::to_string(slope) + ")",
                   [dist, slope](const Point& x) { return std::min(1.0, slope * dist(x)); }});
  }
  return out;
}

EigenPairs dirichlet_eigenpairs(const AssembledOperators& ops, int count, double tol, int max_iter) {
  const int n = ops.size();
  count = std::min(count, n);
  EigenPairs out;
  if (count <= 0) return out;
  const int block = std::min(n, count + 4);
  Eigen::MatrixXd x(n, block);
  if (block == n) {
    x.setIdentity();
  } else {
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> normal;
    for (int j = 0; j < block; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
  }

  const SparseMatrix& a = ops.stiffness();
  const SparseMatrix& m = ops.mass();
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(count, -1.0);
  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd y(n, block);
    if (block == n && it == 0) {
      y = x;
    } else {
      Eigen::MatrixXd mx = m * x;
      for (int j = 0; j < block; ++j) y.col(j) = ops.solve(mx.col(j));
    }
    Eigen::MatrixXd ar = y.transpose() * (a * y);
    Eigen::MatrixXd mr = y.transpose() * (m * y);
    ar = 0.5 * (ar + ar.transpose()).eval();
    mr = 0.5 * (mr + mr.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ar, mr);
    if (ges.info() != Eigen::Success) {
      throw Error(ErrorKind::linear_solve, "Rayleigh-Ritz eigenproblem failed");
    }
    theta = ges.eigenvalues();
    x = y * ges.eigenvectors();
    if (block == n) break;
    const Eigen::VectorXd cur = theta.head(count);
    if (((cur - prev).array().abs() <= tol * cur.array().abs()).all()) break;
    prev = cur;
  }

  for (int k = 0; k < count; ++k) {
    FeFunction v = x.col(k);
    v /= std::sqrt(v.dot(m * v));
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    out.values.push_back(theta[k]);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace kirchhoff::fem
