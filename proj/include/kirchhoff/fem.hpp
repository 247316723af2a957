#pragma once

// P1 finite elements on uniform interval and rectangle meshes with
// homogeneous Dirichlet data. Unknowns live on interior nodes only.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace kirchhoff::fem {

using Point = std::array<double, 2>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Coefficients of u = sum_i u_i phi_i over interior nodes; the boundary
/// trace is zero by construction.
using FeFunction = Eigen::VectorXd;

/// Uniform structured layout, used for point location.
struct GridInfo {
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> lengths{1.0, 1.0};
};

class Mesh {
 public:
  /// Elements are segments (first two entries used) in 1D and
  /// counter-clockwise triangles in 2D. The interior index map is derived
  /// from the boundary flags.
  Mesh(int dimension, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
       std::vector<bool> boundary, std::optional<GridInfo> grid = std::nullopt);

  int dimension() const { return dimension_; }
  int vertices_per_element() const { return dimension_ + 1; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  bool is_boundary(int node) const { return boundary_[node]; }
  /// -1 for boundary nodes.
  int interior_index(int node) const { return interior_index_[node]; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  int num_interior() const { return static_cast<int>(interior_nodes_.size()); }
  const std::optional<GridInfo>& grid() const { return grid_; }

  /// Signed length (1D) or signed area (2D) of element e.
  double signed_measure(int e) const;

  /// Checks every invariant: positive measures, boundary flags on the
  /// bounding box, bijective interior map. Throws invalid_mesh.
  void validate() const;

  /// Short identifier such as "interval:64:1" or "rect:16x16:1x1".
  std::string id() const;

 private:
  int dimension_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<bool> boundary_;
  std::vector<int> interior_index_;
  std::vector<int> interior_nodes_;
  std::optional<GridInfo> grid_;
};

Mesh build_interval_mesh(int n_cells, double length);
Mesh build_rect_mesh(int nx, int ny, double lx, double ly);

/// One quadrature point of one element, with the P1 shape values of the
/// element's vertices and their interior dof indices (-1 on the boundary).
struct QuadPoint {
  Point x{};
  double weight = 0.0;
  int element = 0;
  std::array<int, 3> dofs{-1, -1, -1};
  std::array<double, 3> shape{};
};

class AssembledOperators {
 public:
  AssembledOperators(Mesh mesh, SparseMatrix stiffness, SparseMatrix mass,
                     std::vector<QuadPoint> quadrature, double measure);

  const Mesh& mesh() const { return *mesh_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& mass() const { return mass_; }
  std::span<const QuadPoint> quadrature() const { return quadrature_; }
  int size() const { return static_cast<int>(stiffness_.rows()); }
  /// |Omega| of the polygonal domain.
  double domain_measure() const { return measure_; }

  /// Solves A w = rhs with the cached Cholesky factor.
  FeFunction solve(const Eigen::VectorXd& rhs) const;

  /// u_h at a quadrature point.
  double value_at(const FeFunction& u, const QuadPoint& q) const {
    double v = 0.0;
    for (int k = 0; k < mesh_->vertices_per_element(); ++k) {
      if (q.dofs[k] >= 0) v += q.shape[k] * u[q.dofs[k]];
    }
    return v;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  SparseMatrix stiffness_;
  SparseMatrix mass_;
  std::vector<QuadPoint> quadrature_;
  double measure_;
  std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> factor_;
};

/// 2-point Gauss per segment, 3-point (degree 2) rule per triangle.
AssembledOperators assemble(const Mesh& mesh);

/// (u^T A u)^{1/2}.
double h1_norm(const AssembledOperators& ops, const FeFunction& u);
/// u^T A v.
double h1_inner(const AssembledOperators& ops, const FeFunction& u, const FeFunction& v);

/// H^1_0 Riesz representative of the functional v -> rhs . v.
FeFunction riesz_solve(const AssembledOperators& ops, const Eigen::VectorXd& rhs);

/// Nodal interpolant of a continuous function on the interior nodes.
FeFunction interpolate(const Mesh& mesh, const std::function<double(const Point&)>& fn);

/// Evaluates the P1 function u (zero trace) at an arbitrary point of the
/// closed domain. Points outside give 0.
double evaluate(const Mesh& mesh, const FeFunction& u, const Point& x);

/// Interpolates a function from one mesh onto the interior nodes of another
/// covering the same domain. Exact for nested refinements.
FeFunction transfer(const Mesh& from, const FeFunction& u, const Mesh& to);

void check_shape(const AssembledOperators& ops, const Eigen::VectorXd& v, const char* what);

struct NamedProfile {
  std::string name;
  std::function<double(const Point&)> fn;
};

/// Shapes vanishing on the bounding box: sine, tent and trapezoidal
/// plateaus of increasing steepness, all with sup-norm 1.
std::vector<NamedProfile> profile_library(const Mesh& mesh);

struct EigenPairs {
  std::vector<double> values;
  std::vector<FeFunction> vectors;  // M-orthonormal
};

/// Smallest `count` eigenpairs of A w = lambda M w (discrete Dirichlet
/// Laplacian) by block inverse subspace iteration with Rayleigh-Ritz.
EigenPairs dirichlet_eigenpairs(const AssembledOperators& ops, int count, double tol = 1e-12,
                                int max_iter = 500);

}  // namespace kirchhoff::fem
