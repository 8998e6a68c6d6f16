#include "hessrb/assembly.hpp"

#include <array>
#include <cmath>
#include <iostream>

namespace hessrb {

namespace {

// Emits the full 3x3 local block for every cell so all assemblies on one mesh
// share a sparsity pattern (zero-coefficient cells contribute stored zeros).
std::vector<Triplet> stiffness_triplets(const Mesh& mesh, const Vector& coeff) {
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.n_cells()) * 6);
  for (Index e = 0; e < mesh.n_cells(); ++e) {
    const double w = coeff[e] * mesh.cell_area[e];
    if (!std::isfinite(w)) throw std::invalid_argument("assemble_stiffness: non-finite coefficient");
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double k = w * (mesh.cell_grads(e, 2 * a) * mesh.cell_grads(e, 2 * b) +
                              mesh.cell_grads(e, 2 * a + 1) * mesh.cell_grads(e, 2 * b + 1));
        triplets.emplace_back(mesh.cells(e, a), mesh.cells(e, b), k);
      }
    }
  }
  return triplets;
}

}  // namespace

SparseSymMatrix assemble_stiffness(const Mesh& mesh, const Vector& cell_coefficient) {
  if (cell_coefficient.size() != mesh.n_cells())
    throw std::invalid_argument("assemble_stiffness: one coefficient per cell required");
  return make_sparse_sym(mesh.n_vertices(), stiffness_triplets(mesh, cell_coefficient));
}

SparseSymMatrix assemble_unit_stiffness(const Mesh& mesh) {
  return assemble_stiffness(mesh, Vector::Ones(mesh.n_cells()));
}

SparseSymMatrix assemble_subdomain_stiffness(const Mesh& mesh, const std::vector<Index>& cells) {
  if (cells.empty()) std::cerr << "assemble_subdomain_stiffness: empty subdomain, returning zero matrix\n";
  Vector coeff = Vector::Zero(mesh.n_cells());
  for (Index e : cells) {
    if (e < 0 || e >= mesh.n_cells())
      throw std::invalid_argument("assemble_subdomain_stiffness: cell index out of range");
    coeff[e] = 1.0;
  }
  return assemble_stiffness(mesh, coeff);
}

SparseSymMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.n_cells()) * 6);
  for (Index e = 0; e < mesh.n_cells(); ++e) {
    const double t = mesh.cell_area[e] / 12.0;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) triplets.emplace_back(mesh.cells(e, a), mesh.cells(e, b), a == b ? 2 * t : t);
  }
  return make_sparse_sym(mesh.n_vertices(), triplets);
}

namespace {

using Polygon = std::vector<Eigen::Vector2d>;

// Sutherland-Hodgman clip of a convex CCW polygon against halfplane s(x) >= 0.
template <class SignedDist>
Polygon clip_halfplane(const Polygon& poly, SignedDist s) {
  Polygon out;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % n];
    const double sa = s(a), sb = s(b);
    if (sa >= 0) out.push_back(a);
    if ((sa >= 0) != (sb >= 0)) {
      const double t = sa / (sa - sb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

Polygon clip_to_box(Polygon poly, const Box& box) {
  poly = clip_halfplane(poly, [&](const Eigen::Vector2d& p) { return p.x() - box.x0; });
  poly = clip_halfplane(poly, [&](const Eigen::Vector2d& p) { return box.x1 - p.x(); });
  poly = clip_halfplane(poly, [&](const Eigen::Vector2d& p) { return p.y() - box.y0; });
  poly = clip_halfplane(poly, [&](const Eigen::Vector2d& p) { return box.y1 - p.y(); });
  return poly;
}

}  // namespace

Vector assemble_qoi_vector(const Mesh& mesh, const Box& region) {
  if (region.volume() <= 0) throw std::invalid_argument("assemble_qoi_vector: zero-volume region");
  if (region.x0 < -1e-12 || region.y0 < -1e-12 || region.x1 > 1 + 1e-12 || region.y1 > 1 + 1e-12)
    throw std::invalid_argument("assemble_qoi_vector: region must lie inside [0,1]^2");

  Vector s = Vector::Zero(mesh.n_vertices());
  for (Index e = 0; e < mesh.n_cells(); ++e) {
    const Eigen::Vector2d p0 = mesh.vertices.row(mesh.cells(e, 0));
    const Eigen::Vector2d p1 = mesh.vertices.row(mesh.cells(e, 1));
    const Eigen::Vector2d p2 = mesh.vertices.row(mesh.cells(e, 2));
    const Polygon clipped = clip_to_box({p0, p1, p2}, region);
    if (clipped.size() < 3) continue;

    // Barycentric value of local basis a at point x (linear, exact).
    auto bary = [&](int a, const Eigen::Vector2d& x) {
      const Eigen::Vector2d origin = mesh.vertices.row(mesh.cells(e, a));
      return 1.0 + mesh.cell_grads(e, 2 * a) * (x.x() - origin.x()) +
             mesh.cell_grads(e, 2 * a + 1) * (x.y() - origin.y());
    };

    // Fan triangulation; integral of a linear function over a triangle is
    // area times the mean of its vertex values.
    for (size_t i = 1; i + 1 < clipped.size(); ++i) {
      const Eigen::Vector2d& q0 = clipped[0];
      const Eigen::Vector2d& q1 = clipped[i];
      const Eigen::Vector2d& q2 = clipped[i + 1];
      const double area = 0.5 * ((q1.x() - q0.x()) * (q2.y() - q0.y()) - (q2.x() - q0.x()) * (q1.y() - q0.y()));
      for (int a = 0; a < 3; ++a) {
        s[mesh.cells(e, a)] += area * (bary(a, q0) + bary(a, q1) + bary(a, q2)) / 3.0;
      }
    }
  }
  return s / region.volume();
}

DirichletLift dirichlet_lift(const Mesh& mesh, const std::map<BoundaryTag, double>& boundary_values) {
  DirichletLift lift;
  lift.values = Vector::Zero(mesh.n_vertices());
  for (Index v = 0; v < mesh.n_vertices(); ++v) {
    const int marker = mesh.boundary_marker[v];
    if (marker < 0) continue;
    const auto it = boundary_values.find(static_cast<BoundaryTag>(marker));
    if (it == boundary_values.end()) continue;
    lift.values[v] = it->second;
    lift.constrained.push_back(v);
  }
  return lift;
}

}  // namespace hessrb
