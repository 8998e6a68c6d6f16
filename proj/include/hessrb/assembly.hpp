#pragma once

#include "hessrb/mesh.hpp"

#include <map>

namespace hessrb {

/// Stiffness matrix with one coefficient value per cell. All stiffness/mass
/// assemblies emit the full FE adjacency pattern so that matrices built on the
/// same mesh can be combined by value-array arithmetic.
SparseSymMatrix assemble_stiffness(const Mesh& mesh, const Vector& cell_coefficient);

SparseSymMatrix assemble_unit_stiffness(const Mesh& mesh);

/// Unit-coefficient stiffness restricted to the given cells.
SparseSymMatrix assemble_subdomain_stiffness(const Mesh& mesh, const std::vector<Index>& cells);

SparseSymMatrix assemble_mass(const Mesh& mesh);

struct Box {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double volume() const { return (x1 - x0) * (y1 - y0); }
};

/// (s_h)_n = (1/|box|) * integral over box of phi_n; cells are clipped exactly
/// against the box and the linear integrand integrated on the clipped polygon.
Vector assemble_qoi_vector(const Mesh& mesh, const Box& region);

struct DirichletLift {
  Vector values;                    // boundary data at constrained vertices, zero elsewhere
  std::vector<Index> constrained;   // ascending
};

DirichletLift dirichlet_lift(const Mesh& mesh, const std::map<BoundaryTag, double>& boundary_values);

}  // namespace hessrb
