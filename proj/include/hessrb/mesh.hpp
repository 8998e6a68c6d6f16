#pragma once

#include "hessrb/types.hpp"

namespace hessrb {

enum class BoundaryTag : int { bottom = 0, top = 1, left = 2, right = 3 };

/// Uniform triangulation of [0,1]^2: n_per_side vertices per side, each grid
/// square split into two counter-clockwise right triangles.
struct Mesh {
  int n_per_side = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> cells;
  /// -1 for interior vertices, otherwise a BoundaryTag value. Corners carry a
  /// single tag with priority bottom > top > left > right.
  std::vector<int> boundary_marker;

  // cached geometry
  Vector cell_area;
  /// n_cells x 6: (gx,gy) of the three local P1 basis gradients, constant per cell
  Matrix cell_grads;

  Index n_vertices() const { return vertices.rows(); }
  Index n_cells() const { return cells.rows(); }
  double spacing() const { return 1.0 / (n_per_side - 1); }
  Eigen::Vector2d centroid(Index cell) const;
};

Mesh build_uniform_mesh(int n_per_side);

/// Mean of the three vertex values, one entry per cell (P1 interpolant at centroids).
Vector cell_means(const Mesh& mesh, const Vector& nodal);

/// Per-cell T_c * (grad u . grad v) for P1 interpolants u, v.
Vector cell_energies(const Mesh& mesh, const Vector& u, const Vector& v);

}  // namespace hessrb
