#include "hessrb/mesh.hpp"

#include <stdexcept>

namespace hessrb {

Eigen::Vector2d Mesh::centroid(Index cell) const {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (int a = 0; a < 3; ++a) c += vertices.row(cells(cell, a)).transpose();
  return c / 3.0;
}

Mesh build_uniform_mesh(int n_per_side) {
  if (n_per_side < 2) throw std::invalid_argument("build_uniform_mesh: need n_per_side >= 2");

  Mesh mesh;
  mesh.n_per_side = n_per_side;
  const int n = n_per_side;
  const double h = 1.0 / (n - 1);

  mesh.vertices.resize(static_cast<Index>(n) * n, 2);
  mesh.boundary_marker.assign(static_cast<size_t>(n) * n, -1);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Index v = static_cast<Index>(iy) * n + ix;
      mesh.vertices(v, 0) = ix * h;
      mesh.vertices(v, 1) = iy * h;
      if (iy == 0)
        mesh.boundary_marker[v] = static_cast<int>(BoundaryTag::bottom);
      else if (iy == n - 1)
        mesh.boundary_marker[v] = static_cast<int>(BoundaryTag::top);
      else if (ix == 0)
        mesh.boundary_marker[v] = static_cast<int>(BoundaryTag::left);
      else if (ix == n - 1)
        mesh.boundary_marker[v] = static_cast<int>(BoundaryTag::right);
    }
  }

  const Index n_cells = 2 * static_cast<Index>(n - 1) * (n - 1);
  mesh.cells.resize(n_cells, 3);
  Index c = 0;
  for (int iy = 0; iy < n - 1; ++iy) {
    for (int ix = 0; ix < n - 1; ++ix) {
      const int v00 = iy * n + ix;
      const int v10 = iy * n + ix + 1;
      const int v01 = (iy + 1) * n + ix;
      const int v11 = (iy + 1) * n + ix + 1;
      mesh.cells.row(c++) << v00, v10, v11;  // lower triangle
      mesh.cells.row(c++) << v00, v11, v01;  // upper triangle
    }
  }

  // cached areas and basis gradients
  mesh.cell_area.resize(n_cells);
  mesh.cell_grads.resize(n_cells, 6);
  for (Index e = 0; e < n_cells; ++e) {
    const Eigen::Vector2d p0 = mesh.vertices.row(mesh.cells(e, 0));
    const Eigen::Vector2d p1 = mesh.vertices.row(mesh.cells(e, 1));
    const Eigen::Vector2d p2 = mesh.vertices.row(mesh.cells(e, 2));
    const double twice_area = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    if (twice_area <= 0) throw std::logic_error("build_uniform_mesh: non-positive cell orientation");
    mesh.cell_area[e] = 0.5 * twice_area;
    const Eigen::Vector2d edges[3] = {p2 - p1, p0 - p2, p1 - p0};
    for (int a = 0; a < 3; ++a) {
      // grad phi_a = perp(opposite edge) / (2T), perp(x,y) = (-y, x)
      mesh.cell_grads(e, 2 * a) = -edges[a].y() / twice_area;
      mesh.cell_grads(e, 2 * a + 1) = edges[a].x() / twice_area;
    }
  }
  return mesh;
}

Vector cell_means(const Mesh& mesh, const Vector& nodal) {
  Vector out(mesh.n_cells());
  for (Index e = 0; e < mesh.n_cells(); ++e) {
    out[e] = (nodal[mesh.cells(e, 0)] + nodal[mesh.cells(e, 1)] + nodal[mesh.cells(e, 2)]) / 3.0;
  }
  return out;
}

Vector cell_energies(const Mesh& mesh, const Vector& u, const Vector& v) {
  Vector out(mesh.n_cells());
  for (Index e = 0; e < mesh.n_cells(); ++e) {
    double gux = 0, guy = 0, gvx = 0, gvy = 0;
    for (int a = 0; a < 3; ++a) {
      const double ua = u[mesh.cells(e, a)];
      const double va = v[mesh.cells(e, a)];
      gux += ua * mesh.cell_grads(e, 2 * a);
      guy += ua * mesh.cell_grads(e, 2 * a + 1);
      gvx += va * mesh.cell_grads(e, 2 * a);
      gvy += va * mesh.cell_grads(e, 2 * a + 1);
    }
    out[e] = mesh.cell_area[e] * (gux * gvx + guy * gvy);
  }
  return out;
}

}  // namespace hessrb
