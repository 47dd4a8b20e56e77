#pragma once

#include <string>

#include "voxel_mesh.hpp"

namespace atls::testing {

inline DomainConfig grid(int nx, int ny, int nz, double h = 1.0) {
  DomainConfig c;
  c.nx = nx;
  c.ny = ny;
  c.nz = nz;
  c.h = h;
  return c;
}

inline RegionSelector box_nodes(Vec3 lo, Vec3 hi) {
  return RegionSelector{BoxShape{lo, hi}, SelectTarget::Nodes};
}

// Nodes on the plane x = x0 (all y, z).
inline RegionSelector x_face(const Domain& d, double x0) {
  const double big = 1e9;
  return box_nodes({x0 + d.origin()[0], -big, -big}, {x0 + d.origin()[0], big, big});
}

inline RegionSelector z_face(const Domain& d, double z0) {
  const double big = 1e9;
  return box_nodes({-big, -big, z0 + d.origin()[2]}, {big, big, z0 + d.origin()[2]});
}

// Clamped at x = 0, total force on the face x = nx * h.
inline LoadCase cantilever_case(const Domain& d, Vec3 force, std::string id = "tip") {
  LoadCase lc;
  lc.id = std::move(id);
  lc.dirichlet.push_back({x_face(d, 0.0), {true, true, true}});
  lc.loads.push_back({x_face(d, d.nx() * d.h()), force, LoadDistribution::Total});
  return lc;
}

// 10 x 10 x 2 plate (h = 0.01) with a through hole of radius 2h, clamped at
// x = 0 and sheared by a total load on the mid-height node line of the far face.
// The loaded nodes are each shared by at least two elements, so deleting any
// single element never leaves a load hanging on an ersatz-only node.
inline DomainConfig plate_with_hole() {
  auto c = grid(10, 10, 2, 0.01);
  c.mask.push_back({CsgOp::Subtract, CylinderShape{Axis::Z, {0.05, 0.05}, 0.02, -1.0, 1.0}});
  return c;
}

inline LoadCase plate_shear_case(const Domain& d, double force = 1000.0) {
  LoadCase lc;
  lc.id = "shear";
  lc.dirichlet.push_back({x_face(d, 0.0), {true, true, true}});
  const double x = d.nx() * d.h(), y = 0.5 * d.ny() * d.h();
  lc.loads.push_back({box_nodes({x, y, -1.0}, {x, y, 1.0}), {0.0, -force, 0.0}, LoadDistribution::Total});
  return lc;
}

// Column along x clamped at x = 0, axial compression on the far face.
inline LoadCase axial_compression_case(const Domain& d, double force = 1000.0) {
  return cantilever_case(d, {-force, 0.0, 0.0}, "axial");
}

}  // namespace atls::testing
