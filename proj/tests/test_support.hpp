#pragma once

#include "dcfem/mesh.hpp"
#include "dcfem/partition.hpp"
#include "dcfem/types.hpp"

#include <vector>

namespace testsup {

using namespace dcfem;

/// The 3x4x5-cell parallel plate: 4 um wide (y), 1 um high (x), 100 um long
/// (z), PEC plates at x = 0 and x = 1 um, everything else natural.
inline Mesh parallel_plate_mesh(int nz = 5, Real hz_um = 20.0L) {
  GridSpec g = GridSpec::uniform(3, 4, nz, 1e-6L / 3.0L, 1e-6L, hz_um * 1e-6L);
  BoundarySpec bc;
  bc.set(Face::XMin, FaceCondition::PEC);
  bc.set(Face::XMax, FaceCondition::PEC);
  return build_mesh(g, bc);
}

/// Structured-edge counting oracle for plate-family meshes (PEC only on the
/// two x planes): free in-plane edges per z plane and free z edges per slab.
inline int plate_surface_count(int nx, int ny) { return nx * (ny + 1) + (nx - 1) * ny; }
inline int plate_volume_count(int nx, int ny) { return (nx - 1) * (ny + 1); }

}  // namespace testsup
