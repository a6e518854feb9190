#pragma once

#include "rvparc/mesh.hpp"

namespace rvparc::shapes {

// Closed reference solids (outward orientation).
TriSurface octahedron(double circumradius = 1.0);
TriSurface regular_tetrahedron(double edge = 1.0);
TriSurface box(const Vec3& lo, const Vec3& hi);
TriSurface icosphere(double radius, int subdivisions);

// Open patches for operators that accept boundaries.
// Grid of nx*ny quads on [0,w]x[0,h] in the z = 0 plane, each quad split along its diagonal.
TriSurface planar_grid(int nx, int ny, double w, double h);
// Plane tiled by equilateral triangles of side `edge`, rows x cols vertices.
TriSurface equilateral_patch(int rows, int cols, double edge);
// Open cylinder about the z-axis, z in [0, height]; ring k holds vertices [k*segments, (k+1)*segments).
TriSurface tube(double radius, double height, int segments, int rings);

}  // namespace rvparc::shapes
