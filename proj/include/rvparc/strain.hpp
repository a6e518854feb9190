#pragma once

#include "rvparc/frames.hpp"

namespace rvparc {

// Per-triangle 2D coordinates and embedded frames.
//   a[t][0] = (0,0), a[t][1] = (|p1 - p0|, 0), a[t][2] by the law of cosines;
//   frame[t] columns: first-edge direction, n x first edge, unit normal.
struct TriangleBasis {
  std::vector<std::array<Vec2, 3>> a;
  std::vector<Mat3> frame;
};

TriangleBasis triangle_coords(const TriSurface& s);

// In-plane coordinates from three edge lengths |01|, |02|, |12|.
std::array<Vec2, 3> coords_from_lengths(double l01, double l02, double l12);

struct StrainField {
  std::vector<Mat2> F;        // in the (l, c) basis of the reference triangle
  std::vector<Mat2> epsilon;  // sym(F) - Id
  ScalarField e_ll, e_cc;
};

// Per-triangle deformation gradient between corresponded surfaces. Deformed
// edges are first rotated by the minimal rotation taking the deformed normal
// onto the reference normal.
StrainField deformation_gradient(const TriSurface& ref, const TriSurface& def, const FrameField& frames);

// Same, after rigidly aligning `def` onto `ref` (removes global rotation).
StrainField aligned_strain(const TriSurface& ref, const TriSurface& def, const FrameField& frames);

// Minimal rotation taking unit vector a onto unit vector b.
Mat3 minimal_rotation(const Vec3& a, const Vec3& b);

}  // namespace rvparc
