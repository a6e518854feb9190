#include "rvparc/strain.hpp"

#include "rvparc/alignment.hpp"

#include <cmath>

namespace rvparc {

std::array<Vec2, 3> coords_from_lengths(double l01, double l02, double l12) {
  if (!(l01 > 0.0 && l02 > 0.0 && l12 > 0.0) || l01 + l02 <= l12 || l01 + l12 <= l02 || l02 + l12 <= l01) {
    throw GeometryError("edge lengths violate the triangle inequality");
  }
  const double x = (l01 * l01 + l02 * l02 - l12 * l12) / (2.0 * l01);
  return {Vec2::Zero(), Vec2(l01, 0.0), Vec2(x, std::sqrt(std::max(0.0, l02 * l02 - x * x)))};
}

TriangleBasis triangle_coords(const TriSurface& s) {
  TriangleBasis b;
  b.a.resize(s.num_faces());
  b.frame.resize(s.num_faces());
  for (int f = 0; f < s.num_faces(); ++f) {
    const Vec3 p0 = s.corner(f, 0), p1 = s.corner(f, 1), p2 = s.corner(f, 2);
    b.a[f] = coords_from_lengths((p1 - p0).norm(), (p2 - p0).norm(), (p2 - p1).norm());
    const Vec3 x = (p1 - p0).normalized();
    const Vec3 z = s.face_normals().row(f).transpose();
    b.frame[f].col(0) = x;
    b.frame[f].col(1) = z.cross(x);
    b.frame[f].col(2) = z;
  }
  return b;
}

Mat3 minimal_rotation(const Vec3& a, const Vec3& b) {
  return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

StrainField deformation_gradient(const TriSurface& ref, const TriSurface& def, const FrameField& frames) {
  if (!same_topology(ref, def)) throw TopologyError("topology mismatch between reference and deformed surfaces");
  const int nf = ref.num_faces();
  StrainField out;
  out.F.resize(nf);
  out.epsilon.resize(nf);
  out.e_ll.resize(nf);
  out.e_cc.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const Vec3 l = frames.l.row(f).transpose(), c = frames.c.row(f).transpose();
    Eigen::Matrix<double, 2, 3> basis;
    basis.row(0) = l.transpose();
    basis.row(1) = c.transpose();
    Eigen::Matrix<double, 3, 2> e_ref, e_def;
    e_ref << ref.corner(f, 1) - ref.corner(f, 0), ref.corner(f, 2) - ref.corner(f, 0);
    e_def << def.corner(f, 1) - def.corner(f, 0), def.corner(f, 2) - def.corner(f, 0);
    const Mat3 q = minimal_rotation(def.face_normals().row(f).transpose(), ref.face_normals().row(f).transpose());
    const Mat2 m_ref = basis * e_ref;
    const Mat2 m_def = basis * (q * e_def);
    if (std::abs(m_ref.determinant()) < 1e-14 * e_ref.squaredNorm()) {
      throw GeometryError("singular reference edge matrix at face " + std::to_string(f));
    }
    out.F[f] = m_def * m_ref.inverse();
    out.epsilon[f] = 0.5 * (out.F[f] + out.F[f].transpose()) - Mat2::Identity();
    out.e_ll(f) = out.epsilon[f](0, 0);
    out.e_cc(f) = out.epsilon[f](1, 1);
  }
  return out;
}

StrainField aligned_strain(const TriSurface& ref, const TriSurface& def, const FrameField& frames) {
  const RigidTransform t = kabsch(def.vertices(), ref.vertices());
  return deformation_gradient(ref, def.with_vertices(t.apply(def.vertices())), frames);
}

}  // namespace rvparc
