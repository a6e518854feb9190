#include "rvparc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

namespace rvparc {

FaceMatrix convex_hull(const PointMatrix& pts) {
  const int n = static_cast<int>(pts.rows());
  if (n < 4) throw GeometryError("convex hull needs at least four points");
  auto p = [&](int i) -> Vec3 { return pts.row(i).transpose(); };
  const double scale = bounding_box_diagonal(pts);
  const double eps = 1e-12 * scale * scale * scale;

  // Initial tetrahedron: 0, farthest from 0, farthest from that line, farthest from that plane.
  int i1 = 1;
  for (int i = 2; i < n; ++i)
    if ((p(i) - p(0)).squaredNorm() > (p(i1) - p(0)).squaredNorm()) i1 = i;
  int i2 = -1;
  double best = 0.0;
  for (int i = 1; i < n; ++i) {
    const double d = (p(i) - p(0)).cross(p(i1) - p(0)).squaredNorm();
    if (d > best) best = d, i2 = i;
  }
  int i3 = -1;
  best = 0.0;
  for (int i = 1; i < n; ++i) {
    const double d = std::abs((p(i1) - p(0)).cross(p(i2) - p(0)).dot(p(i) - p(0)));
    if (d > best) best = d, i3 = i;
  }
  if (i2 < 0 || i3 < 0 || best <= eps) throw GeometryError("convex hull input is degenerate");

  struct Face {
    std::array<int, 3> v;
    bool alive = true;
  };
  std::vector<Face> faces;
  auto visible = [&](const Face& f, const Vec3& q) {
    return (p(f.v[1]) - p(f.v[0])).cross(p(f.v[2]) - p(f.v[0])).dot(q - p(f.v[0])) > eps;
  };
  const Vec3 inner = (p(0) + p(i1) + p(i2) + p(i3)) / 4.0;
  for (auto tri : {std::array<int, 3>{0, i1, i2}, {0, i1, i3}, {0, i2, i3}, {i1, i2, i3}}) {
    Face f{tri};
    if (visible(f, inner)) std::swap(f.v[1], f.v[2]);
    faces.push_back(f);
  }

  std::map<std::pair<int, int>, int> edge_face;  // directed edge -> face
  auto link = [&](int fi) {
    for (int k = 0; k < 3; ++k) edge_face[{faces[fi].v[k], faces[fi].v[(k + 1) % 3]}] = fi;
  };
  for (int fi = 0; fi < 4; ++fi) link(fi);

  for (int q = 0; q < n; ++q) {
    if (q == 0 || q == i1 || q == i2 || q == i3) continue;
    std::vector<int> vis;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi)
      if (faces[fi].alive && visible(faces[fi], p(q))) vis.push_back(fi);
    if (vis.empty()) continue;  // interior point
    std::vector<std::pair<int, int>> horizon;
    for (int fi : vis) faces[fi].alive = false;
    for (int fi : vis) {
      for (int k = 0; k < 3; ++k) {
        const int a = faces[fi].v[k], b = faces[fi].v[(k + 1) % 3];
        if (faces[edge_face.at({b, a})].alive) horizon.emplace_back(a, b);
      }
    }
    for (const auto& [a, b] : horizon) {
      faces.push_back(Face{{a, b, q}});
      link(static_cast<int>(faces.size()) - 1);
    }
  }

  std::vector<std::array<int, 3>> kept;
  for (const auto& f : faces)
    if (f.alive) kept.push_back(f.v);
  FaceMatrix out(static_cast<Eigen::Index>(kept.size()), 3);
  for (size_t i = 0; i < kept.size(); ++i) out.row(i) << kept[i][0], kept[i][1], kept[i][2];
  return out;
}

namespace {

PointMatrix fibonacci_sphere(int n) {
  PointMatrix p(n, 3);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    p.row(i) << r * std::cos(golden * i), r * std::sin(golden * i), z;
  }
  return p;
}

// Vertices whose direction lies inside an elliptical cap about `centre`.
std::vector<int> elliptical_patch(const PointMatrix& dirs, const Vec3& centre, const Vec3& up, const Vec2& radii) {
  const Vec3 c = centre.normalized();
  Vec3 e1 = c.cross(up);
  if (e1.norm() < 1e-9) e1 = c.unitOrthogonal();
  e1.normalize();
  const Vec3 e2 = c.cross(e1);
  std::vector<int> ids;
  for (int i = 0; i < dirs.rows(); ++i) {
    const Vec3 u = dirs.row(i).transpose();
    if (u.dot(c) <= 0.0) continue;
    const double x = std::atan2(u.dot(e1), u.dot(c)) / radii.x();
    const double y = std::atan2(u.dot(e2), u.dot(c)) / radii.y();
    if (x * x + y * y <= 1.0) ids.push_back(i);
  }
  return ids;
}

// Moves the patch onto the least-squares plane of its rim (patch vertices with an
// outside neighbour), along the plane normal.
void flatten_patch(PointMatrix& x, const FaceMatrix& faces, const std::vector<int>& patch) {
  std::vector<char> in(x.rows(), 0), rim(x.rows(), 0);
  for (int v : patch) in[v] = 1;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces(f, k), b = faces(f, (k + 1) % 3);
      if (in[a] && !in[b]) rim[a] = 1;
      if (in[b] && !in[a]) rim[b] = 1;
    }
  }
  std::vector<int> ring;
  for (int v : patch)
    if (rim[v]) ring.push_back(v);
  if (ring.size() < 3) return;
  Vec3 c = Vec3::Zero();
  for (int v : ring) c += x.row(v).transpose();
  c /= static_cast<double>(ring.size());
  Mat3 cov = Mat3::Zero();
  for (int v : ring) {
    const Vec3 d = x.row(v).transpose() - c;
    cov += d * d.transpose();
  }
  const Vec3 n = Eigen::SelfAdjointEigenSolver<Mat3>(cov).eigenvectors().col(0);
  for (int v : patch) {
    const Vec3 p = x.row(v).transpose();
    x.row(v) = (p - (p - c).dot(n) * n).transpose();
  }
}

}  // namespace

Template generate_template(const TemplateParams& prm) {
  if (prm.num_vertices < 50) throw Error("template needs at least 50 vertices");
  if (!(prm.volume_ml > 0.0 && prm.elongation > 0.0 && prm.flattening > 0.0)) {
    throw Error("template size parameters must be positive");
  }
  if (!(prm.apical_taper >= 0.0 && prm.apical_taper < 1.0)) throw Error("apical taper must lie in [0, 1)");

  // Shape map from the unit sphere: taper towards the apex, then a linear stretch.
  const Vec3 base = -prm.apex_dir.normalized();
  Vec3 lateral = (prm.tricuspid_dir.normalized() - prm.pulmonary_dir.normalized());
  lateral -= lateral.dot(base) * base;
  lateral.normalize();
  const Vec3 septal = base.cross(lateral);
  const Mat3 shape = Mat3::Identity() + (prm.elongation - 1.0) * base * base.transpose() +
                     (prm.flattening - 1.0) * septal * septal.transpose();
  auto phi = [&](const Vec3& u) -> Vec3 {
    const double h = u.dot(base);
    const double t = std::max(0.0, -h);
    return shape * (h * base + (1.0 - prm.apical_taper * t * t) * (u - h * base));
  };

  PointMatrix dirs = fibonacci_sphere(prm.num_vertices);
  FaceMatrix faces = convex_hull(dirs);

  // Umbrella relaxation measured on the mapped surface, moving the sphere
  // parameters through the pseudo-inverse of the map's tangent Jacobian.
  // The hull is rebuilt between rounds so connectivity follows the points.
  for (int round = 0; round < prm.relax_rounds; ++round) {
    for (int it = 0; it < 10; ++it) {
      std::vector<Vec3> sum(dirs.rows(), Vec3::Zero());
      std::vector<int> count(dirs.rows(), 0);
      PointMatrix x(dirs.rows(), 3);
      for (Eigen::Index i = 0; i < dirs.rows(); ++i) x.row(i) = phi(dirs.row(i).transpose()).transpose();
      for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int k = 0; k < 3; ++k) {
          const int a = faces(f, k), b = faces(f, (k + 1) % 3);
          sum[a] += x.row(b).transpose();
          ++count[a];
        }
      }
      for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
        const Vec3 u = dirs.row(i).transpose();
        const Vec3 t1 = u.unitOrthogonal(), t2 = u.cross(t1);
        const double h = 1e-6;
        Eigen::Matrix<double, 3, 2> j;
        j.col(0) = (phi((u + h * t1).normalized()) - phi((u - h * t1).normalized())) / (2 * h);
        j.col(1) = (phi((u + h * t2).normalized()) - phi((u - h * t2).normalized())) / (2 * h);
        const Vec3 dx = sum[i] / count[i] - x.row(i).transpose();
        const Vec2 du = (j.transpose() * j).ldlt().solve(j.transpose() * dx);
        dirs.row(i) = (u + 0.5 * (du.x() * t1 + du.y() * t2)).normalized().transpose();
      }
    }
    faces = convex_hull(dirs);
  }

  PointMatrix x(dirs.rows(), 3);
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) x.row(i) = phi(dirs.row(i).transpose()).transpose();

  LandmarkSet lm;
  lm.tricuspid = elliptical_patch(dirs, prm.tricuspid_dir, base, prm.tricuspid_radii);
  lm.pulmonary = elliptical_patch(dirs, prm.pulmonary_dir, base, prm.pulmonary_radii);
  if (prm.flat_valves) {
    flatten_patch(x, faces, lm.tricuspid);
    flatten_patch(x, faces, lm.pulmonary);
  }

  const double v = signed_volume_mm3(x, faces) / kMm3PerMl;
  if (!(v > 0.0)) throw GeometryError("template construction produced an inverted surface");
  x *= std::cbrt(prm.volume_ml / v);

  Template t;
  t.surface = TriSurface::build(std::move(x), faces);
  int apex = 0;
  for (int i = 1; i < dirs.rows(); ++i)
    if (dirs.row(i).dot(prm.apex_dir.normalized()) > dirs.row(apex).dot(prm.apex_dir.normalized())) apex = i;
  lm.apex = {apex};
  t.landmarks = std::move(lm);
  t.landmarks.validate(t.surface.num_vertices());
  return t;
}

}  // namespace rvparc
