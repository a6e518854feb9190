#include "rvparc/so3.hpp"
#include "rvparc/synthgen.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <queue>

namespace rvparc {

namespace {

int corner_of(const FaceMatrix& faces, int f, int v) {
  for (int k = 0; k < 3; ++k)
    if (faces(f, k) == v) return k;
  throw TopologyError("vertex not in face");
}

// In-plane angle of edge lo->hi in the coordinates of face f.
double edge_angle(const SurfaceDescriptors& d, int f, int lo, int hi) {
  const Vec2 e = d.a[f][corner_of(d.faces, f, hi)] - d.a[f][corner_of(d.faces, f, lo)];
  return std::atan2(e.y(), e.x());
}

Vec3 lift(const Vec2& p) { return Vec3(p.x(), p.y(), 0.0); }

void require_connected(const SurfaceDescriptors& d) {
  const int nf = static_cast<int>(d.faces.rows());
  std::vector<char> seen(nf, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int f = q.front();
    q.pop();
    for (int k = 0; k < 3; ++k) {
      const int t = d.topology->twin[3 * f + k];
      if (t >= 0 && !seen[t / 3]) {
        seen[t / 3] = 1;
        ++count;
        q.push(t / 3);
      }
    }
  }
  if (count != nf) throw TopologyError("reconstruction requires connected topology");
}

}  // namespace

Mat3 rotation_from_angles(double alpha_i, double psi, double alpha_j) {
  return so3::axis_rotation(2, alpha_j) * so3::axis_rotation(0, psi) * so3::axis_rotation(2, -alpha_i);
}

SurfaceDescriptors extract_descriptors(const TriSurface& s) {
  SurfaceDescriptors d;
  d.faces = s.faces();
  d.num_vertices = s.num_vertices();
  d.topology = s.shared_topology();
  d.a = triangle_coords(s).a;
  const auto& topo = *d.topology;
  const int ne = topo.num_edges();
  d.edge_length.resize(ne);
  d.dihedral = ScalarField::Zero(ne);
  for (int e = 0; e < ne; ++e) {
    const auto [lo, hi] = topo.edges[e];
    const auto [fi, fj] = topo.edge_faces[e];
    const int f = fi >= 0 ? fi : fj;
    d.edge_length(e) = (d.a[f][corner_of(d.faces, f, hi)] - d.a[f][corner_of(d.faces, f, lo)]).norm();
    if (fi < 0 || fj < 0) continue;
    const Vec3 dir = (s.vertex(hi) - s.vertex(lo)).normalized();
    const Vec3 ni = s.face_normals().row(fi).transpose(), nj = s.face_normals().row(fj).transpose();
    d.dihedral(e) = std::atan2(dir.dot(nj.cross(ni)), ni.dot(nj));
  }
  update_rotations(d);
  return d;
}

void update_rotations(SurfaceDescriptors& d) {
  const auto& topo = *d.topology;
  d.rotation.assign(topo.num_edges(), Mat3::Identity());
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto [lo, hi] = topo.edges[e];
    const auto [fi, fj] = topo.edge_faces[e];
    if (fi < 0 || fj < 0) continue;
    d.rotation[e] = rotation_from_angles(edge_angle(d, fi, lo, hi), d.dihedral(e), edge_angle(d, fj, lo, hi));
  }
}

std::vector<Mat3> embedded_frames(const TriSurface& s, const SurfaceDescriptors& d) {
  const TriangleBasis basis = triangle_coords(s);
  std::vector<Mat3> frames(s.num_faces());
  for (int f = 0; f < s.num_faces(); ++f) {
    const Vec2 a1 = d.a[f][1] - d.a[f][0];
    frames[f] = basis.frame[f] * so3::axis_rotation(2, -std::atan2(a1.y(), a1.x()));
  }
  return frames;
}

LinearReconstruction linear_reconstruct(const SurfaceDescriptors& d, const ReconstructionWeights& w) {
  require_connected(d);
  const int n = d.num_vertices;
  const int nf = static_cast<int>(d.faces.rows());
  const auto& topo = *d.topology;

  // One coordinate row at a time: unknowns x(:, r) and row r of every frame.
  // Vertex 0 and frame 0 are fixed (gauge), everything else is free.
  const int total = n + 3 * nf;
  auto is_fixed = [&](int c) { return c == 0 || (c >= n && c < n + 3); };
  std::vector<int> slot(total, -1);
  int nfree = 0;
  for (int c = 0; c < total; ++c)
    if (!is_fixed(c)) slot[c] = nfree++;

  std::vector<Eigen::Triplet<double>> tf, tc;
  int row = 0;
  auto put = [&](int r, int c, double v) {
    if (slot[c] >= 0) {
      tf.emplace_back(r, slot[c], v);
    } else {
      tc.emplace_back(r, c == 0 ? 0 : c - n + 1, v);  // fixed columns: x0, F0[0..2]
    }
  };
  const double s1 = std::sqrt(w.lambda1), s2 = std::sqrt(w.lambda2);
  for (int t = 0; t < nf; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int k1 = (k + 1) % 3;
      const Vec3 e = lift(d.a[t][k] - d.a[t][k1]);
      put(row, d.faces(t, k), s1);
      put(row, d.faces(t, k1), -s1);
      for (int m = 0; m < 3; ++m)
        if (e(m) != 0.0) put(row, n + 3 * t + m, -s1 * e(m));
      ++row;
    }
  }
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto [fi, fj] = topo.edge_faces[e];
    if (fi < 0 || fj < 0) continue;
    const Mat3& r = d.rotation[e];
    for (int k = 0; k < 3; ++k) {
      put(row, n + 3 * fi + k, s2);
      for (int m = 0; m < 3; ++m) put(row, n + 3 * fj + m, -s2 * r(m, k));
      ++row;
    }
  }
  SparseMatrix a(row, nfree), c(row, 4);
  a.setFromTriplets(tf.begin(), tf.end());
  c.setFromTriplets(tc.begin(), tc.end());
  const SparseMatrix normal = SparseMatrix(a.transpose()) * a;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericalError("linear reconstruction is rank deficient");

  LinearReconstruction out;
  PointMatrix x = PointMatrix::Zero(n, 3);
  std::vector<Mat3> frames(nf, Mat3::Zero());
  for (int r = 0; r < 3; ++r) {
    Eigen::Vector4d fixed = Eigen::Vector4d::Zero();
    fixed(1 + r) = 1.0;  // row r of frame 0 is e_r
    const Eigen::VectorXd rhs = -(a.transpose() * (c * fixed));
    const Eigen::VectorXd z = ldlt.solve(rhs);
    if (!z.allFinite()) throw NumericalError("linear reconstruction failed");
    out.residual = std::max(out.residual, (normal * z - rhs).norm() / std::max(rhs.norm(), 1e-300));
    for (int v = 0; v < n; ++v) x(v, r) = slot[v] >= 0 ? z(slot[v]) : 0.0;
    for (int t = 0; t < nf; ++t) {
      for (int m = 0; m < 3; ++m) {
        const int col = n + 3 * t + m;
        frames[t](r, m) = slot[col] >= 0 ? z(slot[col]) : (m == r ? 1.0 : 0.0);
      }
    }
  }
  if (out.residual > 1e-8) throw NumericalError("linear reconstruction residual too large");
  out.surface = TriSurface::with_topology(std::move(x), d.faces, d.topology);
  out.frames = std::move(frames);
  return out;
}

Eigen::VectorXd pack_state(const PointMatrix& x, const std::vector<Mat3>& frames) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd z(3 * n + 3 * static_cast<Eigen::Index>(frames.size()));
  for (Eigen::Index v = 0; v < n; ++v) z.segment<3>(3 * v) = x.row(v).transpose();
  for (size_t t = 0; t < frames.size(); ++t) z.segment<3>(3 * n + 3 * t) = so3::log(frames[t]);
  return z;
}

double log_energy(const SurfaceDescriptors& d, const Eigen::VectorXd& z, Eigen::VectorXd* grad,
                  const ReconstructionWeights& w) {
  const int n = d.num_vertices;
  const int nf = static_cast<int>(d.faces.rows());
  const auto& topo = *d.topology;
  std::vector<Mat3> f(nf);
  for (int t = 0; t < nf; ++t) f[t] = so3::exp(z.segment<3>(3 * n + 3 * t));
  if (grad) grad->setZero(z.size());

  double e1 = 0.0, e2 = 0.0;
  for (int t = 0; t < nf; ++t) {
    const Vec3 v = z.segment<3>(3 * n + 3 * t);
    for (int k = 0; k < 3; ++k) {
      const int i = d.faces(t, k), j = d.faces(t, (k + 1) % 3);
      const Vec3 u = lift(d.a[t][k] - d.a[t][(k + 1) % 3]);
      const Vec3 r = z.segment<3>(3 * i) - z.segment<3>(3 * j) - f[t] * u;
      e1 += r.squaredNorm();
      if (grad) {
        grad->segment<3>(3 * i) += 2.0 * w.lambda1 * r;
        grad->segment<3>(3 * j) -= 2.0 * w.lambda1 * r;
        grad->segment<3>(3 * n + 3 * t) -= 2.0 * w.lambda1 * so3::dexp(v, u).transpose() * r;
      }
    }
  }
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto [fi, fj] = topo.edge_faces[e];
    if (fi < 0 || fj < 0) continue;
    const Mat3& rij = d.rotation[e];
    const Mat3 diff = f[fi] - f[fj] * rij;
    e2 += diff.squaredNorm();
    if (grad) {
      const Vec3 vi = z.segment<3>(3 * n + 3 * fi), vj = z.segment<3>(3 * n + 3 * fj);
      Vec3 gi = Vec3::Zero(), gj = Vec3::Zero();
      for (int k = 0; k < 3; ++k) {
        gi += so3::dexp(vi, Vec3::Unit(k)).transpose() * diff.col(k);
        gj -= so3::dexp(vj, rij.col(k)).transpose() * diff.col(k);
      }
      grad->segment<3>(3 * n + 3 * fi) += 2.0 * w.lambda2 * gi;
      grad->segment<3>(3 * n + 3 * fj) += 2.0 * w.lambda2 * gj;
    }
  }
  return w.lambda1 * e1 + w.lambda2 * e2;
}

LogReconstruction log_reconstruct(const SurfaceDescriptors& d, const PointMatrix& init_vertices,
                                  const std::vector<Mat3>& init_frames, const LogOptions& opt) {
  require_connected(d);
  if (init_vertices.rows() != d.num_vertices || static_cast<Eigen::Index>(init_frames.size()) != d.faces.rows()) {
    throw TopologyError("initial state does not match the descriptors");
  }
  LbfgsOptions lo = opt.lbfgs;
  if (lo.absolute_gradient_tol <= 0.0) lo.absolute_gradient_tol = 1e-10 * std::max(1.0, bounding_box_diagonal(init_vertices));
  const Objective fn = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) { return log_energy(d, z, &g, opt.weights); };

  LogReconstruction out;
  out.optimizer = lbfgs_minimize(fn, pack_state(init_vertices, init_frames), lo);
  out.energy = out.optimizer.f;
  const int n = d.num_vertices;
  PointMatrix x(n, 3);
  for (int v = 0; v < n; ++v) x.row(v) = out.optimizer.x.segment<3>(3 * v).transpose();
  out.frames.resize(d.faces.rows());
  for (Eigen::Index t = 0; t < d.faces.rows(); ++t) out.frames[t] = so3::exp(out.optimizer.x.segment<3>(3 * n + 3 * t));
  out.surface = TriSurface::with_topology(std::move(x), d.faces, d.topology);
  return out;
}

LogReconstruction log_reconstruct(const SurfaceDescriptors& d, const TriSurface& init, const LogOptions& opt) {
  return log_reconstruct(d, init.vertices(), embedded_frames(init, d), opt);
}

}  // namespace rvparc
