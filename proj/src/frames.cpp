#include "rvparc/frames.hpp"

#include "rvparc/geodesics.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <set>

namespace rvparc {

SparseMatrix cotan_stiffness(const TriSurface& s, int* clamped) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(12 * s.num_faces());
  int clipped = 0;
  for (int f = 0; f < s.num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      // Angle at corner k is opposite the edge (k+1, k+2).
      const int i = s.faces()(f, (k + 1) % 3), j = s.faces()(f, (k + 2) % 3);
      const Vec3 a = s.vertex(i) - s.corner(f, k);
      const Vec3 b = s.vertex(j) - s.corner(f, k);
      double cot = a.dot(b) / a.cross(b).norm();
      if (std::abs(cot) > kMaxCotangent) {
        cot = std::copysign(kMaxCotangent, cot);
        ++clipped;
      }
      const double w = 0.5 * cot;
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
      trip.emplace_back(i, i, w);
      trip.emplace_back(j, j, w);
    }
  }
  SparseMatrix k(s.num_vertices(), s.num_vertices());
  k.setFromTriplets(trip.begin(), trip.end());
  if (clamped) *clamped = clipped;
  return k;
}

namespace {

// Solves K u = 0 on free rows with u fixed on constrained rows.
ScalarField solve_dirichlet(const SparseMatrix& k, const std::map<int, double>& fixed, double* residual) {
  const int n = static_cast<int>(k.rows());
  std::vector<int> slot(n, -1);
  int nfree = 0;
  for (int v = 0; v < n; ++v)
    if (!fixed.count(v)) slot[v] = nfree++;

  ScalarField u = ScalarField::Zero(n);
  for (const auto& [v, val] : fixed) u(v) = val;
  if (nfree == 0) {
    if (residual) *residual = 0.0;
    return u;
  }

  std::vector<Eigen::Triplet<double>> trip;
  ScalarField rhs = ScalarField::Zero(nfree);
  for (int col = 0; col < k.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (slot[r] < 0) continue;
      if (slot[c] >= 0) {
        trip.emplace_back(slot[r], slot[c], it.value());
      } else {
        rhs(slot[r]) -= it.value() * u(c);
      }
    }
  }
  SparseMatrix a(nfree, nfree);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("Laplace system is singular");
  const ScalarField x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) throw NumericalError("Laplace solve failed");
  const double denom = std::max(rhs.norm(), 1e-300);
  const double res = (a * x - rhs).norm() / denom;
  if (residual) *residual = rhs.norm() > 0.0 ? res : 0.0;
  for (int v = 0; v < n; ++v)
    if (slot[v] >= 0) u(v) = x(slot[v]);
  return u;
}

}  // namespace

HeatSolution cotan_laplace_solve(const TriSurface& s, const std::map<int, double>& dirichlet) {
  if (dirichlet.empty()) throw NumericalError("Laplace problem needs at least one constrained vertex");
  for (const auto& [v, val] : dirichlet) {
    if (v < 0 || v >= s.num_vertices()) throw TopologyError("invalid constrained vertex " + std::to_string(v));
  }
  HeatSolution h;
  const SparseMatrix k = cotan_stiffness(s, &h.clamped_weights);
  h.u = solve_dirichlet(k, dirichlet, &h.residual);
  h.boundary = std::to_string(dirichlet.size()) + " Dirichlet vertices";
  return h;
}

PointMatrix face_gradients(const TriSurface& s, const ScalarField& u) {
  PointMatrix g(s.num_faces(), 3);
  for (int f = 0; f < s.num_faces(); ++f) {
    const Vec3 n = s.face_normals().row(f).transpose();
    const double two_a = 2.0 * s.face_areas()(f);
    Vec3 grad = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      const Vec3 e = s.corner(f, (k + 2) % 3) - s.corner(f, (k + 1) % 3);  // edge opposite corner k
      grad += u(s.faces()(f, k)) * n.cross(e) / two_a;
    }
    g.row(f) = grad.transpose();
  }
  return g;
}

namespace {

constexpr double kMinGradient = 1e-12;

}  // namespace

FrameField anatomical_frames(const TriSurface& s, const LandmarkSet& lm, LongitudinalSource source) {
  lm.validate(s.num_vertices());
  FrameField ff;
  if (source == LongitudinalSource::heat) {
    std::map<int, double> bc;
    for (int v : lm.apex) bc[v] = 0.0;
    for (int v : lm.valves()) bc[v] = 1.0;
    ff.u = cotan_laplace_solve(s, bc).u;
  } else {
    ff.u = exact_geodesic(s, lm.apex).values;
  }

  const int nf = s.num_faces();
  const PointMatrix grad = face_gradients(s, ff.u);
  ff.n = s.face_normals();
  ff.l.resize(nf, 3);
  ff.c.resize(nf, 3);
  ff.landmark_face.assign(nf, 0);
  ff.degenerate.assign(nf, 0);

  std::vector<int> owner(s.num_vertices(), -1);
  for (int m = 0; m < 3; ++m)
    for (int v : lm[static_cast<Landmark>(m)]) owner[v] = m;

  int degenerate_count = 0;
  Vec3 sum = Vec3::Zero();
  for (int f = 0; f < nf; ++f) {
    const int o = owner[s.faces()(f, 0)];
    ff.landmark_face[f] = o >= 0 && owner[s.faces()(f, 1)] == o && owner[s.faces()(f, 2)] == o;
    const Vec3 g = grad.row(f).transpose();
    const double norm = g.norm();
    if (ff.landmark_face[f]) continue;
    if (norm < kMinGradient) {
      ff.degenerate[f] = 1;
      ++degenerate_count;
      continue;
    }
    ff.l.row(f) = (g / norm).transpose();
    sum += s.face_areas()(f) * ff.l.row(f).transpose();
  }
  if (degenerate_count > 0.01 * nf) {
    throw NumericalError("longitudinal direction is degenerate on " + std::to_string(degenerate_count) + " of " +
                         std::to_string(nf) + " faces");
  }
  if (sum.norm() < 1e-12) throw NumericalError("mean longitudinal direction vanishes");
  ff.l_glob = sum.normalized();

  for (int f = 0; f < nf; ++f) {
    const Vec3 n = ff.n.row(f).transpose();
    if (ff.landmark_face[f] || ff.degenerate[f]) {
      Vec3 t = ff.l_glob - ff.l_glob.dot(n) * n;
      if (t.norm() < 1e-9) t = (s.corner(f, 1) - s.corner(f, 0));  // l_glob along the normal
      t -= t.dot(n) * n;
      ff.l.row(f) = t.normalized().transpose();
    }
    const Vec3 l = ff.l.row(f).transpose();
    ff.c.row(f) = l.cross(n).transpose();
  }
  return ff;
}

GlobalDirections global_directions(const FrameField& ff, const Eigen::VectorXd& face_areas) {
  Vec3 sum = Vec3::Zero();
  for (Eigen::Index f = 0; f < ff.l.rows(); ++f) {
    const bool skip = (!ff.landmark_face.empty() && ff.landmark_face[f]) || (!ff.degenerate.empty() && ff.degenerate[f]);
    if (!skip) sum += face_areas(f) * ff.l.row(f).transpose();
  }
  if (sum.norm() < 1e-12) throw NumericalError("mean longitudinal direction vanishes");
  GlobalDirections g;
  g.l_glob = sum.normalized();
  g.circumferential_projector = Mat3::Identity() - g.l_glob * g.l_glob.transpose();
  return g;
}

}  // namespace rvparc
