#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvparc/alignment.hpp"
#include "rvparc/shapes.hpp"
#include "rvparc/so3.hpp"
#include "rvparc/synthgen.hpp"

#include <random>

using namespace rvparc;

namespace {

TriSurface jitter(const TriSurface& s, double amp, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  PointMatrix x = s.vertices();
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int k = 0; k < 3; ++k) x(i, k) += u(rng);
  return s.with_vertices(x);
}

Vec3 random_vec(std::mt19937& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  return scale * Vec3(n(rng), n(rng), n(rng));
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

// Two triangles sharing edge 0-1.
TriSurface hinge() {
  PointMatrix x(4, 3);
  x << 0, 0, 0, 2, 0, 0, 1, 1.5, 0, 1, -1.5, 0;
  FaceMatrix f(2, 3);
  f << 0, 1, 2, 1, 0, 3;
  return TriSurface::build(x, f, Closure::optional);
}

}  // namespace

TEST_CASE("rotation exponential") {
  CHECK((so3::exp(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
  const Mat3 r = so3::exp(Vec3(0.0, 0.0, kPi / 2));
  CHECK((r * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-12);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec3 v = random_vec(rng, i < 10 ? 1.0 : 1e-5);
    const Mat3 q = so3::exp(v);
    CHECK((q.transpose() * q - Mat3::Identity()).norm() < 1e-13);
    CHECK((so3::log(q) - v).norm() < 1e-10);
  }
}

TEST_CASE("dexp matches central differences") {
  std::mt19937 rng(11);
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const Vec3 v = random_vec(rng, probe % 4 == 0 ? 1e-5 : 1.0);
    const Vec3 u = random_vec(rng, 1.0);
    const Mat3 d = so3::dexp(v, u);
    const double h = 1e-6;
    Mat3 fd;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e(k) = h;
      fd.col(k) = (so3::exp(Vec3(v + e)) * u - so3::exp(Vec3(v - e)) * u) / (2 * h);
    }
    worst = std::max(worst, (d - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("energy gradient matches central differences") {
  const TriSurface s = jitter(shapes::icosphere(10.0, 1), 0.5, 5);
  SurfaceDescriptors d = extract_descriptors(s);
  // Make the descriptors incompatible so the energy is far from zero.
  for (auto& tri : d.a) tri[2] *= 1.05;
  update_rotations(d);
  std::mt19937 rng(17);
  const Eigen::VectorXd base = pack_state(s.vertices(), embedded_frames(s, d));
  const ReconstructionWeights w{1.3, 0.7};
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    Eigen::VectorXd z = base;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += 0.05 * random_vec(rng, 1.0).x();
    Eigen::VectorXd g;
    log_energy(d, z, &g, w);
    Eigen::VectorXd dir(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) dir(i) = random_vec(rng, 1.0).x();
    const double h = 1e-6;
    const double fd = (log_energy(d, z + h * dir, nullptr, w) - log_energy(d, z - h * dir, nullptr, w)) / (2 * h);
    worst = std::max(worst, rel_err(g.dot(dir), fd));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("descriptors on simple shapes") {
  SUBCASE("coplanar pair") {
    const TriSurface s = hinge();
    const SurfaceDescriptors d = extract_descriptors(s);
    int interior = 0;
    for (int e = 0; e < s.topology().num_edges(); ++e) {
      if (s.topology().edge_faces[e][0] < 0 || s.topology().edge_faces[e][1] < 0) continue;
      ++interior;
      CHECK(std::abs(d.dihedral(e)) < 1e-12);
      CHECK(std::abs(d.rotation[e](2, 2) - 1.0) < 1e-12);  // rotation about the normal only
    }
    CHECK(interior == 1);
  }
  SUBCASE("cube") {
    const TriSurface s = shapes::box(Vec3::Zero(), Vec3(2.0, 3.0, 4.0));
    const SurfaceDescriptors d = extract_descriptors(s);
    for (int e = 0; e < s.topology().num_edges(); ++e) {
      const auto [i, j] = s.topology().edge_faces[e];
      const bool crease = std::abs(s.face_normals().row(i).dot(s.face_normals().row(j))) < 0.5;
      CHECK(std::abs(std::abs(d.dihedral(e)) - (crease ? kPi / 2 : 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("rotations from angles equal frame products") {
  const TriSurface s = jitter(shapes::icosphere(10.0, 2), 0.4, 9);
  const SurfaceDescriptors d = extract_descriptors(s);
  const std::vector<Mat3> f = embedded_frames(s, d);
  double worst = 0.0;
  for (int e = 0; e < s.topology().num_edges(); ++e) {
    const auto [i, j] = s.topology().edge_faces[e];
    worst = std::max(worst, (d.rotation[e] - f[j].transpose() * f[i]).norm());
    CHECK((f[j] * d.rotation[e] - f[i]).norm() < 1e-9);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("linear reconstruction round trip") {
  const TriSurface s = jitter(shapes::icosphere(20.0, 2), 0.8, 21);
  const LinearReconstruction r = linear_reconstruct(extract_descriptors(s));
  CHECK(r.residual < 1e-8);
  CHECK(aligned_rmsd(r.surface.vertices(), s.vertices()) < 1e-6 * bounding_box_diagonal(s.vertices()));
  CHECK(r.surface.vertices().row(0).norm() < 1e-12);
  CHECK((r.frames[0] - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("log reconstruction round trip") {
  const TriSurface s = jitter(shapes::icosphere(20.0, 2), 0.8, 22);
  const SurfaceDescriptors d = extract_descriptors(s);

  SUBCASE("initialised at the truth") {
    const LogReconstruction r = log_reconstruct(d, s);
    CHECK(r.optimizer.iterations == 0);
    CHECK(r.energy < 1e-12);
  }
  SUBCASE("initialised from a perturbed surface") {
    const TriSurface start = jitter(s, 1.5, 23);
    const LogReconstruction r = log_reconstruct(d, start);
    CHECK(aligned_rmsd(r.surface.vertices(), s.vertices()) < 1e-4 * bounding_box_diagonal(s.vertices()));
    for (const Mat3& f : r.frames) CHECK((f.transpose() * f - Mat3::Identity()).norm() < 1e-10);
  }
}

TEST_CASE("hinge dihedral is reproduced") {
  const TriSurface s = hinge();
  SurfaceDescriptors d = extract_descriptors(s);
  int e = 0;
  while (s.topology().edge_faces[e][0] < 0 || s.topology().edge_faces[e][1] < 0) ++e;
  d.dihedral(e) = kPi / 3;
  update_rotations(d);
  const LinearReconstruction lin = linear_reconstruct(d);
  CHECK(std::abs(extract_descriptors(lin.surface).dihedral(e) - kPi / 3) < 1e-6);
  const LogReconstruction lg = log_reconstruct(d, s);
  CHECK(std::abs(extract_descriptors(lg.surface).dihedral(e) - kPi / 3) < 1e-6);
}

TEST_CASE("local strain imposition") {
  const TriSurface s = shapes::icosphere(20.0, 2);
  const SurfaceDescriptors ref = extract_descriptors(s);
  const std::vector<Mat3> frames = embedded_frames(s, ref);
  StrainProfile p;
  p.weight = ScalarField::Zero(s.num_faces());
  p.weight(0) = 1.0;
  p.direction = PointMatrix::Zero(s.num_faces(), 3);
  const Vec3 c = frames[0].col(1);  // any in-plane unit direction
  p.direction.row(0) = c.transpose();
  p.valve_face.assign(s.num_faces(), 0);

  SUBCASE("zero magnitude") {
    const SurfaceDescriptors d = impose_local_strain(ref, frames, p, 0.0);
    for (int f = 0; f < s.num_faces(); ++f)
      for (int k = 0; k < 3; ++k) CHECK(d.a[f][k] == ref.a[f][k]);
    CHECK((d.edge_length - ref.edge_length).norm() == 0.0);
  }
  SUBCASE("unit weight stretches edge vectors exactly") {
    const SurfaceDescriptors d = impose_local_strain(ref, frames, p, 0.1);
    const Vec2 v = (frames[0].transpose() * c).head<2>();
    const Mat2 m = Mat2::Identity() + 0.1 * v * v.transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(((d.a[0][i] - d.a[0][j]) - m * (ref.a[0][i] - ref.a[0][j])).norm() < 1e-12);
    CHECK((d.dihedral - ref.dihedral).norm() == 0.0);
  }
}

TEST_CASE("strain profile weights") {
  const Template t = generate_template();
  const TriSurface& s = t.surface;
  LandmarkDistances dist;
  const LocalStrainSpec spec;
  dist.apex.values = ScalarField::Constant(s.num_vertices(), spec.omega);
  dist.tricuspid.values = ScalarField::Constant(s.num_vertices(), 1e3);
  dist.pulmonary.values = dist.tricuspid.values;
  for (int v : t.landmarks.valves()) dist.tricuspid.values(v) = 0.0;
  const FrameField ff = anatomical_frames(s, t.landmarks);
  const StrainProfile p = strain_profile(s, t.landmarks, dist, ff, spec);
  for (int f = 0; f < s.num_faces(); ++f) {
    if (p.valve_face[f]) {
      CHECK(p.weight(f) == 0.0);
      continue;
    }
    bool near_valve = false;
    for (int k = 0; k < 3; ++k) near_valve = near_valve || dist.tricuspid.values(s.faces()(f, k)) == 0.0;
    if (!near_valve) CHECK(std::abs(p.weight(f) - std::exp(-1.0)) < 1e-9);
  }
}

TEST_CASE("calibration with a zero target") {
  const Template t = generate_template();
  const StrainProfile p = strain_profile(t.surface, t.landmarks, distance_to_set(t.surface, t.landmarks),
                                         anatomical_frames(t.surface, t.landmarks), LocalStrainSpec{});
  CalibrationOptions opt;
  opt.target_ml = 0.0;
  const CalibrationResult r = calibrate_lambda(t.surface, p, opt);
  CHECK(r.lambda == 0.0);
  CHECK(r.converged);
}

TEST_CASE("global remodelling parameters") {
  CHECK(global_parameter_for_fraction(RemodelMode::global_long, 0.1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(global_parameter_for_fraction(RemodelMode::global_circ, 0.1) == doctest::Approx(0.0023823).epsilon(1e-4));
  const double ts = global_parameter_for_fraction(RemodelMode::global_scale, 0.1);
  CHECK(1.0 + ts == doctest::Approx(1.03228).epsilon(1e-5));
  const Vec3 l = Vec3(0.2, -0.4, 1.0).normalized();
  for (auto m : {RemodelMode::global_long, RemodelMode::global_circ, RemodelMode::global_scale})
    CHECK(global_matrix(m, l, global_parameter_for_fraction(m, 0.1)).determinant() == doctest::Approx(1.1).epsilon(1e-12));
  CHECK_THROWS(global_matrix(RemodelMode::global_long, l, -1.0));

  const Template t = generate_template();
  const TriSurface g = global_remodel(t.surface, l, RemodelMode::global_circ, global_parameter_for_fraction(RemodelMode::global_circ, 0.1));
  CHECK(signed_volume(g) / signed_volume(t.surface) == doctest::Approx(1.1).epsilon(1e-10));
}

TEST_CASE("mode names") {
  for (auto m : {RemodelMode::apex_circ, RemodelMode::rvot_long, RemodelMode::inlet_circ, RemodelMode::global_scale})
    CHECK(remodel_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(remodel_mode_from_string("septal-twist"), Error);
  CHECK(target_region(RemodelMode::rvot_circ) == Region::outflow);
}

TEST_CASE("bundled template") {
  const Template t = generate_template();
  CHECK(t.surface.num_vertices() == 938);
  CHECK(t.surface.num_faces() == 1872);
  CHECK(t.surface.closed());
  CHECK(signed_volume(t.surface) >= 137.0);
  CHECK(signed_volume(t.surface) <= 151.0);
  CHECK_NOTHROW(t.landmarks.validate(t.surface.num_vertices()));
  TemplateParams bad;
  bad.volume_ml = -1.0;
  CHECK_THROWS(generate_template(bad));
}

TEST_CASE("convex hull") {
  PointMatrix p(9, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0.5, 0.5, 0.5;
  const FaceMatrix f = convex_hull(p);
  CHECK(f.rows() == 12);
  CHECK(signed_volume_mm3(p, f) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((f.array() != 8).all());
}

TEST_CASE("lbfgs on the Rosenbrock function") {
  const Objective rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g << -2.0 * a - 400.0 * x(0) * b, 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  const LbfgsResult r = lbfgs_minimize(rosen, Eigen::Vector2d(-1.2, 1.0));
  CHECK(r.converged);
  CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-6);
}
