#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvparc/shapes.hpp"
#include "rvparc/volumetric.hpp"

#include <random>

using namespace rvparc;

namespace {

LandmarkSet sphere_landmarks(const TriSurface& s, double r) {
  LandmarkSet lm;
  for (int v = 0; v < s.num_vertices(); ++v) {
    const Vec3 p = s.vertex(v) / r;
    if (p.z() < -0.95) lm.apex.push_back(v);
    else if ((p - Vec3(0.6, 0, 0.8)).norm() < 0.3) lm.tricuspid.push_back(v);
    else if ((p - Vec3(-0.6, 0, 0.8)).norm() < 0.3) lm.pulmonary.push_back(v);
  }
  return lm;
}

}  // namespace

TEST_CASE("unit cube cavity conserves volume") {
  const TriSurface s = shapes::box(Vec3::Zero(), Vec3::Ones());
  const TetCavity cav = tetrahedralize(s);
  CHECK(cavity_volume_mm3(cav) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cav.num_surface_vertices == 8);
}

TEST_CASE("regular tetrahedron with a coarse target is one tet") {
  const TriSurface s = shapes::regular_tetrahedron(2.0);
  TetOptions opt;
  opt.target_edge = 10.0;
  const TetCavity cav = tetrahedralize(s, opt);
  CHECK(cav.tets.rows() == 1);
  CHECK(cav.vertices.rows() == 4);
}

TEST_CASE("sphere cavity: positive tets, exact boundary, spacing") {
  const TriSurface s = shapes::icosphere(10.0, 3);
  const TetCavity cav = tetrahedralize(s);
  for (Eigen::Index t = 0; t < cav.tets.rows(); ++t) {
    const double v = tet_signed_volume(cav.vertices.row(cav.tets(t, 0)).transpose(), cav.vertices.row(cav.tets(t, 1)).transpose(),
                                       cav.vertices.row(cav.tets(t, 2)).transpose(), cav.vertices.row(cav.tets(t, 3)).transpose());
    REQUIRE(v > 1e-12);
  }
  CHECK(cavity_volume_mm3(cav) == doctest::Approx(signed_volume_mm3(s.vertices(), s.faces())).epsilon(1e-9));
  CHECK(cav.vertices.rows() > s.num_vertices());
  CHECK((cav.vertices.topRows(s.num_vertices()) - s.vertices()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non star-shaped surface is rejected") {
  // Two boxes joined by a thin bar seen from a centroid outside the bar.
  TriSurface s = shapes::icosphere(10.0, 2);
  PointMatrix v = s.vertices();
  for (int i = 0; i < v.rows(); ++i) {
    const double r = v.row(i).norm();
    const Vec3 d = v.row(i).transpose() / r;
    if (d.z() > 0.3) v.row(i) = (Vec3(0, 0, 12.0) + 10.0 * d * 0.6 - Vec3(0, 0, 24.0) * (d.z() - 0.3)).transpose();
  }
  CHECK_THROWS_AS(tetrahedralize(s.with_vertices(v)), Error);
}

TEST_CASE("harmonic extension reproduces constants and linear fields") {
  const TriSurface s = shapes::box(Vec3::Zero(), Vec3::Ones());
  TetOptions opt;
  opt.target_edge = 0.2;
  const TetCavity cav = tetrahedralize(s, opt);
  CHECK(cav.vertices.rows() > 8);
  const ScalarField c = laplace_extend(cav, ScalarField::Constant(8, 3.5));
  CHECK((c.array() - 3.5).abs().maxCoeff() < 1e-12);
  ScalarField z(8);
  for (int i = 0; i < 8; ++i) z(i) = s.vertex(i).z();
  double res = 0.0;
  const ScalarField u = laplace_extend(cav, {z}, &res).front();
  CHECK((u - cav.vertices.col(2)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(res < 1e-10);
}

TEST_CASE("ball with x^2 - y^2 boundary") {
  const TriSurface s = shapes::icosphere(1.0, 3);
  const TetCavity cav = tetrahedralize(s);
  ScalarField b(s.num_vertices());
  for (int i = 0; i < b.size(); ++i) b(i) = s.vertex(i).x() * s.vertex(i).x() - s.vertex(i).y() * s.vertex(i).y();
  const ScalarField u = laplace_extend(cav, b);
  const int center = static_cast<int>(cav.vertices.rows()) - 1;
  CHECK(cav.vertices.row(center).norm() < 1e-9);
  CHECK(std::abs(u(center)) <= 1e-2 * (b.maxCoeff() - b.minCoeff()));
  CHECK(u.minCoeff() >= b.minCoeff() - 1e-12);
  CHECK(u.maxCoeff() <= b.maxCoeff() + 1e-12);
}

TEST_CASE("apex-dominated fields give a fully apical cavity") {
  const TriSurface s = shapes::icosphere(5.0, 2);
  const TetCavity cav = tetrahedralize(s);
  const Eigen::Index n = cav.vertices.rows();
  const Parcellation p = parcellate(cav, {ScalarField::Constant(n, 2.0), ScalarField::Constant(n, 3.0), ScalarField::Zero(n)});
  CHECK(p[Region::apical] == doctest::Approx(signed_volume(s)).epsilon(1e-12));
  CHECK(p[Region::inlet] == 0.0);
}

TEST_CASE("single tet split matches Monte Carlo") {
  TetCavity cav;
  cav.vertices.resize(4, 3);
  cav.vertices << 0, 0, 0, 10, 0, 0, 0, 10, 0, 0, 0, 10;
  cav.tets.resize(1, 4);
  cav.tets << 0, 1, 2, 3;
  cav.num_surface_vertices = 4;
  RegionFields f{Eigen::Vector4d(0.0, 6.0, 1.0, 2.0), Eigen::Vector4d(3.0, 1.0, 0.5, 4.0), Eigen::Vector4d(5.0, 5.0, 5.0, 0.5)};
  const Parcellation p = parcellate(cav, f, true);

  std::mt19937_64 rng(42);
  std::exponential_distribution<double> ex(1.0);
  const int n = 1000000;
  std::array<int, 3> hits{};
  for (int i = 0; i < n; ++i) {
    Eigen::Vector4d b(ex(rng), ex(rng), ex(rng), ex(rng));  // uniform on the simplex
    b /= b.sum();
    ++hits[static_cast<int>(region_of(b.dot(f.tricuspid), b.dot(f.pulmonary), b.dot(f.apex)))];
  }
  const double total = 1000.0 / 6.0 / 1000.0;
  CHECK(p.total_ml == doctest::Approx(total).epsilon(1e-12));
  for (int r = 0; r < 3; ++r) {
    const double frac = static_cast<double>(hits[r]) / n;
    const double sigma = std::sqrt(frac * (1 - frac) / n);
    CHECK(std::abs(p.volume_ml[r] / total - frac) <= 3.0 * sigma + 1e-12);
  }
  CHECK(p.sub_vertices.rows() == 4 * static_cast<Eigen::Index>(p.sub_labels.size()));
}

TEST_CASE("sphere parcellation: completeness, locality, scale equivariance") {
  const double r = 20.0;
  const TriSurface s = shapes::icosphere(r, 3);
  const LandmarkSet lm = sphere_landmarks(s, r);
  const auto res = parcellate_surface(s, lm);
  const Parcellation& p = res.parcellation;
  const double total = signed_volume(s);
  CHECK(std::abs(p.total_ml - total) / total < 1e-6);
  for (Landmark l : {Landmark::apex, Landmark::tricuspid, Landmark::pulmonary}) {
    const Region want = l == Landmark::apex ? Region::apical : l == Landmark::tricuspid ? Region::inlet : Region::outflow;
    for (int v : lm[l]) {
      CHECK(region_of(res.surface_fields.tricuspid(v), res.surface_fields.pulmonary(v), res.surface_fields.apex(v)) == want);
    }
  }
  // Mirror symmetric landmarks: inlet and outflow agree.
  CHECK(std::abs(p[Region::inlet] - p[Region::outflow]) / p[Region::inlet] < 0.005);
  CHECK(res.midpoint.face >= 0);
  CHECK(res.midpoint.max_gap < 1e-9);

  const double k = 1.7;
  const auto scaled = parcellate_surface(s.with_vertices(k * s.vertices()), lm);
  for (int i = 0; i < 3; ++i) {
    CHECK(scaled.parcellation.volume_ml[i] == doctest::Approx(k * k * k * p.volume_ml[i]).epsilon(1e-3));
  }
}

TEST_CASE("ED to ES transport and ejection fraction") {
  const double r = 20.0;
  const TriSurface ed = shapes::icosphere(r, 3);
  const LandmarkSet lm = sphere_landmarks(ed, r);
  const auto edp = parcellate_surface(ed, lm);

  const auto same = transport_labels(CorrespondencePair(ed, ed), edp.surface_fields);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(same.parcellation.volume_ml[i] - edp.parcellation.volume_ml[i]) < 1e-9);
  const RegionalReport zero = regional_metrics(edp.parcellation, same.parcellation);
  for (double ef : zero.ef) CHECK(std::abs(ef) < 1e-9);

  const Vec3 c = vertex_centroid(ed);
  const PointMatrix es_v = ((ed.vertices().rowwise() - c.transpose()) * 0.9).rowwise() + c.transpose();
  const TriSurface es = ed.with_vertices(es_v);
  const auto esp = transport_labels(CorrespondencePair(ed, es), edp.surface_fields);
  const RegionalReport rep = regional_metrics(edp.parcellation, esp.parcellation);
  for (int i = 0; i < 3; ++i) {
    CHECK(esp.parcellation.volume_ml[i] == doctest::Approx(0.729 * edp.parcellation.volume_ml[i]).epsilon(0.005));
    CHECK(std::abs(rep.ef[i] - 0.271) < 0.005);
  }
}

TEST_CASE("harmonic comparator gives a valid partition") {
  const double r = 20.0;
  const TriSurface s = shapes::icosphere(r, 3);
  const LandmarkSet lm = sphere_landmarks(s, r);
  ParcellateOptions opt;
  opt.kind = FieldKind::harmonic;
  const auto res = parcellate_surface(s, lm, opt);
  CHECK(std::abs(res.parcellation.total_ml - signed_volume(s)) / signed_volume(s) < 1e-6);
  for (int v : lm.apex) CHECK(res.surface_fields.apex(v) == 0.0);
  for (int v : lm.tricuspid)
    CHECK(region_of(res.surface_fields.tricuspid(v), res.surface_fields.pulmonary(v), res.surface_fields.apex(v)) == Region::inlet);
}
