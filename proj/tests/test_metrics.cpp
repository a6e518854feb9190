#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvparc/metrics.hpp"
#include "rvparc/shapes.hpp"
#include "rvparc/so3.hpp"

using namespace rvparc;

namespace {

TriSurface moved(const TriSurface& s, const Mat3& r, const Vec3& t) {
  return s.with_vertices((s.vertices() * r.transpose()).rowwise() + t.transpose());
}

}  // namespace

TEST_CASE("winding number") {
  const TriSurface s = shapes::icosphere(5.0, 2);
  CHECK(winding_number(s, Vec3(0.3, -0.2, 0.1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(winding_number(s, Vec3(9.0, 0.0, 0.0))) < 1e-12);
}

TEST_CASE("dice oracles") {
  const TriSurface a = shapes::box(Vec3::Zero(), Vec3(20.0, 20.0, 20.0));
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, moved(a, Mat3::Identity(), Vec3(30.0, 0.0, 0.0))) == 0.0);

  const TriSurface big = shapes::box(Vec3::Zero(), Vec3(40.0, 20.0, 20.0));
  CHECK(std::abs(dice(a, big, 1.0) - 2.0 / 3.0) < 0.01);
  CHECK(dice(a, big) == dice(big, a));

  // Nested boxes off the voxel lattice: the error shrinks with the voxel size.
  const TriSurface c = shapes::box(Vec3(0.3, 0.3, 0.3), Vec3(13.45, 20.3, 20.3));
  const TriSurface d = shapes::box(Vec3(0.3, 0.3, 0.3), Vec3(26.6, 20.3, 20.3));
  const double exact = 2.0 * 13.15 / (13.15 + 26.3);
  std::vector<double> err;
  for (double h : {2.0, 1.0, 0.5}) err.push_back(std::abs(dice(c, d, h) - exact));
  CHECK(err[2] < err[0]);
  CHECK(err[2] < 0.01);
}

TEST_CASE("sphere dice against the analytic lens") {
  const TriSurface a = shapes::icosphere(10.0, 4);
  const TriSurface b = moved(a, Mat3::Identity(), Vec3(5.0, 0.0, 0.0));
  const double va = signed_volume(a) * kMm3PerMl;
  // Cap volume of the discrete sphere is close to the analytic lens.
  const double r = 10.0, d = 5.0;
  const double lens = kPi * (4 * r + d) * (2 * r - d) * (2 * r - d) / 12.0;
  CHECK(std::abs(dice(a, b, 0.5) - lens / va) < 0.02);
}

TEST_CASE("closest point on triangle") {
  const Vec3 a(0, 0, 0), b(2, 0, 0), c(0, 2, 0);
  CHECK((closest_point_on_triangle(Vec3(0.5, 0.5, 3.0), a, b, c) - Vec3(0.5, 0.5, 0)).norm() < 1e-15);
  CHECK((closest_point_on_triangle(Vec3(-1, -1, 0), a, b, c) - a).norm() < 1e-15);
  CHECK((closest_point_on_triangle(Vec3(1, -1, 1), a, b, c) - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((closest_point_on_triangle(Vec3(2, 2, 0), a, b, c) - Vec3(1, 1, 0)).norm() < 1e-15);
}

TEST_CASE("node distances") {
  const TriSurface a = shapes::icosphere(10.0, 2);
  NodeDistances d = node_distances(a, a);
  CHECK(d.node_to_node.maxCoeff() == 0.0);
  CHECK(d.node_to_surface.maxCoeff() < 1e-12);

  d = node_distances(a, moved(a, Mat3::Identity(), Vec3(3.0, 0.0, 0.0)));
  CHECK((d.node_to_node.array() - 3.0).abs().maxCoeff() < 1e-12);
  CHECK(d.mean_node_to_node == doctest::Approx(3.0));
  CHECK((d.node_to_surface.array() <= d.node_to_node.array() + 1e-12).all());

  PointMatrix x = a.vertices();
  x.row(7) += 2.0 * x.row(7).normalized();
  d = node_distances(a, a.with_vertices(x));
  CHECK(d.node_to_node(7) == doctest::Approx(2.0));
  CHECK(d.node_to_surface(7) <= 2.0 + 1e-12);
  CHECK(d.node_to_surface(7) > 0.0);

  CHECK_THROWS_AS(node_distances(a, shapes::icosphere(10.0, 1)), TopologyError);
  CHECK_NOTHROW(node_distances(a, shapes::icosphere(10.0, 1), false));
}

TEST_CASE("procrustes mean") {
  const TriSurface s = shapes::icosphere(10.0, 2);
  SUBCASE("rigid copies") {
    std::vector<TriSurface> pop{s, moved(s, so3::exp(Vec3(0.2, 0.5, -0.3)), Vec3(1, 2, 3)),
                                moved(s, so3::exp(Vec3(-1.0, 0.1, 0.4)), Vec3(-4, 0, 2))};
    const ProcrustesResult r = procrustes_mean(pop);
    CHECK(aligned_rmsd(r.mean.vertices(), s.vertices()) < 1e-7);
  }
  SUBCASE("two samples give the midpoint") {
    PointMatrix x = s.vertices();
    x.col(0) *= 1.2;
    const ProcrustesResult r = procrustes_mean({s, s.with_vertices(x)});
    const PointMatrix mid = 0.5 * (r.aligned[0] + r.aligned[1]);
    CHECK((r.mean.vertices() - mid).norm() < 1e-12);
  }
  SUBCASE("self alignment is the identity") {
    const RigidTransform t = kabsch(s.vertices(), s.vertices());
    CHECK((t.rotation - Mat3::Identity()).norm() < 1e-10);
  }
  SUBCASE("invariant under rigid pre-transformation") {
    PointMatrix x = s.vertices();
    x.col(2) *= 0.8;
    const TriSurface b = s.with_vertices(x);
    const ProcrustesResult r1 = procrustes_mean({s, b});
    const ProcrustesResult r2 = procrustes_mean({moved(s, so3::exp(Vec3(0.3, 0.0, 0.2)), Vec3(1, 1, 1)),
                                                 moved(b, so3::exp(Vec3(0.0, -0.6, 0.1)), Vec3(0, 5, 0))});
    CHECK(aligned_rmsd(r1.mean.vertices(), r2.mean.vertices()) < 1e-7);
  }
  CHECK_THROWS(procrustes_mean({s}));
}

TEST_CASE("accuracy index worked examples") {
  CHECK(accuracy_index({1.0, 2.0, 7.0}, {1.0, 2.0, 7.0}) == 1.0);
  // Region order: inlet, outflow, apical.
  CHECK(accuracy_index({2.0, 0.0, 8.0}, {0.0, 0.0, 10.0}) == 0.8);
  CHECK(accuracy_index({10.0, 0.0, 0.0}, {0.0, 0.0, 10.0}) == 0.0);
  CHECK_THROWS(accuracy_index({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}));
}

TEST_CASE("landmark alignment and comparison") {
  const Template t = generate_template();
  const TriSurface b = moved(t.surface, so3::exp(Vec3(0.1, -0.2, 0.3)), Vec3(4.0, -3.0, 1.0));
  const ComparisonReport r = compare_surfaces(t.surface, b, &t.landmarks);
  CHECK(r.dice > 0.999);
  CHECK(r.distances.mean_node_to_node < 1e-9);
  CHECK(std::abs(r.volume_difference_ml) < 1e-9);
}
