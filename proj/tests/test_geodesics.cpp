#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvparc/geodesics.hpp"
#include "rvparc/shapes.hpp"

#include <random>

using namespace rvparc;

namespace {

int farthest_along(const TriSurface& s, const Vec3& dir) {
  int best = 0;
  for (int i = 1; i < s.num_vertices(); ++i)
    if (s.vertex(i).dot(dir) > s.vertex(best).dot(dir)) best = i;
  return best;
}

}  // namespace

TEST_CASE("source distance is zero and single edge equals its length") {
  const TriSurface s = shapes::octahedron(1.0);
  const int src[] = {0};
  const auto d = exact_geodesic(s, src);
  CHECK(d.values(0) == 0.0);
  CHECK(dijkstra_oracle(s, src).values(2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(d.values(2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("octahedron opposite vertex") {
  const TriSurface s = shapes::octahedron(1.0);
  const int src[] = {0};
  const auto d = exact_geodesic(s, src);
  // Opposite vertex of the octahedron with edge a = sqrt(2): two equilateral triangles unfold into a rhombus, diagonal a*sqrt(3).
  CHECK(d.values(1) == doctest::Approx(std::sqrt(2.0) * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("icosphere antipodal distance within 2 percent of pi r") {
  const TriSurface s = shapes::icosphere(10.0, 4);
  const int a = farthest_along(s, Vec3(0, 0, 1)), b = farthest_along(s, Vec3(0, 0, -1));
  const int src[] = {a};
  GeodesicStats stats;
  const auto d = exact_geodesic(s, src, &stats);
  MESSAGE("windows created " << stats.windows_created << ", antipodal " << d.values(b));
  CHECK(std::abs(d.values(b) - kPi * 10.0) / (kPi * 10.0) < 0.02);
}

TEST_CASE("planar grid distance to a short edge is exact") {
  const TriSurface s = shapes::planar_grid(12, 30, 3.0, 10.0);
  std::vector<int> src;
  for (int i = 0; i <= 12; ++i) src.push_back(i);  // row y = 0
  const auto d = exact_geodesic(s, src);
  double err = 0.0;
  for (int v = 0; v < s.num_vertices(); ++v) err = std::max(err, std::abs(d.values(v) - s.vertex(v).y()));
  CHECK(err < 1e-9);
}

TEST_CASE("planar point source is Euclidean") {
  const TriSurface s = shapes::planar_grid(15, 11, 7.0, 5.0);
  const int src[] = {7 + 5 * 16};
  const auto d = exact_geodesic(s, src);
  double err = 0.0;
  for (int v = 0; v < s.num_vertices(); ++v) err = std::max(err, std::abs(d.values(v) - (s.vertex(v) - s.vertex(src[0])).norm()));
  CHECK(err < 1e-9);
}

TEST_CASE("exact is bounded by dijkstra and 1-Lipschitz") {
  for (const TriSurface& s : {shapes::icosphere(10.0, 3), shapes::tube(4.0, 20.0, 24, 15)}) {
    const int src[] = {3, 17};
    const auto d = exact_geodesic(s, src).values;
    const auto g = dijkstra_oracle(s, src).values;
    CHECK((d.array() <= g.array() + 1e-9).all());
    CHECK((d.array() >= 0.0).all());
    const auto& t = s.topology();
    for (int e = 0; e < t.num_edges(); ++e) {
      CHECK(std::abs(d(t.edges[e][0]) - d(t.edges[e][1])) <= s.edge_length(e) + 1e-9);
    }
  }
}

TEST_CASE("equilateral lattice stretch bound") {
  const TriSurface s = shapes::equilateral_patch(21, 21, 1.0);
  const int center = 10 * 21 + 10;
  const int src[] = {center};
  const auto d = exact_geodesic(s, src).values;
  const auto g = dijkstra_oracle(s, src).values;
  for (int v = 0; v < s.num_vertices(); ++v) {
    if (v == center) continue;
    CHECK(g(v) / d(v) <= 2.0 / std::sqrt(3.0) + 1e-6);
    CHECK(d(v) == doctest::Approx((s.vertex(v) - s.vertex(center)).norm()).epsilon(1e-9));
  }
}

TEST_CASE("multi-source is pointwise min of singletons") {
  const TriSurface s = shapes::icosphere(10.0, 3);
  const int a[] = {5}, b[] = {200}, ab[] = {5, 200};
  const auto da = exact_geodesic(s, a).values, db = exact_geodesic(s, b).values, dab = exact_geodesic(s, ab).values;
  CHECK((dab - da.cwiseMin(db)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((dab.array() <= da.array() + 1e-12).all());
}

TEST_CASE("invalid and empty sources throw") {
  const TriSurface s = shapes::octahedron(1.0);
  const int bad[] = {99};
  CHECK_THROWS_AS(exact_geodesic(s, bad), TopologyError);
  CHECK_THROWS_AS(exact_geodesic(s, std::span<const int>{}), TopologyError);
}

TEST_CASE("landmark distances") {
  const TriSurface s = shapes::icosphere(10.0, 3);
  LandmarkSet lm{{0}, {1, 2}, {3}};
  const auto d = distance_to_set(s, lm);
  CHECK(d.tricuspid.values(1) == 0.0);
  CHECK(d.tricuspid.values(2) == 0.0);
  const int one[] = {0};
  CHECK((d.apex.values - exact_geodesic(s, one).values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.valves()(3) == 0.0);
  const auto serial = distance_to_set(s, lm, LandmarkSources::all, false);
  CHECK((serial.pulmonary.values - d.pulmonary.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random perturbed sphere: exact below dijkstra") {
  TriSurface s = shapes::icosphere(10.0, 3);
  std::mt19937 rng(7);
  std::normal_distribution<double> n(0.0, 0.3);
  PointMatrix v = s.vertices();
  for (int i = 0; i < v.rows(); ++i) v.row(i) *= 1.0 + 0.03 * n(rng);
  s = s.with_vertices(v);
  const int src[] = {11};
  const auto d = exact_geodesic(s, src).values;
  const auto g = dijkstra_oracle(s, src).values;
  CHECK((d.array() <= g.array() + 1e-9).all());
  const auto& t = s.topology();
  for (int e = 0; e < t.num_edges(); ++e) CHECK(std::abs(d(t.edges[e][0]) - d(t.edges[e][1])) <= s.edge_length(e) + 1e-9);
}
