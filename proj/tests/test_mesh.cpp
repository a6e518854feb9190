#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvparc/mesh_io.hpp"
#include "rvparc/shapes.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>

using namespace rvparc;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("rvparc_test_" + name); }

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("octahedron volume") {
  const TriSurface s = shapes::octahedron(1.0);
  CHECK(s.num_vertices() == 6);
  CHECK(s.num_faces() == 8);
  CHECK(signed_volume_mm3(s.vertices(), s.faces()) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(signed_volume(s) == doctest::Approx(4.0 / 3.0 / 1000.0).epsilon(1e-12));
}

TEST_CASE("unit cube is 0.001 ml") {
  const TriSurface s = shapes::box(Vec3::Zero(), Vec3::Ones());
  CHECK(signed_volume(s) == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("icosphere volume within 0.5 percent") {
  const TriSurface s = shapes::icosphere(10.0, 4);
  const double exact = 4.0 / 3.0 * kPi * 1000.0 / 1000.0;
  CHECK(std::abs(signed_volume(s) - exact) / exact < 0.005);
}

TEST_CASE("flipped input is repaired, flipped volume is negated") {
  const TriSurface s = shapes::octahedron(2.0);
  FaceMatrix flipped = s.faces();
  flipped.col(1).swap(flipped.col(2));
  CHECK(signed_volume_mm3(s.vertices(), flipped) == doctest::Approx(-signed_volume_mm3(s.vertices(), s.faces())));
  const TriSurface r = TriSurface::build(s.vertices(), flipped);
  CHECK(r.orientation_repaired());
  CHECK(signed_volume(r) > 0.0);
}

TEST_CASE("volume is rigid invariant and scales cubically") {
  const TriSurface s = shapes::icosphere(5.0, 2);
  const Mat3 rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  PointMatrix moved = (s.vertices() * rot.transpose()).rowwise() + Eigen::RowVector3d(4, -2, 9);
  CHECK(signed_volume(s.with_vertices(moved)) == doctest::Approx(signed_volume(s)).epsilon(1e-9));
  CHECK(signed_volume(s.with_vertices(2.0 * s.vertices())) == doctest::Approx(8.0 * signed_volume(s)).epsilon(1e-9));
}

TEST_CASE("single triangle is not watertight") {
  PointMatrix v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  FaceMatrix f(1, 3);
  f << 0, 1, 2;
  CHECK(error_of([&] { TriSurface::build(v, f); }).find("not watertight") != std::string::npos);
}

TEST_CASE("cube with a flipped face has inconsistent orientation") {
  const TriSurface s = shapes::box(Vec3::Zero(), Vec3::Ones());
  FaceMatrix f = s.faces();
  std::swap(f(3, 1), f(3, 2));
  CHECK(error_of([&] { TriSurface::build(s.vertices(), f); }).find("inconsistent orientation") != std::string::npos);
}

TEST_CASE("non-manifold edge and degenerate face are rejected") {
  PointMatrix v(5, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1;
  FaceMatrix f(3, 3);
  f << 0, 1, 2, 1, 0, 3, 1, 0, 4;
  CHECK(error_of([&] { TriSurface::build(v, f, Closure::optional); }).find("non-manifold edge") != std::string::npos);

  PointMatrix d(3, 3);
  d << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  FaceMatrix g(1, 3);
  g << 0, 1, 2;
  CHECK_THROWS_AS(TriSurface::build(d, g, Closure::optional), GeometryError);
}

TEST_CASE("every directed edge occurs exactly once") {
  const TriSurface s = shapes::icosphere(1.0, 2);
  const auto& t = s.topology();
  for (int h = 0; h < 3 * s.num_faces(); ++h) {
    REQUIRE(t.twin[h] >= 0);
    CHECK(t.twin[t.twin[h]] == h);
  }
  CHECK(t.num_edges() * 2 == 3 * s.num_faces());
}

TEST_CASE("round trip through all formats") {
  const TriSurface s = shapes::icosphere(3.0, 1);
  MeshFields fields;
  ScalarField d(s.num_vertices());
  for (int i = 0; i < s.num_vertices(); ++i) d(i) = 0.1234567 * i;
  fields.point_scalars["dist"] = d;
  fields.cell_scalars["label"] = ScalarField::Constant(s.num_faces(), 2.0);
  for (const char* ext : {".obj", ".vtk", ".inp"}) {
    const fs::path p = temp_path(std::string("rt") + ext);
    save_surface(s, p, fields);
    const LoadedSurface back = load_surface_with_fields(p, format_from_path(p));
    CHECK(back.surface.faces() == s.faces());
    CHECK((back.surface.vertices() - s.vertices()).cwiseAbs().maxCoeff() < 1e-9 * 3.0);
    if (format_from_path(p) != MeshFormat::obj) {
      REQUIRE(back.fields.point_scalars.count("dist") == 1);
      CHECK((back.fields.point_scalars.at("dist") - d).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(back.fields.cell_scalars.at("label")(0) == 2.0);
    }
    fs::remove(p);
  }
}

TEST_CASE("vtk output carries a POINT_DATA block") {
  const TriSurface s = shapes::octahedron(1.0);
  MeshFields fields;
  fields.point_scalars["d"] = ScalarField::LinSpaced(6, 0.0, 5.0);
  const fs::path p = temp_path("pd.vtk");
  save_surface(s, p, fields);
  std::ifstream in(p);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text.find("POINT_DATA 6") != std::string::npos);
  fs::remove(p);
}

TEST_CASE("unwritable path raises an I/O error") {
  CHECK_THROWS_AS(save_surface(shapes::octahedron(1.0), "/nonexistent_dir/x/y.vtk"), IoError);
}

TEST_CASE("ucd reader accepts 0- and 1-based node ids") {
  const fs::path p = temp_path("zero.inp");
  {
    std::ofstream out(p);
    out << "6 8 0 0 0\n";
    const TriSurface s = shapes::octahedron(1.0);
    for (int i = 0; i < 6; ++i) out << i << " " << s.vertex(i).transpose() << "\n";
    for (int f = 0; f < 8; ++f) out << f << " 0 tri " << s.faces().row(f) << "\n";
  }
  const LoadedSurface ls = load_surface_with_fields(p, MeshFormat::ucd);
  CHECK(ls.ucd_index_base == 0);
  CHECK(signed_volume_mm3(ls.surface.vertices(), ls.surface.faces()) == doctest::Approx(4.0 / 3.0));
  fs::remove(p);
}

TEST_CASE("landmark json round trip and validation") {
  LandmarkSet lm{{0}, {1, 2}, {3}};
  const fs::path p = temp_path("lm.json");
  save_landmarks(lm, p);
  const LandmarkSet back = load_landmarks(p);
  CHECK(back.tricuspid == lm.tricuspid);
  fs::remove(p);
  LandmarkSet bad{{0}, {0}, {1}};
  CHECK_THROWS_AS(bad.validate(6), TopologyError);
  LandmarkSet empty{{}, {1}, {2}};
  CHECK_THROWS_AS(empty.validate(6), TopologyError);
}

TEST_CASE("correspondence pair rejects permuted faces") {
  const TriSurface a = shapes::icosphere(1.0, 1);
  FaceMatrix f = a.faces();
  f.row(0).swap(f.row(1));
  const TriSurface b = TriSurface::build(a.vertices(), f);
  CHECK(error_of([&] { CorrespondencePair(a, b); }).find("topology mismatch") != std::string::npos);
  CHECK_NOTHROW(CorrespondencePair(a, a));
}
