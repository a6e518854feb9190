#pragma once

#include "rvparc/geodesics.hpp"

#include <array>
#include <optional>

namespace rvparc {

// Tetrahedral mesh of the cavity. The first num_surface_vertices vertices are
// the surface vertices in their original order.
struct TetCavity {
  PointMatrix vertices;
  TetMatrix tets;  // positively oriented
  int num_surface_vertices = 0;
  // For each surface face, the tet that carries it.
  std::vector<int> boundary_tet;
};

struct TetOptions {
  double target_edge = 0.0;        // <= 0: mean surface edge length
  std::optional<Vec3> center;      // star centre; default: volume centroid, then vertex centroid
};

TetCavity tetrahedralize(const TriSurface& s, const TetOptions& opt = {});

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double cavity_volume_mm3(const TetCavity& cav);

// P1 harmonic extension; boundary fields are per surface vertex. One
// factorisation serves every field.
std::vector<ScalarField> laplace_extend(const TetCavity& cav, const std::vector<ScalarField>& boundary,
                                        double* max_residual = nullptr);
ScalarField laplace_extend(const TetCavity& cav, const ScalarField& boundary);

// Distance-like fields whose pointwise argmin defines the regions.
struct RegionFields {
  ScalarField tricuspid, pulmonary, apex;
};

struct Parcellation {
  std::array<double, 3> volume_ml{};  // indexed by Region
  double total_ml = 0.0;
  // Optional explicit cut mesh: 4 rows per sub-tet.
  PointMatrix sub_vertices;
  std::vector<Region> sub_labels;

  double operator[](Region r) const { return volume_ml[static_cast<int>(r)]; }
};

// Exact clipping of each tet by the pairwise difference planes.
// Ties go to inlet, then outflow, then apical.
Parcellation parcellate(const TetCavity& cav, const RegionFields& volumetric, bool keep_cut_mesh = false);

// Region of a point given the three field values (same tie rule).
Region region_of(double d_tricuspid, double d_pulmonary, double d_apex);

// Surface point where the three fields come closest to a three-way tie.
struct Midpoint {
  Vec3 point = Vec3::Zero();
  int face = -1;
  double max_gap = 0.0;  // max pairwise |d_i - d_j| at the point
};
Midpoint tie_midpoint(const TriSurface& s, const RegionFields& surface_fields);

RegionFields geodesic_fields(const LandmarkDistances& d);
// Surface heat maps: field M is 0 on landmark M and 1 on the other two.
RegionFields harmonic_fields(const TriSurface& s, const LandmarkSet& lm);

struct ParcellationResult {
  RegionFields surface_fields;
  TetCavity cavity;
  Parcellation parcellation;
  Midpoint midpoint;
};

enum class FieldKind { geodesic, harmonic };

struct ParcellateOptions {
  FieldKind kind = FieldKind::geodesic;
  LandmarkSources sources = LandmarkSources::all;
  TetOptions tet;
  bool keep_cut_mesh = false;
};

// Surface fields -> tetrahedralise -> extend -> clip.
ParcellationResult parcellate_surface(const TriSurface& s, const LandmarkSet& lm, const ParcellateOptions& opt = {});
// Same pipeline with given surface fields (used for ED -> ES transport).
ParcellationResult parcellate_with_fields(const TriSurface& s, const RegionFields& surface_fields,
                                          const TetOptions& tet = {}, bool keep_cut_mesh = false);

// ES parcellation using the ED boundary values copied by vertex index.
ParcellationResult transport_labels(const CorrespondencePair& pair, const RegionFields& ed_surface_fields,
                                    const TetOptions& tet = {});

struct RegionalReport {
  std::array<double, 3> edv{}, esv{}, ef{};
  double edv_total = 0.0, esv_total = 0.0, ef_total = 0.0;
};

RegionalReport regional_metrics(const Parcellation& ed, const Parcellation& es);

}  // namespace rvparc
