#pragma once

#include "rvparc/alignment.hpp"
#include "rvparc/synthgen.hpp"
#include "rvparc/volumetric.hpp"

namespace rvparc {

// Generalised winding number of a closed surface about p.
double winding_number(const TriSurface& s, const Vec3& p);

// Voxel Dice on a grid shared by both surfaces (voxel in mm). Voxel centres are
// classified by the winding number, evaluated exactly per grid column from the
// signed ray crossings.
double dice(const TriSurface& a, const TriSurface& b, double voxel = 1.0);

struct NodeDistances {
  ScalarField node_to_node;     // |a_i - b_i|, empty when vertex counts differ
  ScalarField node_to_surface;  // distance from a_i to the closest point of b
  double mean_node_to_node = 0.0;
  double mean_node_to_surface = 0.0;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// require_correspondence: throw TopologyError instead of skipping node-to-node.
NodeDistances node_distances(const TriSurface& a, const TriSurface& b, bool require_correspondence = true);

// Rigid transform taking b onto a using apex and valve-patch centroids.
RigidTransform landmark_alignment(const TriSurface& a, const TriSurface& b, const LandmarkSet& lm);

struct ComparisonReport {
  double volume_a_ml = 0.0, volume_b_ml = 0.0;
  double volume_difference_ml = 0.0;   // b - a
  double volume_difference_pct = 0.0;  // relative to a
  double dice = 0.0;
  NodeDistances distances;
};

// b is first aligned onto a by landmark_alignment when lm is given.
ComparisonReport compare_surfaces(const TriSurface& a, const TriSurface& b, const LandmarkSet* lm = nullptr,
                                  double voxel = 1.0);

struct ProcrustesResult {
  TriSurface mean;
  std::vector<PointMatrix> aligned;
  int iterations = 0;
  double last_change = 0.0;  // RMS mean movement in the final iteration
};

// Generalised partial Procrustes: rotation and translation only.
ProcrustesResult procrustes_mean(const std::vector<TriSurface>& population, double tol = 1e-8, int max_iterations = 100);

struct AccuracyReport {
  std::array<double, 3> computed{};     // per region, ml
  std::array<double, 3> theoretical{};  // per region, ml
  double acc = 0.0;
};

// acc = 1 - sum_k |computed_k - theoretical_k| / (2 sum_k theoretical_k).
double accuracy_index(const std::array<double, 3>& computed, const std::array<double, 3>& theoretical);
AccuracyReport accuracy_report(const std::array<double, 3>& computed, const std::array<double, 3>& theoretical);

struct ValidationCase {
  RemodelMode mode = RemodelMode::global_scale;
  FieldKind kind = FieldKind::geodesic;
  SynthCase synth;
  std::array<double, 3> reference_ml{}, remodelled_ml{};
  AccuracyReport accuracy;
};

struct ValidationOptions {
  std::vector<RemodelMode> modes;  // empty: all nine
  std::vector<FieldKind> kinds{FieldKind::geodesic};
  SynthOptions synth;
  TetOptions tet;
  int threads = 0;  // <= 0: hardware concurrency
};

const std::vector<RemodelMode>& all_remodel_modes();

// Synthesises each case, parcellates reference and remodelled surfaces and
// scores the regional increments. Theoretical increments: the whole measured
// increment in the target region (local) or proportional to the reference
// regional volumes (global).
std::vector<ValidationCase> validate_pipeline(const TriSurface& ref, const LandmarkSet& lm,
                                              const ValidationOptions& opt = {});

}  // namespace rvparc
