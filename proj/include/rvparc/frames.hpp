#pragma once

#include "rvparc/mesh.hpp"

#include <Eigen/SparseCore>

#include <map>
#include <string>

namespace rvparc {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct HeatSolution {
  ScalarField u;
  std::string boundary;       // human-readable description of the constraints
  int clamped_weights = 0;    // cotangents clipped to +-kMaxCotangent
  double residual = 0.0;      // relative residual of the reduced system
};

constexpr double kMaxCotangent = 1e6;

// Positive semi-definite cotangent stiffness matrix (0.5 * sum of cotangents off the diagonal, negated).
SparseMatrix cotan_stiffness(const TriSurface& s, int* clamped = nullptr);

// Minimises the discrete Dirichlet energy subject to u(v) = value for each constrained vertex.
HeatSolution cotan_laplace_solve(const TriSurface& s, const std::map<int, double>& dirichlet);

enum class LongitudinalSource { heat, geodesic_gradient };

struct FrameField {
  PointMatrix l, c, n;  // per face
  Vec3 l_glob = Vec3::UnitZ();
  // Faces lying entirely inside one landmark patch; l there is the tangential
  // projection of l_glob and carries no anatomical meaning.
  std::vector<char> landmark_face;
  // Faces where the driving field had a vanishing gradient (also given the fallback direction).
  std::vector<char> degenerate;
  ScalarField u;  // the scalar field whose gradient defines l
};

// Per-face P1 gradient of a per-vertex field.
PointMatrix face_gradients(const TriSurface& s, const ScalarField& u);

// u = 0 on the apex, 1 on both valves; l = grad u / |grad u|, c = l x n.
FrameField anatomical_frames(const TriSurface& s, const LandmarkSet& lm,
                             LongitudinalSource source = LongitudinalSource::heat);

struct GlobalDirections {
  Vec3 l_glob;
  Mat3 circumferential_projector;  // Id - l_glob l_glob^T
};

// Area-weighted mean of the per-face longitudinal directions (landmark faces excluded).
GlobalDirections global_directions(const FrameField& ff, const Eigen::VectorXd& face_areas);

}  // namespace rvparc
