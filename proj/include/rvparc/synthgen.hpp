#pragma once

#include "rvparc/frames.hpp"
#include "rvparc/geodesics.hpp"
#include "rvparc/lbfgs.hpp"
#include "rvparc/strain.hpp"

#include <memory>
#include <optional>

namespace rvparc {

// Intrinsic description of a surface: per-face 2D coordinates plus, per
// interior edge (i = face holding lo->hi, j = face holding hi->lo), the
// dihedral angle and the frame rotation R_ij = f_j^T f_i.
struct SurfaceDescriptors {
  FaceMatrix faces;
  int num_vertices = 0;
  std::shared_ptr<const Topology> topology;
  std::vector<std::array<Vec2, 3>> a;  // per face, corner order
  ScalarField edge_length;             // per edge, from the first incident face
  ScalarField dihedral;                // per edge, 0 on boundary edges
  std::vector<Mat3> rotation;          // per edge, identity on boundary edges
};

SurfaceDescriptors extract_descriptors(const TriSurface& s);

// R_ij = Rz(alpha_j) Rx(psi) Rz(-alpha_i), alpha = in-plane angle of the shared
// edge (lo->hi) in each face's coordinates.
Mat3 rotation_from_angles(double alpha_i, double psi, double alpha_j);
// Recomputes every R_ij from the current a coordinates and dihedral angles.
void update_rotations(SurfaceDescriptors& d);

// Frames f_t that embed each face's coordinates into the surface.
std::vector<Mat3> embedded_frames(const TriSurface& s, const SurfaceDescriptors& d);

struct ReconstructionWeights {
  double lambda1 = 1.0;  // vertex/edge term
  double lambda2 = 1.0;  // frame-compatibility term
};

struct LinearReconstruction {
  TriSurface surface;
  std::vector<Mat3> frames;
  double residual = 0.0;  // relative normal-equations residual
};

// Least squares over vertices and unconstrained 3x3 frames; vertex 0 pinned
// at the origin and frame 0 pinned to the identity.
LinearReconstruction linear_reconstruct(const SurfaceDescriptors& d, const ReconstructionWeights& w = {});

struct LogReconstruction {
  TriSurface surface;
  std::vector<Mat3> frames;
  double energy = 0.0;
  LbfgsResult optimizer;
};

struct LogOptions {
  ReconstructionWeights weights;
  LbfgsOptions lbfgs;
};

// Energy over (x, v) with f = exp([v]_x); gradient via the closed-form dexp.
double log_energy(const SurfaceDescriptors& d, const Eigen::VectorXd& xv, Eigen::VectorXd* grad,
                  const ReconstructionWeights& w = {});
// Packs vertices and frame rotation vectors as [x (3n), v (3F)].
Eigen::VectorXd pack_state(const PointMatrix& x, const std::vector<Mat3>& frames);

LogReconstruction log_reconstruct(const SurfaceDescriptors& d, const TriSurface& init, const LogOptions& opt = {});
LogReconstruction log_reconstruct(const SurfaceDescriptors& d, const PointMatrix& init_vertices,
                                  const std::vector<Mat3>& init_frames, const LogOptions& opt = {});

enum class RemodelMode {
  apex_circ, apex_long, rvot_circ, rvot_long, inlet_circ, inlet_long, global_long, global_circ, global_scale
};

const char* to_string(RemodelMode m);
RemodelMode remodel_mode_from_string(const std::string& s);
bool is_global(RemodelMode m);
bool is_circumferential(RemodelMode m);
// Region receiving the increment for local modes.
Region target_region(RemodelMode m);

struct LocalStrainSpec {
  RemodelMode mode = RemodelMode::apex_circ;
  double omega = 15.0;        // mm
  double omega_valve = 7.5;   // mm
  bool paper_literal = false; // growing exp(+d^2/w^2) factors
};

// Per-face strain magnitude profile w_t (strain = lambda * w_t * v v^T).
struct StrainProfile {
  bool circumferential = true;  // v = c, otherwise v = l
  ScalarField weight;           // per face
  PointMatrix direction;        // per face unit v_t (l or c)
  std::vector<char> valve_face; // strain forced to zero
};

StrainProfile strain_profile(const TriSurface& ref, const LandmarkSet& lm, const LandmarkDistances& dist,
                             const FrameField& frames, const LocalStrainSpec& spec);

// Reference descriptors with a_ti - a_tj stretched by (Id + eps_t); dihedrals unchanged.
SurfaceDescriptors impose_local_strain(const SurfaceDescriptors& ref_desc, const std::vector<Mat3>& ref_frames,
                                       const StrainProfile& profile, double lambda);

struct CalibrationOptions {
  double target_ml = 5.0;
  double tolerance_ml = 0.05;
  int max_iterations = 50;
  double initial_lambda = 0.1;
  LogOptions reconstruction;
};

struct CalibrationResult {
  double lambda = 0.0;
  double increment_ml = 0.0;
  int iterations = 0;  // regula falsi iterations after bracketing
  bool converged = false;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double g_lo = 0.0, g_hi = 0.0;  // g at the initial bracket
  LogReconstruction reconstruction;
};

// Regula falsi (Illinois variant) on g(lambda) = dV(lambda) - target.
CalibrationResult calibrate_lambda(const TriSurface& ref, const StrainProfile& profile,
                                   const CalibrationOptions& opt = {});

// Affine remodelling about the vertex centroid.
Mat3 global_matrix(RemodelMode mode, const Vec3& l_glob, double t);
// Parameter t giving a volume change of `fraction` (det = 1 + fraction).
double global_parameter_for_fraction(RemodelMode mode, double fraction);
TriSurface global_remodel(const TriSurface& ref, const Vec3& l_glob, RemodelMode mode, double t);

// Strain fidelity of a synthetic case.
struct StrainErrorSummary {
  double mean_error = 0.0;         // mean over faces of |v^T eps_rec v - lambda w_t|
  double max_imposed = 0.0;        // lambda * max w_t
  double relative_error = 0.0;     // mean_error / max_imposed
  double mean_tensor_error = 0.0;  // mean Frobenius norm of eps_rec - eps_imposed
};

StrainErrorSummary strain_error(const TriSurface& ref, const TriSurface& remodelled, const FrameField& frames,
                                const StrainProfile& profile, double lambda);

struct SynthCase {
  TriSurface surface;
  RemodelMode mode = RemodelMode::global_scale;
  double parameter = 0.0;  // lambda (local) or t (global)
  double increment_ml = 0.0;
  bool calibrated = true;  // volume target reached within the iteration budget
  int iterations = 0;
  int optimizer_iterations = 0;
  double energy = 0.0;
  std::optional<StrainErrorSummary> strain;
};

struct SynthOptions {
  double target_ml = 5.0;         // local modes
  double target_fraction = 0.10;  // global modes
  LocalStrainSpec spec;
  CalibrationOptions calibration;
  LongitudinalSource longitudinal = LongitudinalSource::heat;
};

// Local cases are rigidly aligned back onto `ref`.
SynthCase synthesize(const TriSurface& ref, const LandmarkSet& lm, RemodelMode mode, const SynthOptions& opt = {});

struct TemplateParams {
  int num_vertices = 938;
  double volume_ml = 144.0;
  // Unit directions (before deformation) of the landmark centres.
  Vec3 apex_dir = Vec3(0.0, -0.3, -1.0);
  Vec3 tricuspid_dir = Vec3(0.6, 0.0, 1.0);
  Vec3 pulmonary_dir = Vec3(-0.55, 0.45, 0.85);
  // Angular half-axes (radians) of the elliptical valve patches.
  Vec2 tricuspid_radii = Vec2(0.55, 0.45);
  Vec2 pulmonary_radii = Vec2(0.22, 0.2);
  // Radial shaping.
  double elongation = 1.35;  // stretch along the apex-base axis
  double flattening = 0.8;   // septal flattening factor
  double apical_taper = 0.9; // lateral shrink towards the apex, in [0, 1)
  int relax_rounds = 0;      // vertex relaxation rounds on the shaped surface
  bool flat_valves = false;  // project each valve patch onto its rim plane
};

struct Template {
  TriSurface surface;
  LandmarkSet landmarks;
};

// Star-shaped RV-like closed surface from a Fibonacci point set.
Template generate_template(const TemplateParams& p = {});

// Convex hull of points in general position (outward orientation).
FaceMatrix convex_hull(const PointMatrix& points);

}  // namespace rvparc
