#include "rvparc/synthgen.hpp"

#include "rvparc/alignment.hpp"

#include <cmath>
#include <map>

namespace rvparc {

namespace {

const std::map<std::string, RemodelMode>& mode_names() {
  static const std::map<std::string, RemodelMode> names{
      {"apex-circ", RemodelMode::apex_circ},     {"apex-long", RemodelMode::apex_long},
      {"rvot-circ", RemodelMode::rvot_circ},     {"rvot-long", RemodelMode::rvot_long},
      {"inlet-circ", RemodelMode::inlet_circ},   {"inlet-long", RemodelMode::inlet_long},
      {"global-long", RemodelMode::global_long}, {"global-circ", RemodelMode::global_circ},
      {"global-scale", RemodelMode::global_scale}};
  return names;
}

Landmark target_landmark(RemodelMode m) {
  switch (target_region(m)) {
    case Region::inlet: return Landmark::tricuspid;
    case Region::outflow: return Landmark::pulmonary;
    case Region::apical: return Landmark::apex;
  }
  return Landmark::apex;
}

}  // namespace

const char* to_string(RemodelMode m) {
  for (const auto& [name, mode] : mode_names())
    if (mode == m) return name.c_str();
  return "?";
}

RemodelMode remodel_mode_from_string(const std::string& s) {
  const auto it = mode_names().find(s);
  if (it == mode_names().end()) throw Error("unknown remodelling mode '" + s + "'");
  return it->second;
}

bool is_global(RemodelMode m) {
  return m == RemodelMode::global_long || m == RemodelMode::global_circ || m == RemodelMode::global_scale;
}

bool is_circumferential(RemodelMode m) {
  return m == RemodelMode::apex_circ || m == RemodelMode::rvot_circ || m == RemodelMode::inlet_circ ||
         m == RemodelMode::global_circ;
}

Region target_region(RemodelMode m) {
  switch (m) {
    case RemodelMode::apex_circ:
    case RemodelMode::apex_long: return Region::apical;
    case RemodelMode::rvot_circ:
    case RemodelMode::rvot_long: return Region::outflow;
    case RemodelMode::inlet_circ:
    case RemodelMode::inlet_long: return Region::inlet;
    default: throw Error("global remodelling has no target region");
  }
}

StrainProfile strain_profile(const TriSurface& ref, const LandmarkSet& lm, const LandmarkDistances& dist,
                             const FrameField& frames, const LocalStrainSpec& spec) {
  if (is_global(spec.mode)) throw Error("strain profile requested for a global mode");
  if (!(spec.omega > 0.0 && spec.omega_valve > 0.0)) throw Error("bandwidths must be positive");
  const int nf = ref.num_faces();
  const ScalarField& dm = dist[target_landmark(spec.mode)].values;
  const ScalarField dv = dist.valves();
  std::vector<char> valve_vertex(ref.num_vertices(), 0);
  for (int v : lm.valves()) valve_vertex[v] = 1;

  StrainProfile p;
  p.circumferential = is_circumferential(spec.mode);
  p.weight.resize(nf);
  p.direction = p.circumferential ? frames.c : frames.l;
  p.valve_face.assign(nf, 0);
  for (int f = 0; f < nf; ++f) {
    double d_m = 0.0, d_v = 0.0;
    bool all_valve = true;
    for (int k = 0; k < 3; ++k) {
      const int v = ref.faces()(f, k);
      d_m += dm(v) / 3.0;
      d_v += dv(v) / 3.0;
      all_valve = all_valve && valve_vertex[v];
    }
    p.valve_face[f] = all_valve;
    if (all_valve) {
      p.weight(f) = 0.0;
      continue;
    }
    const double am = d_m * d_m / (spec.omega * spec.omega);
    const double av = d_v * d_v / (spec.omega_valve * spec.omega_valve);
    p.weight(f) = spec.paper_literal ? std::exp(am) * std::exp(av) : std::exp(-am) * (1.0 - std::exp(-av));
  }
  return p;
}

SurfaceDescriptors impose_local_strain(const SurfaceDescriptors& ref_desc, const std::vector<Mat3>& ref_frames,
                                       const StrainProfile& profile, double lambda) {
  SurfaceDescriptors d = ref_desc;
  for (Eigen::Index f = 0; f < d.faces.rows(); ++f) {
    const double m = lambda * profile.weight(f);
    if (m == 0.0) continue;
    if (1.0 + m <= 0.0) throw GeometryError("imposed strain inverts face " + std::to_string(f));
    const Vec2 v = (ref_frames[f].transpose() * profile.direction.row(f).transpose()).head<2>().normalized();
    const Mat2 stretch = Mat2::Identity() + m * v * v.transpose();
    for (auto& p : d.a[f]) p = stretch * p;
  }
  const auto& topo = *d.topology;
  for (int e = 0; e < topo.num_edges(); ++e) {
    const auto [lo, hi] = topo.edges[e];
    const int f = topo.edge_faces[e][0] >= 0 ? topo.edge_faces[e][0] : topo.edge_faces[e][1];
    int kl = 0, kh = 0;
    for (int k = 0; k < 3; ++k) {
      if (d.faces(f, k) == lo) kl = k;
      if (d.faces(f, k) == hi) kh = k;
    }
    d.edge_length(e) = (d.a[f][kh] - d.a[f][kl]).norm();
  }
  update_rotations(d);
  return d;
}

CalibrationResult calibrate_lambda(const TriSurface& ref, const StrainProfile& profile, const CalibrationOptions& opt) {
  const SurfaceDescriptors ref_desc = extract_descriptors(ref);
  const std::vector<Mat3> ref_frames = embedded_frames(ref, ref_desc);
  const double v0 = signed_volume(ref);

  CalibrationResult res;
  // Each solve starts from the solution at the nearest lambda already evaluated;
  // cold starts at large strain can stall in a different basin.
  std::map<double, TriSurface> solved{{0.0, ref}};
  auto evaluate = [&](double lambda, LogReconstruction* keep) {
    auto near = solved.lower_bound(lambda);
    if (near == solved.end() || (near != solved.begin() && lambda - std::prev(near)->first < near->first - lambda)) {
      --near;
    }
    const TriSurface& init = near->second;
    const SurfaceDescriptors d = impose_local_strain(ref_desc, ref_frames, profile, lambda);
    LogReconstruction rec = log_reconstruct(d, init.vertices(), embedded_frames(init, d), opt.reconstruction);
    const double g = signed_volume(rec.surface) - v0 - opt.target_ml;
    solved.insert_or_assign(lambda, rec.surface);
    if (keep) *keep = std::move(rec);
    return g;
  };

  if (opt.target_ml == 0.0) {
    res.converged = true;
    res.reconstruction.surface = ref;
    res.reconstruction.frames = ref_frames;
    return res;
  }

  double lo = 0.0, g_lo = -opt.target_ml;
  double hi = std::copysign(std::abs(opt.initial_lambda), opt.target_ml);
  LogReconstruction rec_hi;
  double g_hi = 0.0;
  bool retreated = false;
  for (int k = 0;; ++k) {
    if (k >= 40) throw NumericalError("regula falsi bracket not found");
    bool usable = true;
    try {
      g_hi = evaluate(hi, &rec_hi);
      // A stalled solve or a reversed volume response means the step jumped to
      // another (buckled) branch; retreat towards the last good lambda.
      usable = rec_hi.optimizer.iterations < opt.reconstruction.lbfgs.max_iterations &&
               (g_hi - g_lo) * opt.target_ml > 0.0;
    } catch (const GeometryError&) {
      usable = false;
    }
    if (!usable) {
      retreated = true;
      hi = 0.5 * (lo + hi);
      if (std::abs(hi - lo) < 1e-6 * std::abs(opt.initial_lambda)) {
        throw NumericalError("regula falsi bracket not found: the volume response saturates below the target");
      }
      continue;
    }
    if ((g_hi > 0.0) != (g_lo > 0.0) || std::abs(g_hi) < opt.tolerance_ml) break;
    const double step = hi - lo;
    lo = hi;
    g_lo = g_hi;
    hi = retreated ? lo + step : 2.0 * hi;
  }
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.g_lo = g_lo;
  res.g_hi = g_hi;
  if (std::abs(g_hi) < opt.tolerance_ml) {
    res.lambda = hi;
    res.increment_ml = g_hi + opt.target_ml;
    res.converged = true;
    res.reconstruction = std::move(rec_hi);
    return res;
  }

  // Illinois variant: halve the retained endpoint's value when the same side is kept twice.
  int side = 0;
  LogReconstruction rec;
  for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
    const double c = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
    const double gc = evaluate(c, &rec);
    res.lambda = c;
    res.increment_ml = gc + opt.target_ml;
    if (std::abs(gc) < opt.tolerance_ml) {
      res.converged = true;
      break;
    }
    if ((gc > 0.0) == (g_hi > 0.0)) {
      hi = c;
      g_hi = gc;
      if (side == -1) g_lo *= 0.5;
      side = -1;
    } else {
      lo = c;
      g_lo = gc;
      if (side == 1) g_hi *= 0.5;
      side = 1;
    }
  }
  res.iterations = std::min(res.iterations, opt.max_iterations);
  res.reconstruction = std::move(rec);
  return res;
}

Mat3 global_matrix(RemodelMode mode, const Vec3& l_glob, double t) {
  if (t <= -1.0) throw Error("remodelling parameter must exceed -1");
  const Vec3 l = l_glob.normalized();
  switch (mode) {
    case RemodelMode::global_long: return Mat3::Identity() + t * l * l.transpose();
    case RemodelMode::global_circ:
      if (t < 0.0) throw Error("circumferential remodelling parameter must be non-negative");
      return Mat3::Identity() + std::sqrt(t) * (Mat3::Identity() - l * l.transpose());
    case RemodelMode::global_scale: return (1.0 + t) * Mat3::Identity();
    default: throw Error("not a global remodelling mode");
  }
}

double global_parameter_for_fraction(RemodelMode mode, double fraction) {
  if (fraction <= -1.0) throw Error("volume fraction must exceed -1");
  switch (mode) {
    case RemodelMode::global_long: return fraction;
    case RemodelMode::global_circ: {
      const double s = std::sqrt(1.0 + fraction) - 1.0;
      if (s < 0.0) throw Error("circumferential remodelling cannot shrink the volume");
      return s * s;
    }
    case RemodelMode::global_scale: return std::cbrt(1.0 + fraction) - 1.0;
    default: throw Error("not a global remodelling mode");
  }
}

TriSurface global_remodel(const TriSurface& ref, const Vec3& l_glob, RemodelMode mode, double t) {
  const Mat3 m = global_matrix(mode, l_glob, t);
  const Vec3 c = vertex_centroid(ref);
  const PointMatrix x = ((ref.vertices().rowwise() - c.transpose()) * m.transpose()).rowwise() + c.transpose();
  return ref.with_vertices(x);
}

StrainErrorSummary strain_error(const TriSurface& ref, const TriSurface& remodelled, const FrameField& frames,
                                const StrainProfile& profile, double lambda) {
  const StrainField sf = aligned_strain(ref, remodelled, frames);
  StrainErrorSummary s;
  const int nf = ref.num_faces();
  for (int f = 0; f < nf; ++f) {
    const double imposed = lambda * profile.weight(f);
    const double rec = profile.circumferential ? sf.e_cc(f) : sf.e_ll(f);
    s.mean_error += std::abs(rec - imposed) / nf;
    Mat2 imp = Mat2::Zero();
    imp(profile.circumferential ? 1 : 0, profile.circumferential ? 1 : 0) = imposed;
    s.mean_tensor_error += (sf.epsilon[f] - imp).norm() / nf;
    s.max_imposed = std::max(s.max_imposed, std::abs(imposed));
  }
  s.relative_error = s.max_imposed > 0.0 ? s.mean_error / s.max_imposed : 0.0;
  return s;
}

SynthCase synthesize(const TriSurface& ref, const LandmarkSet& lm, RemodelMode mode, const SynthOptions& opt) {
  const FrameField frames = anatomical_frames(ref, lm, opt.longitudinal);
  SynthCase out;
  out.mode = mode;
  const double v0 = signed_volume(ref);
  if (is_global(mode)) {
    out.parameter = global_parameter_for_fraction(mode, opt.target_fraction);
    out.surface = global_remodel(ref, frames.l_glob, mode, out.parameter);
    out.increment_ml = signed_volume(out.surface) - v0;
    return out;
  }
  LocalStrainSpec spec = opt.spec;
  spec.mode = mode;
  const StrainProfile profile = strain_profile(ref, lm, distance_to_set(ref, lm), frames, spec);
  CalibrationOptions co = opt.calibration;
  co.target_ml = opt.target_ml;
  CalibrationResult cal = calibrate_lambda(ref, profile, co);
  out.calibrated = cal.converged;
  out.parameter = cal.lambda;
  out.increment_ml = cal.increment_ml;
  out.iterations = cal.iterations;
  out.optimizer_iterations = cal.reconstruction.optimizer.iterations;
  out.energy = cal.reconstruction.energy;
  const TriSurface& rec = cal.reconstruction.surface;
  out.surface = rec.with_vertices(kabsch(rec.vertices(), ref.vertices()).apply(rec.vertices()));
  out.strain = strain_error(ref, out.surface, frames, profile, cal.lambda);
  return out;
}

}  // namespace rvparc
