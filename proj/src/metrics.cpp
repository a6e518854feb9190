#include "rvparc/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rvparc {

double winding_number(const TriSurface& s, const Vec3& p) {
  double omega = 0.0;
  for (int f = 0; f < s.num_faces(); ++f) {
    const Vec3 a = s.corner(f, 0) - p, b = s.corner(f, 1) - p, c = s.corner(f, 2) - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    omega += 2.0 * std::atan2(num, den);
  }
  return omega / (4.0 * kPi);
}

namespace {

struct Grid {
  Vec3 origin;  // centre of voxel (0,0,0)
  double h = 1.0;
  int nx = 0, ny = 0, nz = 0;
};

// Occupancy of voxel centres; crossing signs along +z give the winding number exactly.
std::vector<char> voxelize(const TriSurface& s, const Grid& g) {
  std::vector<std::vector<std::pair<double, int>>> columns(static_cast<size_t>(g.nx) * g.ny);
  for (int f = 0; f < s.num_faces(); ++f) {
    const Vec3 a = s.corner(f, 0), b = s.corner(f, 1), c = s.corner(f, 2);
    const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (area2 == 0.0) continue;  // vertical in z: no column crosses it transversally
    const int sign = area2 > 0.0 ? 1 : -1;
    const double x0 = std::min({a.x(), b.x(), c.x()}), x1 = std::max({a.x(), b.x(), c.x()});
    const double y0 = std::min({a.y(), b.y(), c.y()}), y1 = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::ceil((x0 - g.origin.x()) / g.h)));
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::floor((x1 - g.origin.x()) / g.h)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((y0 - g.origin.y()) / g.h)));
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::floor((y1 - g.origin.y()) / g.h)));
    for (int i = i0; i <= i1; ++i) {
      const double x = g.origin.x() + i * g.h;
      for (int j = j0; j <= j1; ++j) {
        const double y = g.origin.y() + j * g.h;
        const double wa = ((b.x() - x) * (c.y() - y) - (c.x() - x) * (b.y() - y)) / area2;
        const double wb = ((c.x() - x) * (a.y() - y) - (a.x() - x) * (c.y() - y)) / area2;
        const double wc = 1.0 - wa - wb;
        if (wa < 0.0 || wb < 0.0 || wc < 0.0) continue;
        columns[static_cast<size_t>(i) * g.ny + j].emplace_back(wa * a.z() + wb * b.z() + wc * c.z(), sign);
      }
    }
  }
  std::vector<char> occ(static_cast<size_t>(g.nx) * g.ny * g.nz, 0);
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      auto& col = columns[static_cast<size_t>(i) * g.ny + j];
      if (col.empty()) continue;
      std::sort(col.begin(), col.end());
      // Winding number at z = sum of signs of crossings above z.
      int above = 0;
      for (const auto& c : col) above += c.second;
      size_t next = 0;
      for (int k = 0; k < g.nz; ++k) {
        const double z = g.origin.z() + k * g.h;
        while (next < col.size() && col[next].first <= z) above -= col[next++].second;
        occ[(static_cast<size_t>(i) * g.ny + j) * g.nz + k] = above > 0;
      }
    }
  }
  return occ;
}

}  // namespace

double dice(const TriSurface& a, const TriSurface& b, double voxel) {
  if (!(voxel > 0.0)) throw Error("voxel size must be positive");
  if (!a.closed() || !b.closed()) throw TopologyError("Dice needs watertight surfaces");
  Vec3 lo = a.vertices().colwise().minCoeff().cwiseMin(b.vertices().colwise().minCoeff()).transpose();
  Vec3 hi = a.vertices().colwise().maxCoeff().cwiseMax(b.vertices().colwise().maxCoeff()).transpose();
  Grid g;
  g.h = voxel;
  // Small irrational offset keeps voxel centres off mesh edges of axis-aligned inputs.
  g.origin = lo - Vec3::Constant(voxel) + voxel * Vec3(0.5 + 1e-6 * std::sqrt(2.0), 0.5 + 1e-6 * std::sqrt(3.0),
                                                        0.5 + 1e-6 * std::sqrt(5.0));
  const Vec3 n = ((hi - lo) / voxel).array().ceil() + 2.0;
  g.nx = static_cast<int>(n.x());
  g.ny = static_cast<int>(n.y());
  g.nz = static_cast<int>(n.z());
  const auto oa = voxelize(a, g), ob = voxelize(b, g);
  long na = 0, nb = 0, both = 0;
  for (size_t i = 0; i < oa.size(); ++i) {
    na += oa[i];
    nb += ob[i];
    both += oa[i] && ob[i];
  }
  if (na + nb == 0) throw GeometryError("Dice of two empty volumes");
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

NodeDistances node_distances(const TriSurface& a, const TriSurface& b, bool require_correspondence) {
  NodeDistances d;
  const int n = a.num_vertices();
  if (a.num_vertices() == b.num_vertices()) {
    d.node_to_node = (a.vertices() - b.vertices()).rowwise().norm();
    d.mean_node_to_node = d.node_to_node.mean();
  } else if (require_correspondence) {
    throw TopologyError("node-to-node distances need equal vertex counts");
  }
  d.node_to_surface.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = a.vertex(i);
    double best = std::numeric_limits<double>::infinity();
    for (int f = 0; f < b.num_faces(); ++f) {
      best = std::min(best, (closest_point_on_triangle(p, b.corner(f, 0), b.corner(f, 1), b.corner(f, 2)) - p).squaredNorm());
    }
    d.node_to_surface(i) = std::sqrt(best);
  }
  d.mean_node_to_surface = n > 0 ? d.node_to_surface.mean() : 0.0;
  return d;
}

RigidTransform landmark_alignment(const TriSurface& a, const TriSurface& b, const LandmarkSet& lm) {
  lm.validate(a.num_vertices());
  lm.validate(b.num_vertices());
  PointMatrix pa(3, 3), pb(3, 3);
  int row = 0;
  for (const auto* ids : {&lm.apex, &lm.tricuspid, &lm.pulmonary}) {
    Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
    for (int v : *ids) {
      ca += a.vertex(v);
      cb += b.vertex(v);
    }
    pa.row(row) = ca.transpose() / static_cast<double>(ids->size());
    pb.row(row) = cb.transpose() / static_cast<double>(ids->size());
    ++row;
  }
  return kabsch(pb, pa);
}

ComparisonReport compare_surfaces(const TriSurface& a, const TriSurface& b, const LandmarkSet* lm, double voxel) {
  const TriSurface bb = lm ? b.with_vertices(landmark_alignment(a, b, *lm).apply(b.vertices())) : b;
  ComparisonReport r;
  r.volume_a_ml = signed_volume(a);
  r.volume_b_ml = signed_volume(bb);
  r.volume_difference_ml = r.volume_b_ml - r.volume_a_ml;
  r.volume_difference_pct = 100.0 * r.volume_difference_ml / r.volume_a_ml;
  r.dice = dice(a, bb, voxel);
  r.distances = node_distances(a, bb, false);
  return r;
}

ProcrustesResult procrustes_mean(const std::vector<TriSurface>& pop, double tol, int max_iterations) {
  if (pop.size() < 2) throw Error("Procrustes mean needs at least two surfaces");
  for (const auto& s : pop)
    if (!same_topology(s, pop.front())) throw TopologyError("Procrustes population must share one topology");
  ProcrustesResult r;
  r.aligned.reserve(pop.size());
  for (const auto& s : pop) r.aligned.push_back(s.vertices());
  PointMatrix mean = r.aligned.front();
  const double n = static_cast<double>(mean.rows());
  for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
    PointMatrix next = PointMatrix::Zero(mean.rows(), 3);
    for (auto& x : r.aligned) {
      x = kabsch(x, mean).apply(x);
      next += x;
    }
    next /= static_cast<double>(pop.size());
    r.last_change = std::sqrt((next - mean).squaredNorm() / n);
    mean = std::move(next);
    if (r.last_change < tol) break;
  }
  r.iterations = std::min(r.iterations, max_iterations);
  r.mean = pop.front().with_vertices(mean);
  return r;
}

double accuracy_index(const std::array<double, 3>& computed, const std::array<double, 3>& theoretical) {
  double total = 0.0, err = 0.0;
  for (int k = 0; k < 3; ++k) {
    total += theoretical[k];
    err += std::abs(computed[k] - theoretical[k]);
  }
  if (total == 0.0) throw Error("accuracy index undefined for a zero total increment");
  return 1.0 - err / (2.0 * std::abs(total));
}

AccuracyReport accuracy_report(const std::array<double, 3>& computed, const std::array<double, 3>& theoretical) {
  return AccuracyReport{computed, theoretical, accuracy_index(computed, theoretical)};
}

const std::vector<RemodelMode>& all_remodel_modes() {
  static const std::vector<RemodelMode> modes{
      RemodelMode::global_scale, RemodelMode::global_circ, RemodelMode::global_long,
      RemodelMode::inlet_circ,   RemodelMode::inlet_long,  RemodelMode::apex_circ,
      RemodelMode::apex_long,    RemodelMode::rvot_circ,   RemodelMode::rvot_long};
  return modes;
}

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Job>
void parallel_for(int n, int threads, Job job) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (int i; (i = next++) < n;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<ValidationCase> validate_pipeline(const TriSurface& ref, const LandmarkSet& lm,
                                              const ValidationOptions& opt) {
  const std::vector<RemodelMode>& modes = opt.modes.empty() ? all_remodel_modes() : opt.modes;
  const int nk = static_cast<int>(opt.kinds.size());
  if (nk == 0) throw Error("no parcellation method selected");

  auto parcellate_kind = [&](const TriSurface& s, FieldKind kind) {
    ParcellateOptions po;
    po.kind = kind;
    po.tet = opt.tet;
    return parcellate_surface(s, lm, po).parcellation;
  };

  std::vector<Parcellation> ref_parc(nk);
  parallel_for(nk, opt.threads, [&](int k) { ref_parc[k] = parcellate_kind(ref, opt.kinds[k]); });

  std::vector<SynthCase> synth(modes.size());
  parallel_for(static_cast<int>(modes.size()), opt.threads,
               [&](int i) { synth[i] = synthesize(ref, lm, modes[i], opt.synth); });

  std::vector<ValidationCase> out(modes.size() * nk);
  parallel_for(static_cast<int>(out.size()), opt.threads, [&](int idx) {
    const int i = idx / nk, k = idx % nk;
    ValidationCase& c = out[idx];
    c.mode = modes[i];
    c.kind = opt.kinds[k];
    c.synth = synth[i];
    const Parcellation rem = parcellate_kind(synth[i].surface, c.kind);
    std::array<double, 3> computed{}, theoretical{};
    const double increment = synth[i].increment_ml;
    for (int r = 0; r < 3; ++r) {
      c.reference_ml[r] = ref_parc[k].volume_ml[r];
      c.remodelled_ml[r] = rem.volume_ml[r];
      computed[r] = rem.volume_ml[r] - ref_parc[k].volume_ml[r];
      theoretical[r] = is_global(c.mode) ? increment * ref_parc[k].volume_ml[r] / ref_parc[k].total_ml : 0.0;
    }
    if (!is_global(c.mode)) theoretical[static_cast<int>(target_region(c.mode))] = increment;
    c.accuracy = accuracy_report(computed, theoretical);
  });
  return out;
}

}  // namespace rvparc
