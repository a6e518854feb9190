#include "rvparc/volumetric.hpp"

#include "rvparc/frames.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <set>

namespace rvparc {

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double cavity_volume_mm3(const TetCavity& cav) {
  double v = 0.0;
  for (Eigen::Index t = 0; t < cav.tets.rows(); ++t) {
    v += tet_signed_volume(cav.vertices.row(cav.tets(t, 0)).transpose(), cav.vertices.row(cav.tets(t, 1)).transpose(),
                           cav.vertices.row(cav.tets(t, 2)).transpose(), cav.vertices.row(cav.tets(t, 3)).transpose());
  }
  return v;
}

namespace {

constexpr double kMinTetVolume = 1e-12;

Vec3 volume_centroid(const TriSurface& s) {
  Vec3 acc = Vec3::Zero();
  double vol = 0.0;
  for (int f = 0; f < s.num_faces(); ++f) {
    const double v = s.corner(f, 0).dot(s.corner(f, 1).cross(s.corner(f, 2))) / 6.0;
    acc += v * (s.corner(f, 0) + s.corner(f, 1) + s.corner(f, 2)) / 4.0;
    vol += v;
  }
  return acc / vol;
}

bool sees_all_faces(const TriSurface& s, const Vec3& c, double tol) {
  for (int f = 0; f < s.num_faces(); ++f) {
    if (tet_signed_volume(c, s.corner(f, 0), s.corner(f, 1), s.corner(f, 2)) <= tol) return false;
  }
  return true;
}

// Vertex whose fan over the non-incident faces fills the solid, if any.
std::optional<int> fan_vertex(const TriSurface& s, double tol) {
  for (int v = 0; v < s.num_vertices(); ++v) {
    bool ok = true;
    for (int f = 0; f < s.num_faces() && ok; ++f) {
      if (s.faces()(f, 0) == v || s.faces()(f, 1) == v || s.faces()(f, 2) == v) continue;
      ok = tet_signed_volume(s.vertex(v), s.corner(f, 0), s.corner(f, 1), s.corner(f, 2)) > tol;
    }
    if (ok) return v;
  }
  return std::nullopt;
}

void check_boundary(const TriSurface& s, const TetCavity& cav) {
  // Faces of tets seen once form the boundary; compare against the surface as oriented sets.
  std::map<std::array<int, 3>, int> count;
  auto key = [](int a, int b, int c) {
    std::array<int, 3> k{a, b, c};
    std::sort(k.begin(), k.end());
    return k;
  };
  static constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (Eigen::Index t = 0; t < cav.tets.rows(); ++t) {
    for (const auto& f : kFaces) ++count[key(cav.tets(t, f[0]), cav.tets(t, f[1]), cav.tets(t, f[2]))];
  }
  std::set<std::array<int, 3>> boundary;
  for (const auto& [k, n] : count) {
    if (n > 2) throw GeometryError("tetrahedralization is non-manifold");
    if (n == 1) boundary.insert(k);
  }
  std::set<std::array<int, 3>> surface;
  for (int f = 0; f < s.num_faces(); ++f) surface.insert(key(s.faces()(f, 0), s.faces()(f, 1), s.faces()(f, 2)));
  if (boundary != surface) throw GeometryError("boundary-preservation failure in tetrahedralization");
}

void orient_and_append(std::vector<std::array<int, 4>>& out, std::array<int, 4> t, const PointMatrix& p) {
  auto at = [&](int i) -> Vec3 { return p.row(i).transpose(); };
  double v = tet_signed_volume(at(t[0]), at(t[1]), at(t[2]), at(t[3]));
  if (v < 0.0) {
    std::swap(t[2], t[3]);
    v = -v;
  }
  if (!(v > kMinTetVolume)) throw GeometryError("tetrahedralization produced a degenerate tet");
  out.push_back(t);
}

}  // namespace

TetCavity tetrahedralize(const TriSurface& s, const TetOptions& opt) {
  if (!s.closed()) throw TopologyError("surface is not watertight");
  const int nv = s.num_vertices();
  const double diameter = bounding_box_diagonal(s.vertices());
  const double target = opt.target_edge > 0.0 ? opt.target_edge : mean_edge_length(s);
  const double tol = 1e-12 * diameter * diameter * diameter;

  std::vector<std::array<int, 4>> tets;
  TetCavity cav;
  cav.num_surface_vertices = nv;

  if (target >= diameter) {
    if (const auto v = fan_vertex(s, tol)) {
      cav.vertices = s.vertices();
      for (int f = 0; f < s.num_faces(); ++f) {
        if (s.faces()(f, 0) == *v || s.faces()(f, 1) == *v || s.faces()(f, 2) == *v) continue;
        orient_and_append(tets, {*v, s.faces()(f, 0), s.faces()(f, 1), s.faces()(f, 2)}, cav.vertices);
      }
    }
  }

  if (tets.empty()) {
    Vec3 c;
    if (opt.center) {
      c = *opt.center;
      if (!sees_all_faces(s, c, tol)) throw GeometryError("surface is not star-shaped about the given centre");
    } else {
      c = volume_centroid(s);
      if (!sees_all_faces(s, c, tol)) {
        c = vertex_centroid(s);
        if (!sees_all_faces(s, c, tol)) throw GeometryError("surface is not star-shaped about its centroid");
      }
    }
    double radius = 0.0;
    for (int v = 0; v < nv; ++v) radius = std::max(radius, (s.vertex(v) - c).norm());
    const double q = std::min(0.5, target / radius);

    // Layer k is the surface shrunk towards c by scales[k].
    std::vector<double> scales{1.0};
    while (scales.back() * radius > target && scales.size() < 200) scales.push_back(scales.back() * (1.0 - q));
    const int layers = static_cast<int>(scales.size());

    cav.vertices.resize(layers * nv + 1, 3);
    for (int k = 0; k < layers; ++k) {
      for (int v = 0; v < nv; ++v) cav.vertices.row(k * nv + v) = (c + scales[k] * (s.vertex(v) - c)).transpose();
    }
    const int center = layers * nv;
    cav.vertices.row(center) = c.transpose();

    for (int f = 0; f < s.num_faces(); ++f) {
      for (int k = 0; k + 1 < layers; ++k) {
        // Prism between layer k (outer) and k+1. The outer triangle holds the
        // smallest index, so each quad is cut through its minimum vertex and
        // neighbouring prisms agree on the shared diagonals.
        std::array<int, 3> a, b;
        for (int i = 0; i < 3; ++i) {
          a[i] = k * nv + s.faces()(f, i);
          b[i] = (k + 1) * nv + s.faces()(f, i);
        }
        const int r = static_cast<int>(std::min_element(a.begin(), a.end()) - a.begin());
        std::rotate(a.begin(), a.begin() + r, a.end());
        std::rotate(b.begin(), b.begin() + r, b.end());
        orient_and_append(tets, {a[0], b[0], b[1], b[2]}, cav.vertices);
        const int quad_min = std::min({a[1], a[2], b[1], b[2]});
        if (quad_min == a[1] || quad_min == b[2]) {
          orient_and_append(tets, {a[0], a[1], a[2], b[2]}, cav.vertices);
          orient_and_append(tets, {a[0], a[1], b[2], b[1]}, cav.vertices);
        } else {
          orient_and_append(tets, {a[0], a[1], a[2], b[1]}, cav.vertices);
          orient_and_append(tets, {a[0], b[1], a[2], b[2]}, cav.vertices);
        }
      }
      const int k = layers - 1;
      orient_and_append(tets, {center, k * nv + s.faces()(f, 0), k * nv + s.faces()(f, 1), k * nv + s.faces()(f, 2)},
                        cav.vertices);
    }
  }

  cav.tets.resize(static_cast<Eigen::Index>(tets.size()), 4);
  for (size_t t = 0; t < tets.size(); ++t) cav.tets.row(t) << tets[t][0], tets[t][1], tets[t][2], tets[t][3];

  check_boundary(s, cav);
  cav.boundary_tet.assign(s.num_faces(), -1);
  {
    std::map<std::array<int, 3>, int> owner;
    for (Eigen::Index t = 0; t < cav.tets.rows(); ++t) {
      for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> k;
        int j = 0;
        for (int i = 0; i < 4; ++i)
          if (i != skip) k[j++] = cav.tets(t, i);
        std::sort(k.begin(), k.end());
        if (k[2] < nv) owner[k] = static_cast<int>(t);
      }
    }
    for (int f = 0; f < s.num_faces(); ++f) {
      std::array<int, 3> k{s.faces()(f, 0), s.faces()(f, 1), s.faces()(f, 2)};
      std::sort(k.begin(), k.end());
      cav.boundary_tet[f] = owner.at(k);
    }
  }
  const double rel = std::abs(cavity_volume_mm3(cav) - signed_volume_mm3(s.vertices(), s.faces())) /
                     signed_volume_mm3(s.vertices(), s.faces());
  if (rel > 1e-9) throw GeometryError("tetrahedralization does not conserve volume");
  return cav;
}

std::vector<ScalarField> laplace_extend(const TetCavity& cav, const std::vector<ScalarField>& boundary,
                                        double* max_residual) {
  const int n = static_cast<int>(cav.vertices.rows());
  const int nb = cav.num_surface_vertices;
  for (const auto& b : boundary) {
    if (b.size() != nb) throw TopologyError("boundary field size does not match the surface");
  }
  const int nfree = n - nb;
  std::vector<ScalarField> out;
  for (const auto& b : boundary) {
    ScalarField u = ScalarField::Zero(n);
    u.head(nb) = b;
    out.push_back(std::move(u));
  }
  if (max_residual) *max_residual = 0.0;
  if (nfree == 0) return out;

  // P1 stiffness K_ij = V grad(phi_i) . grad(phi_j), split into free/fixed blocks.
  std::vector<Eigen::Triplet<double>> free_trip, fixed_trip;
  for (Eigen::Index t = 0; t < cav.tets.rows(); ++t) {
    Eigen::Matrix<double, 4, 3> p;
    for (int i = 0; i < 4; ++i) p.row(i) = cav.vertices.row(cav.tets(t, i));
    Mat3 j;
    j.col(0) = (p.row(1) - p.row(0)).transpose();
    j.col(1) = (p.row(2) - p.row(0)).transpose();
    j.col(2) = (p.row(3) - p.row(0)).transpose();
    const double vol = j.determinant() / 6.0;
    const Mat3 jinv_t = j.inverse().transpose();
    Eigen::Matrix<double, 4, 3> g;
    g.bottomRows<3>() = jinv_t.transpose();
    g.row(0) = -g.bottomRows<3>().colwise().sum();
    const Eigen::Matrix4d ke = vol * g * g.transpose();
    for (int a = 0; a < 4; ++a) {
      const int r = cav.tets(t, a);
      if (r < nb) continue;
      for (int b = 0; b < 4; ++b) {
        const int c = cav.tets(t, b);
        if (c >= nb) {
          free_trip.emplace_back(r - nb, c - nb, ke(a, b));
        } else {
          fixed_trip.emplace_back(r - nb, c, ke(a, b));
        }
      }
    }
  }
  SparseMatrix a(nfree, nfree), k_fixed(nfree, nb);
  a.setFromTriplets(free_trip.begin(), free_trip.end());
  k_fixed.setFromTriplets(fixed_trip.begin(), fixed_trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("volumetric Laplace system is singular");
  for (size_t i = 0; i < boundary.size(); ++i) {
    const ScalarField rhs = -(k_fixed * boundary[i]);
    const ScalarField x = ldlt.solve(rhs);
    if (!x.allFinite()) throw NumericalError("volumetric Laplace solve failed");
    const double denom = rhs.norm();
    const double res = denom > 0.0 ? (a * x - rhs).norm() / denom : 0.0;
    if (max_residual) *max_residual = std::max(*max_residual, res);
    if (res > 1e-10) throw NumericalError("volumetric Laplace residual too large");
    out[i].tail(nfree) = x;
  }
  return out;
}

ScalarField laplace_extend(const TetCavity& cav, const ScalarField& boundary) {
  return laplace_extend(cav, std::vector<ScalarField>{boundary}).front();
}

Region region_of(double dt, double dp, double da) {
  if (dt <= dp && dt <= da) return Region::inlet;
  if (dp < dt && dp <= da) return Region::outflow;
  return Region::apical;
}

namespace {

// A point carrying the three field values so that successive cuts can interpolate.
struct Node {
  Vec3 x;
  Vec3 d;  // (tricuspid, pulmonary, apex)
};

using Tet = std::array<Node, 4>;

Node lerp_zero(const Node& a, const Node& b, double fa, double fb) {
  const double t = fa / (fa - fb);
  return {a.x + t * (b.x - a.x), a.d + t * (b.d - a.d)};
}

void add_prism(std::vector<Tet>& out, const Node& p0, const Node& p1, const Node& p2, const Node& q0, const Node& q1,
               const Node& q2) {
  out.push_back({p0, p1, p2, q2});
  out.push_back({p0, p1, q1, q2});
  out.push_back({p0, q0, q1, q2});
}

// Splits a tet into the parts where phi <= 0 and phi > 0.
void split(const Tet& t, const std::array<double, 4>& phi, std::vector<Tet>& neg, std::vector<Tet>& pos) {
  std::array<int, 4> in{}, out{};
  int ni = 0, no = 0;
  for (int i = 0; i < 4; ++i) {
    if (phi[i] <= 0.0) in[ni++] = i;
    else out[no++] = i;
  }
  if (no == 0) {
    neg.push_back(t);
    return;
  }
  if (ni == 0) {
    pos.push_back(t);
    return;
  }
  auto cut = [&](int i, int j) { return lerp_zero(t[i], t[j], phi[i], phi[j]); };
  auto one_vs_three = [&](int a, std::array<int, 3> o, std::vector<Tet>& lone, std::vector<Tet>& rest) {
    const Node ab = cut(a, o[0]), ac = cut(a, o[1]), ad = cut(a, o[2]);
    lone.push_back({t[a], ab, ac, ad});
    add_prism(rest, t[o[0]], t[o[1]], t[o[2]], ab, ac, ad);
  };
  if (ni == 1) {
    one_vs_three(in[0], {out[0], out[1], out[2]}, neg, pos);
  } else if (no == 1) {
    one_vs_three(out[0], {in[0], in[1], in[2]}, pos, neg);
  } else {
    const int a = in[0], b = in[1], c = out[0], d = out[1];
    const Node ac = cut(a, c), ad = cut(a, d), bc = cut(b, c), bd = cut(b, d);
    add_prism(neg, t[a], ac, ad, t[b], bc, bd);
    add_prism(pos, t[c], ac, bc, t[d], ad, bd);
  }
}

double volume(const Tet& t) { return std::abs(tet_signed_volume(t[0].x, t[1].x, t[2].x, t[3].x)); }

}  // namespace

Parcellation parcellate(const TetCavity& cav, const RegionFields& f, bool keep_cut_mesh) {
  const Eigen::Index n = cav.vertices.rows();
  if (f.tricuspid.size() != n || f.pulmonary.size() != n || f.apex.size() != n) {
    throw TopologyError("volumetric fields do not match the cavity");
  }
  Parcellation p;
  std::vector<std::pair<Tet, Region>> cut_mesh;
  auto emit = [&](const Tet& t, Region r) {
    p.volume_ml[static_cast<int>(r)] += volume(t);
    if (keep_cut_mesh) cut_mesh.emplace_back(t, r);
  };
  auto phi = [](const Tet& t, auto&& fn) {
    return std::array<double, 4>{fn(t[0].d), fn(t[1].d), fn(t[2].d), fn(t[3].d)};
  };

  std::vector<Tet> t_side, p_side, parts_a, parts_b;
  for (Eigen::Index e = 0; e < cav.tets.rows(); ++e) {
    Tet t;
    for (int i = 0; i < 4; ++i) {
      const int v = cav.tets(e, i);
      t[i] = {cav.vertices.row(v).transpose(), Vec3(f.tricuspid(v), f.pulmonary(v), f.apex(v))};
    }
    const Region r0 = region_of(t[0].d(0), t[0].d(1), t[0].d(2));
    bool uniform = true;
    for (int i = 1; i < 4 && uniform; ++i) uniform = region_of(t[i].d(0), t[i].d(1), t[i].d(2)) == r0;
    if (uniform) {
      emit(t, r0);
      continue;
    }
    t_side.clear();
    p_side.clear();
    split(t, phi(t, [](const Vec3& d) { return d(0) - d(1); }), t_side, p_side);
    for (const Tet& s : t_side) {
      parts_a.clear();
      parts_b.clear();
      split(s, phi(s, [](const Vec3& d) { return d(0) - d(2); }), parts_a, parts_b);
      for (const Tet& x : parts_a) emit(x, Region::inlet);
      for (const Tet& x : parts_b) emit(x, Region::apical);
    }
    for (const Tet& s : p_side) {
      parts_a.clear();
      parts_b.clear();
      split(s, phi(s, [](const Vec3& d) { return d(1) - d(2); }), parts_a, parts_b);
      for (const Tet& x : parts_a) emit(x, Region::outflow);
      for (const Tet& x : parts_b) emit(x, Region::apical);
    }
  }
  for (double& v : p.volume_ml) v /= kMm3PerMl;
  p.total_ml = p.volume_ml[0] + p.volume_ml[1] + p.volume_ml[2];
  if (keep_cut_mesh) {
    p.sub_vertices.resize(4 * static_cast<Eigen::Index>(cut_mesh.size()), 3);
    for (size_t i = 0; i < cut_mesh.size(); ++i) {
      for (int k = 0; k < 4; ++k) p.sub_vertices.row(4 * i + k) = cut_mesh[i].first[k].x.transpose();
      p.sub_labels.push_back(cut_mesh[i].second);
    }
  }
  return p;
}

Midpoint tie_midpoint(const TriSurface& s, const RegionFields& f) {
  Midpoint best;
  best.max_gap = std::numeric_limits<double>::infinity();
  auto gap = [](const Vec3& d) {
    return std::max({std::abs(d(0) - d(1)), std::abs(d(0) - d(2)), std::abs(d(1) - d(2))});
  };
  auto consider = [&](int face, const Vec3& x, const Vec3& d) {
    const double g = gap(d);
    if (g < best.max_gap) best = {x, face, g};
  };
  for (int face = 0; face < s.num_faces(); ++face) {
    std::array<Vec3, 3> x, d;
    for (int k = 0; k < 3; ++k) {
      const int v = s.faces()(face, k);
      x[k] = s.vertex(v);
      d[k] = Vec3(f.tricuspid(v), f.pulmonary(v), f.apex(v));
    }
    // Three-way tie: barycentric (1 - b1 - b2, b1, b2) with d_t - d_p = 0 and d_t - d_a = 0.
    auto diffs = [](const Vec3& v) { return Vec2(v(0) - v(1), v(0) - v(2)); };
    Mat2 m;
    m.col(0) = diffs(d[1]) - diffs(d[0]);
    m.col(1) = diffs(d[2]) - diffs(d[0]);
    if (std::abs(m.determinant()) > 1e-14) {
      const Vec2 b = m.partialPivLu().solve(-diffs(d[0]));
      if (b.minCoeff() >= 0.0 && b.sum() <= 1.0) {
        const double b0 = 1.0 - b.sum();
        consider(face, b0 * x[0] + b(0) * x[1] + b(1) * x[2], b0 * d[0] + b(0) * d[1] + b(1) * d[2]);
        continue;
      }
    }
    // Otherwise the pairwise tie points on the face edges.
    for (int k = 0; k < 3; ++k) {
      const int k1 = (k + 1) % 3;
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const double fa = d[k](i) - d[k](j), fb = d[k1](i) - d[k1](j);
        if ((fa <= 0.0) == (fb <= 0.0) || fa == fb) continue;
        const double t = fa / (fa - fb);
        consider(face, x[k] + t * (x[k1] - x[k]), d[k] + t * (d[k1] - d[k]));
      }
    }
  }
  return best;
}

RegionFields geodesic_fields(const LandmarkDistances& d) {
  return {d.tricuspid.values, d.pulmonary.values, d.apex.values};
}

RegionFields harmonic_fields(const TriSurface& s, const LandmarkSet& lm) {
  lm.validate(s.num_vertices());
  auto solve = [&](Landmark source) {
    std::map<int, double> bc;
    for (Landmark l : {Landmark::apex, Landmark::tricuspid, Landmark::pulmonary}) {
      for (int v : lm[l]) bc[v] = l == source ? 0.0 : 1.0;
    }
    return cotan_laplace_solve(s, bc).u;
  };
  return {solve(Landmark::tricuspid), solve(Landmark::pulmonary), solve(Landmark::apex)};
}

ParcellationResult parcellate_with_fields(const TriSurface& s, const RegionFields& sf, const TetOptions& tet,
                                          bool keep_cut_mesh) {
  ParcellationResult r;
  r.surface_fields = sf;
  r.cavity = tetrahedralize(s, tet);
  const auto ext = laplace_extend(r.cavity, {sf.tricuspid, sf.pulmonary, sf.apex});
  r.parcellation = parcellate(r.cavity, {ext[0], ext[1], ext[2]}, keep_cut_mesh);
  r.midpoint = tie_midpoint(s, sf);
  return r;
}

ParcellationResult parcellate_surface(const TriSurface& s, const LandmarkSet& lm, const ParcellateOptions& opt) {
  const RegionFields sf = opt.kind == FieldKind::geodesic ? geodesic_fields(distance_to_set(s, lm, opt.sources))
                                                          : harmonic_fields(s, lm);
  return parcellate_with_fields(s, sf, opt.tet, opt.keep_cut_mesh);
}

ParcellationResult transport_labels(const CorrespondencePair& pair, const RegionFields& ed, const TetOptions& tet) {
  const int n = pair.ed().num_vertices();
  if (ed.tricuspid.size() != n || ed.pulmonary.size() != n || ed.apex.size() != n) {
    throw TopologyError("ED boundary fields do not match the surface");
  }
  return parcellate_with_fields(pair.es(), ed, tet);
}

RegionalReport regional_metrics(const Parcellation& ed, const Parcellation& es) {
  RegionalReport r;
  for (int i = 0; i < 3; ++i) {
    r.edv[i] = ed.volume_ml[i];
    r.esv[i] = es.volume_ml[i];
    if (!(r.edv[i] > 0.0)) throw GeometryError(std::string("end-diastolic volume is zero in region ") +
                                               to_string(static_cast<Region>(i)));
    r.ef[i] = (r.edv[i] - r.esv[i]) / r.edv[i];
  }
  r.edv_total = ed.total_ml;
  r.esv_total = es.total_ml;
  if (!(r.edv_total > 0.0)) throw GeometryError("end-diastolic volume is zero");
  r.ef_total = (r.edv_total - r.esv_total) / r.edv_total;
  return r;
}

}  // namespace rvparc
