#include "rvparc/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace rvparc {

namespace {

constexpr double kMinFaceArea = 1e-12;

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

}  // namespace

bool Topology::closed() const {
  return std::none_of(twin.begin(), twin.end(), [](int t) { return t < 0; });
}

std::shared_ptr<const Topology> build_topology(const FaceMatrix& faces, int num_vertices, Closure closure) {
  auto topo = std::make_shared<Topology>();
  const int nf = static_cast<int>(faces.rows());
  topo->num_vertices = num_vertices;
  topo->halfedge_edge.assign(3 * nf, -1);
  topo->twin.assign(3 * nf, -1);
  topo->vertex_halfedge.assign(num_vertices, -1);
  topo->vertex_faces.assign(num_vertices, {});
  topo->boundary_vertex.assign(num_vertices, 0);

  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int v = faces(f, k);
      if (v < 0 || v >= num_vertices) {
        throw TopologyError("face " + std::to_string(f) + " references invalid vertex " + std::to_string(v));
      }
    }
    if (faces(f, 0) == faces(f, 1) || faces(f, 1) == faces(f, 2) || faces(f, 0) == faces(f, 2)) {
      throw TopologyError("face " + std::to_string(f) + " repeats a vertex");
    }
  }

  // Group halfedges by undirected edge.
  std::map<std::uint64_t, std::vector<int>> groups;
  for (int h = 0; h < 3 * nf; ++h) {
    const int f = h / 3, k = h % 3;
    groups[edge_key(faces(f, k), faces(f, (k + 1) % 3))].push_back(h);
  }

  topo->edges.reserve(groups.size());
  topo->edge_faces.reserve(groups.size());
  for (const auto& [key, hs] : groups) {
    const int lo = static_cast<int>(key >> 32);
    const int hi = static_cast<int>(key & 0xffffffffu);
    if (hs.size() > 2) {
      throw TopologyError("non-manifold edge (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
    }
    std::array<int, 2> ef{-1, -1};
    for (int h : hs) {
      const int from = faces(h / 3, h % 3);
      const int slot = (from == lo) ? 0 : 1;
      if (ef[slot] >= 0) {
        throw TopologyError("inconsistent orientation at edge (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
      }
      ef[slot] = h;
    }
    if (hs.size() == 1 && closure == Closure::required) {
      throw TopologyError("surface is not watertight: boundary edge (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ")");
    }
    const int e = static_cast<int>(topo->edges.size());
    topo->edges.push_back({lo, hi});
    topo->edge_faces.push_back({ef[0] >= 0 ? ef[0] / 3 : -1, ef[1] >= 0 ? ef[1] / 3 : -1});
    for (int h : hs) topo->halfedge_edge[h] = e;
    if (hs.size() == 2) {
      topo->twin[hs[0]] = hs[1];
      topo->twin[hs[1]] = hs[0];
    } else {
      topo->boundary_vertex[lo] = 1;
      topo->boundary_vertex[hi] = 1;
    }
  }

  for (int h = 0; h < 3 * nf; ++h) {
    const int f = h / 3, k = h % 3;
    const int v = faces(f, k);
    topo->vertex_faces[v].push_back(f);
    // Prefer the outgoing boundary halfedge so that fan traversal starts at the rim.
    if (topo->vertex_halfedge[v] < 0 || topo->twin[h] < 0) topo->vertex_halfedge[v] = h;
  }

  topo->vertex_neighbors.assign(num_vertices, {});
  for (int v = 0; v < num_vertices; ++v) {
    if (topo->vertex_faces[v].empty()) {
      throw TopologyError("vertex " + std::to_string(v) + " is not referenced by any face");
    }
    // Walk the umbrella; a single fan must reach every incident face.
    int count = 0;
    const int start = topo->vertex_halfedge[v];
    int h = start;
    std::set<int> nbrs;
    do {
      ++count;
      nbrs.insert(faces(h / 3, (h % 3 + 1) % 3));
      nbrs.insert(faces(h / 3, (h % 3 + 2) % 3));
      const int t = topo->twin[Topology::prev(h)];
      if (t < 0) break;
      h = t;
    } while (h != start && count <= static_cast<int>(topo->vertex_faces[v].size()));
    if (count != static_cast<int>(topo->vertex_faces[v].size())) {
      throw TopologyError("non-manifold vertex " + std::to_string(v));
    }
    topo->vertex_neighbors[v].assign(nbrs.begin(), nbrs.end());
  }
  return topo;
}

TriSurface TriSurface::build(PointMatrix vertices, FaceMatrix faces, Closure closure) {
  TriSurface s;
  s.vertices_ = std::move(vertices);
  s.faces_ = std::move(faces);
  s.topology_ = build_topology(s.faces_, static_cast<int>(s.vertices_.rows()), closure);
  if (s.topology_->closed() && signed_volume_mm3(s.vertices_, s.faces_) < 0.0) {
    s.faces_.col(1).swap(s.faces_.col(2));
    s.topology_ = build_topology(s.faces_, static_cast<int>(s.vertices_.rows()), closure);
    s.repaired_ = true;
  }
  s.compute_geometry();
  return s;
}

TriSurface TriSurface::with_topology(PointMatrix vertices, FaceMatrix faces, std::shared_ptr<const Topology> topology) {
  if (!topology || topology->num_vertices != vertices.rows() ||
      static_cast<Eigen::Index>(topology->halfedge_edge.size()) != 3 * faces.rows()) {
    throw TopologyError("topology does not match the vertex and face counts");
  }
  TriSurface s;
  s.vertices_ = std::move(vertices);
  s.faces_ = std::move(faces);
  s.topology_ = std::move(topology);
  s.compute_geometry();
  return s;
}

TriSurface TriSurface::with_vertices(PointMatrix vertices) const {
  if (vertices.rows() != vertices_.rows()) {
    throw TopologyError("vertex count mismatch when replacing coordinates");
  }
  TriSurface s = *this;
  s.vertices_ = std::move(vertices);
  s.repaired_ = false;
  s.compute_geometry();
  return s;
}

void TriSurface::compute_geometry() {
  const int nf = num_faces();
  normals_.resize(nf, 3);
  areas_.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const Vec3 n = (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
    const double twice_area = n.norm();
    if (!(0.5 * twice_area > kMinFaceArea)) {
      throw GeometryError("degenerate face " + std::to_string(f));
    }
    areas_(f) = 0.5 * twice_area;
    normals_.row(f) = (n / twice_area).transpose();
  }
}

double TriSurface::edge_length(int e) const {
  const auto& ed = topology_->edges[e];
  return (vertex(ed[0]) - vertex(ed[1])).norm();
}

double signed_volume_mm3(const PointMatrix& vertices, const FaceMatrix& faces) {
  double vol = 0.0;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const Vec3 a = vertices.row(faces(f, 0)).transpose();
    const Vec3 b = vertices.row(faces(f, 1)).transpose();
    const Vec3 c = vertices.row(faces(f, 2)).transpose();
    vol += a.dot(b.cross(c));
  }
  return vol / 6.0;
}

double signed_volume(const TriSurface& s) {
  if (!s.closed()) throw TopologyError("signed volume requires a closed surface");
  return signed_volume_mm3(s.vertices(), s.faces()) / kMm3PerMl;
}

Vec3 vertex_centroid(const TriSurface& s) { return s.vertices().colwise().mean().transpose(); }

double bounding_box_diagonal(const PointMatrix& points) {
  if (points.rows() == 0) return 0.0;
  return (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
}

double mean_edge_length(const TriSurface& s) {
  double sum = 0.0;
  for (int e = 0; e < s.topology().num_edges(); ++e) sum += s.edge_length(e);
  return sum / s.topology().num_edges();
}

Eigen::VectorXd vertex_angle_sums(const TriSurface& s) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(s.num_vertices());
  for (int f = 0; f < s.num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 a = s.corner(f, (k + 1) % 3) - s.corner(f, k);
      const Vec3 b = s.corner(f, (k + 2) % 3) - s.corner(f, k);
      sums(s.faces()(f, k)) += std::atan2(a.cross(b).norm(), a.dot(b));
    }
  }
  return sums;
}

const std::vector<int>& LandmarkSet::operator[](Landmark l) const {
  switch (l) {
    case Landmark::apex: return apex;
    case Landmark::tricuspid: return tricuspid;
    case Landmark::pulmonary: return pulmonary;
  }
  return apex;
}

std::vector<int> LandmarkSet::valves() const {
  std::vector<int> v = tricuspid;
  v.insert(v.end(), pulmonary.begin(), pulmonary.end());
  return v;
}

void LandmarkSet::validate(int num_vertices) const {
  std::set<int> seen;
  for (Landmark l : {Landmark::apex, Landmark::tricuspid, Landmark::pulmonary}) {
    const auto& ids = (*this)[l];
    if (ids.empty()) throw TopologyError(std::string("landmark set '") + to_string(l) + "' is empty");
    std::set<int> own;
    for (int i : ids) {
      if (i < 0 || i >= num_vertices) {
        throw TopologyError(std::string("landmark '") + to_string(l) + "' has invalid vertex " + std::to_string(i));
      }
      own.insert(i);
    }
    for (int i : own) {
      if (!seen.insert(i).second) {
        throw TopologyError("landmark sets overlap at vertex " + std::to_string(i));
      }
    }
  }
}

bool same_topology(const TriSurface& a, const TriSurface& b) {
  return a.num_vertices() == b.num_vertices() && a.faces().rows() == b.faces().rows() && a.faces() == b.faces();
}

CorrespondencePair::CorrespondencePair(TriSurface ed, TriSurface es) : ed_(std::move(ed)), es_(std::move(es)) {
  if (!same_topology(ed_, es_)) throw TopologyError("topology mismatch between ED and ES surfaces");
}

}  // namespace rvparc
