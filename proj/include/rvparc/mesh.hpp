#pragma once

#include "rvparc/common.hpp"

#include <memory>
#include <vector>

namespace rvparc {

// Edge/halfedge connectivity shared by every surface built on the same face list.
//
// Halfedge h = 3*f + k runs from corner k to corner (k+1)%3 of face f, so the
// face lies on its left. Undirected edges are stored with lo < hi.
struct Topology {
  int num_vertices = 0;
  std::vector<std::array<int, 2>> edges;       // (lo, hi)
  std::vector<std::array<int, 2>> edge_faces;  // face with lo->hi, face with hi->lo (-1 if boundary)
  std::vector<int> halfedge_edge;              // halfedge -> undirected edge
  std::vector<int> twin;                       // halfedge -> opposite halfedge, -1 on boundary
  std::vector<int> vertex_halfedge;            // one outgoing halfedge per vertex
  std::vector<std::vector<int>> vertex_faces;
  std::vector<std::vector<int>> vertex_neighbors;
  std::vector<char> boundary_vertex;

  int num_edges() const { return static_cast<int>(edges.size()); }
  bool closed() const;

  static int face_of(int h) { return h / 3; }
  static int next(int h) { return 3 * (h / 3) + (h % 3 + 1) % 3; }
  static int prev(int h) { return 3 * (h / 3) + (h % 3 + 2) % 3; }
};

enum class Closure { required, optional };

// Immutable oriented manifold triangle mesh (coordinates in mm).
//
// With Closure::required the surface must be watertight; a globally inverted
// surface is flipped so that normals point outward. Open surfaces are accepted
// only when explicitly requested (planar patches and tubes used by the
// geodesic and Laplace operators).
class TriSurface {
 public:
  TriSurface() = default;

  static TriSurface build(PointMatrix vertices, FaceMatrix faces, Closure closure = Closure::required);

  // Reuses connectivity already validated for `faces`; no orientation repair.
  static TriSurface with_topology(PointMatrix vertices, FaceMatrix faces, std::shared_ptr<const Topology> topology);

  // Same connectivity, new coordinates. Degenerate faces are still rejected,
  // but orientation is not repaired: correspondence must be preserved.
  TriSurface with_vertices(PointMatrix vertices) const;

  const PointMatrix& vertices() const { return vertices_; }
  const FaceMatrix& faces() const { return faces_; }
  const Topology& topology() const { return *topology_; }
  std::shared_ptr<const Topology> shared_topology() const { return topology_; }
  const PointMatrix& face_normals() const { return normals_; }
  const Eigen::VectorXd& face_areas() const { return areas_; }

  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_faces() const { return static_cast<int>(faces_.rows()); }
  bool closed() const { return topology_->closed(); }
  bool orientation_repaired() const { return repaired_; }

  Vec3 vertex(int i) const { return vertices_.row(i).transpose(); }
  Vec3 corner(int f, int k) const { return vertices_.row(faces_(f, k)).transpose(); }
  double edge_length(int e) const;

 private:
  void compute_geometry();

  PointMatrix vertices_;
  FaceMatrix faces_;
  std::shared_ptr<const Topology> topology_;
  PointMatrix normals_;
  Eigen::VectorXd areas_;
  bool repaired_ = false;
};

std::shared_ptr<const Topology> build_topology(const FaceMatrix& faces, int num_vertices, Closure closure);

// Divergence-theorem volume in ml (positive for outward orientation).
double signed_volume(const TriSurface& s);
double signed_volume_mm3(const PointMatrix& vertices, const FaceMatrix& faces);

Vec3 vertex_centroid(const TriSurface& s);
double bounding_box_diagonal(const PointMatrix& points);
double mean_edge_length(const TriSurface& s);

// Interior angle sums per vertex (2*pi on flat interior vertices).
Eigen::VectorXd vertex_angle_sums(const TriSurface& s);

struct LandmarkSet {
  std::vector<int> apex;
  std::vector<int> tricuspid;
  std::vector<int> pulmonary;

  const std::vector<int>& operator[](Landmark l) const;
  std::vector<int> valves() const;

  // Throws TopologyError on empty, overlapping, or out-of-range sets.
  void validate(int num_vertices) const;
};

// ED/ES surfaces with vertex-wise correspondence.
class CorrespondencePair {
 public:
  CorrespondencePair(TriSurface ed, TriSurface es);

  const TriSurface& ed() const { return ed_; }
  const TriSurface& es() const { return es_; }

 private:
  TriSurface ed_;
  TriSurface es_;
};

bool same_topology(const TriSurface& a, const TriSurface& b);

}  // namespace rvparc
