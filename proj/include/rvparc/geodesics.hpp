#pragma once

#include "rvparc/mesh.hpp"

#include <optional>
#include <span>

namespace rvparc {

struct DistanceField {
  ScalarField values;  // per vertex, mm
  std::optional<Landmark> source;
};

struct GeodesicStats {
  long windows_created = 0;
  long windows_propagated = 0;
  long windows_trimmed = 0;
  long pseudo_sources = 0;
};

// Exact polyhedral geodesic distance from a vertex set, by window propagation
// across faces. Windows sharing an edge are trimmed pairwise so that each
// point of an edge keeps only the window giving the shortest distance.
DistanceField exact_geodesic(const TriSurface& s, std::span<const int> sources, GeodesicStats* stats = nullptr);

// Shortest paths restricted to mesh edges; an upper bound on exact_geodesic.
DistanceField dijkstra_oracle(const TriSurface& s, std::span<const int> sources);

// Which vertices of a landmark patch act as sources.
enum class LandmarkSources {
  all,  // every listed vertex
  rim   // only listed vertices adjacent to an unlisted vertex (annulus)
};

struct LandmarkDistances {
  DistanceField apex, tricuspid, pulmonary;

  const DistanceField& operator[](Landmark l) const;
  // Pointwise min(d_t, d_p).
  ScalarField valves() const;
};

LandmarkDistances distance_to_set(const TriSurface& s, const LandmarkSet& lm,
                                  LandmarkSources mode = LandmarkSources::all, bool parallel = true);

std::vector<int> landmark_rim(const TriSurface& s, const std::vector<int>& patch);

}  // namespace rvparc
