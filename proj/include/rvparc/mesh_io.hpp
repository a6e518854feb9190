#pragma once

#include "rvparc/mesh.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace rvparc {

enum class MeshFormat { obj, vtk, ucd };

// .obj, .vtk, .inp/.ucd
MeshFormat format_from_path(const std::filesystem::path& path);

// Named attributes attached to a surface. Vectors are stored one row per element.
struct MeshFields {
  std::map<std::string, ScalarField> point_scalars;
  std::map<std::string, ScalarField> cell_scalars;
  std::map<std::string, PointMatrix> point_vectors;
  std::map<std::string, PointMatrix> cell_vectors;

  bool empty() const {
    return point_scalars.empty() && cell_scalars.empty() && point_vectors.empty() && cell_vectors.empty();
  }
};

struct LoadedSurface {
  TriSurface surface;
  MeshFields fields;
  // First node id found in an AVS-UCD file (0 or 1); -1 for other formats.
  int ucd_index_base = -1;
};

LoadedSurface load_surface_with_fields(const std::filesystem::path& path, MeshFormat format);
TriSurface load_surface(const std::filesystem::path& path, MeshFormat format);
inline TriSurface load_surface(const std::filesystem::path& path) { return load_surface(path, format_from_path(path)); }

// OBJ carries geometry only; fields are ignored for it.
void save_surface(const TriSurface& s, const std::filesystem::path& path, MeshFormat format,
                  const MeshFields& fields = {});
inline void save_surface(const TriSurface& s, const std::filesystem::path& path, const MeshFields& fields = {}) {
  save_surface(s, path, format_from_path(path), fields);
}

// {"apex":[...], "tricuspid":[...], "pulmonary":[...]}, 0-based vertex ids.
LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSet& lm, const std::filesystem::path& path);

}  // namespace rvparc
