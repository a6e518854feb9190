#include "rvparc/shapes.hpp"

#include <cmath>
#include <map>

namespace rvparc::shapes {

namespace {

TriSurface from_lists(const std::vector<Vec3>& v, const std::vector<std::array<int, 3>>& f, Closure c) {
  PointMatrix pts(v.size(), 3);
  for (size_t i = 0; i < v.size(); ++i) pts.row(i) = v[i].transpose();
  FaceMatrix faces(f.size(), 3);
  for (size_t i = 0; i < f.size(); ++i) faces.row(i) << f[i][0], f[i][1], f[i][2];
  return TriSurface::build(std::move(pts), std::move(faces), c);
}

}  // namespace

TriSurface octahedron(double r) {
  std::vector<Vec3> v{{r, 0, 0}, {-r, 0, 0}, {0, r, 0}, {0, -r, 0}, {0, 0, r}, {0, 0, -r}};
  std::vector<std::array<int, 3>> f{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                    {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return from_lists(v, f, Closure::required);
}

TriSurface regular_tetrahedron(double edge) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  std::vector<Vec3> v{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  std::vector<std::array<int, 3>> f{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return from_lists(v, f, Closure::required);
}

TriSurface box(const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  }
  std::vector<std::array<int, 3>> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return from_lists(v, f, Closure::required);
}

TriSurface icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                    {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * f.size());
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p *= radius;
  return from_lists(v, f, Closure::required);
}

TriSurface planar_grid(int nx, int ny, double w, double h) {
  std::vector<Vec3> v;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.emplace_back(w * i / nx, h * j / ny, 0.0);
  std::vector<std::array<int, 3>> f;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return from_lists(v, f, Closure::optional);
}

TriSurface equilateral_patch(int rows, int cols, double edge) {
  const double hgt = edge * std::sqrt(3.0) / 2.0;
  std::vector<Vec3> v;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) v.emplace_back(edge * (i + 0.5 * (j % 2)), hgt * j, 0.0);
  std::vector<std::array<int, 3>> f;
  auto id = [&](int i, int j) { return j * cols + i; };
  for (int j = 0; j + 1 < rows; ++j) {
    for (int i = 0; i + 1 < cols; ++i) {
      if (j % 2 == 0) {
        f.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
        f.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      } else {
        f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      }
    }
  }
  return from_lists(v, f, Closure::optional);
}

TriSurface tube(double radius, double height, int segments, int rings) {
  std::vector<Vec3> v;
  for (int k = 0; k < rings; ++k) {
    const double z = height * k / (rings - 1);
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * kPi * i / segments;
      v.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
    }
  }
  std::vector<std::array<int, 3>> f;
  auto id = [&](int i, int k) { return k * segments + (i % segments); };
  for (int k = 0; k + 1 < rings; ++k) {
    for (int i = 0; i < segments; ++i) {
      f.push_back({id(i, k), id(i + 1, k), id(i + 1, k + 1)});
      f.push_back({id(i, k), id(i + 1, k + 1), id(i, k + 1)});
    }
  }
  return from_lists(v, f, Closure::optional);
}

}  // namespace rvparc::shapes
