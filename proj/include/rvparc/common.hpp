#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>

namespace rvparc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Row-per-element storage, the layout most mesh code in this domain uses.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using TetMatrix = Eigen::Matrix<int, Eigen::Dynamic, 4, Eigen::RowMajor>;
using ScalarField = Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kMm3PerMl = 1000.0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-manifold, open, inconsistently oriented, or mismatched connectivity.
class TopologyError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class Landmark { apex, tricuspid, pulmonary };

// Parcellation regions. The enum order is the tie-break priority.
enum class Region { inlet = 0, outflow = 1, apical = 2 };

constexpr std::array<Region, 3> kRegions{Region::inlet, Region::outflow, Region::apical};

inline const char* to_string(Region r) {
  switch (r) {
    case Region::inlet: return "inlet";
    case Region::outflow: return "outflow";
    case Region::apical: return "apical";
  }
  return "?";
}

inline const char* to_string(Landmark l) {
  switch (l) {
    case Landmark::apex: return "apex";
    case Landmark::tricuspid: return "tricuspid";
    case Landmark::pulmonary: return "pulmonary";
  }
  return "?";
}

// Skew-symmetric cross-product matrix [v]_x.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> hat(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, 3, 3> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
       -v(1), v(0), S(0);
  return m;
}

}  // namespace rvparc
