#pragma once

#include "rvparc/common.hpp"

namespace rvparc {

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  PointMatrix apply(const PointMatrix& p) const {
    return (p * rotation.transpose()).rowwise() + translation.transpose();
  }
};

// Least-squares rotation + translation taking `moving` onto `fixed` (Kabsch).
RigidTransform kabsch(const PointMatrix& moving, const PointMatrix& fixed);

// Root-mean-square vertex distance after rigid alignment of `moving` onto `fixed`.
double aligned_rmsd(const PointMatrix& moving, const PointMatrix& fixed);

}  // namespace rvparc
