#include "rvparc/alignment.hpp"

#include <Eigen/SVD>

namespace rvparc {

RigidTransform kabsch(const PointMatrix& moving, const PointMatrix& fixed) {
  if (moving.rows() != fixed.rows() || moving.rows() == 0) throw TopologyError("point sets differ in size");
  const Eigen::RowVector3d cm = moving.colwise().mean(), cf = fixed.colwise().mean();
  const Mat3 h = (moving.rowwise() - cm).transpose() * (fixed.rowwise() - cf);
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = cf.transpose() - t.rotation * cm.transpose();
  return t;
}

double aligned_rmsd(const PointMatrix& moving, const PointMatrix& fixed) {
  const PointMatrix aligned = kabsch(moving, fixed).apply(moving);
  return std::sqrt((aligned - fixed).rowwise().squaredNorm().mean());
}

}  // namespace rvparc
