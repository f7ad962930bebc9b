#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gtkit/errors.hpp"

namespace gt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Axis-angle coordinates of an SO(3) element, |omega| <= pi after log_so3.
using TangentVector = Vec3;

inline constexpr double kUnitNormTol = 1e-12;
inline constexpr double kRotationTol = 1e-9;
inline constexpr double kSvdDegeneracyTol = 1e-12;

// Direction with unit norm enforced at construction.
class UnitVec3 {
 public:
  explicit UnitVec3(const Vec3& v);

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

 private:
  Vec3 v_;
};

template <typename T>
struct Timestamped {
  double t = 0.0;  // seconds since epoch
  T value{};
};

template <typename T>
using TimeSeries = std::vector<Timestamped<T>>;

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Pose compose(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// [v]x such that skew(v) * w == v x w.
Mat3 skew(const Vec3& v);

// Rodrigues formula, exact for all finite omega.
Mat3 exp_so3(const TangentVector& omega);

// Inverse of exp_so3 with |result| <= pi. The theta ~ pi branch extracts the
// axis from the largest diagonal element to avoid cancellation.
TangentVector log_so3(const Mat3& rotation);

// Nearest rotation in Frobenius norm: U diag(1, 1, det(U)det(V)) V^T.
// Throws DegenerateSvd when the smallest singular value is below tol.
Mat3 project_to_so3(const Mat3& m, double tol = kSvdDegeneracyTol);

bool is_rotation(const Mat3& m, double tol = kRotationTol);

// Angle of the relative rotation, |log(a^T b)|.
double geodesic_distance(const Mat3& a, const Mat3& b);

// IMU position in world frame with GNSS antenna G2 as the virtual-frame origin:
// p_WI = p_W_G2 + R_W_VG * R_VG_I * (-p_I_G2).
Vec3 compose_position(const Vec3& p_w_g2, const Mat3& r_w_vg, const Mat3& r_vg_imu,
                      const Vec3& p_imu_g2);

// Quaternion as (w, x, y, z) with w >= 0 canonical sign. Used for file I/O.
Eigen::Vector4d quat_from_rotation(const Mat3& rotation);
Mat3 rotation_from_quat(const Eigen::Vector4d& wxyz);

}  // namespace gt
