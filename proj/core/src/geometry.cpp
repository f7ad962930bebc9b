#include "gtkit/geometry.hpp"

#include <cmath>

namespace gt {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateSvd: return "DegenerateSvd";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::ParallelVectors: return "ParallelVectors";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::FlatSignal: return "FlatSignal";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NonMonotonicResult: return "NonMonotonicResult";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DisconnectedMarker: return "DisconnectedMarker";
    case ErrorCode::NoKnownMarkers: return "NoKnownMarkers";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TauOutOfRange: return "TauOutOfRange";
  }
  return "UnknownError";
}

UnitVec3::UnitVec3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !v.allFinite()) {
    throw Error(ErrorCode::DegenerateBaseline, "cannot normalize zero or non-finite vector");
  }
  v_ = v / n;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_so3(const TangentVector& omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  double a;  // sin(theta)/theta
  double b;  // (1 - cos(theta))/theta^2
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

TangentVector log_so3(const Mat3& rotation) {
  // Eigen's matrix-to-quaternion conversion branches on the largest of the
  // trace and the diagonal entries, which keeps the axis stable near theta = pi.
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const Vec3 v = q.vec();
  const double vn = v.norm();
  if (vn < 1e-12) {
    return 2.0 * v;  // sin(theta/2) ~ theta/2
  }
  const double angle = 2.0 * std::atan2(vn, q.w());  // in [0, pi]
  return (angle / vn) * v;
}

Mat3 project_to_so3(const Mat3& m, double tol) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < tol) {
    throw Error(ErrorCode::DegenerateSvd, "input matrix is numerically singular");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const double d = u.determinant() * v.determinant();
  return u * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, d) * v.transpose();
}

bool is_rotation(const Mat3& m, double tol) {
  const Mat3 err = m.transpose() * m - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

double geodesic_distance(const Mat3& a, const Mat3& b) {
  return log_so3(a.transpose() * b).norm();
}

Vec3 compose_position(const Vec3& p_w_g2, const Mat3& r_w_vg, const Mat3& r_vg_imu,
                      const Vec3& p_imu_g2) {
  return p_w_g2 + r_w_vg * (r_vg_imu * (-p_imu_g2));
}

Eigen::Vector4d quat_from_rotation(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 rotation_from_quat(const Eigen::Vector4d& wxyz) {
  Eigen::Quaterniond q(wxyz(0), wxyz(1), wxyz(2), wxyz(3));
  if (q.norm() <= 0.0) {
    throw Error(ErrorCode::ParseError, "zero-norm quaternion");
  }
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace gt
