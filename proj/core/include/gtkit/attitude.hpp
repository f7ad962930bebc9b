#pragma once

#include <optional>

#include "gtkit/geometry.hpp"
#include "gtkit/magcal.hpp"

namespace gt::attitude {

// Antenna lever arms in the IMU frame plus the virtual-GNSS-to-IMU rotation.
struct AntennaCalibration {
  Vec3 p_imu_g1 = Vec3::Zero();  // m
  Vec3 p_imu_g2 = Vec3::Zero();  // m
  Mat3 r_vg_imu = Mat3::Identity();

  double baseline() const { return (p_imu_g1 - p_imu_g2).norm(); }
};

// Local magnetic field direction model. Declination positive east,
// inclination positive down.
struct WorldMagneticModel {
  double declination = 0.0;       // rad
  double inclination = 0.0;       // rad
  double field_strength_nt = 0.0; // nT, informational
};

// Normalized vector pair (g, m) and orthogonal complement c = g x m, all in
// one frame. c makes the linear rotation system full rank.
struct DirectionalTriad {
  UnitVec3 g;
  UnitVec3 m;
  UnitVec3 c;

  static DirectionalTriad from_gm(const Vec3& g, const Vec3& m, double parallel_tol = 1e-6);

  Mat3 as_columns() const {
    Mat3 out;
    out.col(0) = g.vec();
    out.col(1) = m.vec();
    out.col(2) = c.vec();
    return out;
  }
};

enum class Method { LinearLs, TangentGn, WahbaSvd };

struct RotationEstimate {
  Mat3 rotation = Mat3::Identity();
  Method method = Method::WahbaSvd;
  double residual = 0.0;
  int iterations = 0;  // tangent method only
};

// Field direction in ENU: (sin D cos I, cos D cos I, -sin I).
UnitVec3 world_mag_vector(const WorldMagneticModel& model);

DirectionalTriad build_world_triad(const Vec3& p_w_g1, const Vec3& p_w_g2, const UnitVec3& m_w,
                                   double min_baseline = 0.1);

DirectionalTriad build_body_triad(const AntennaCalibration& cal, const Vec3& m_raw,
                                  const magcal::EllipsoidCalibration& mag_cal,
                                  const Mat3& r_imu_mag);

// Direct least squares over the nine entries of R, then projection onto SO(3).
RotationEstimate solve_rotation_linear(const DirectionalTriad& world, const DirectionalTriad& body);

// Gauss-Newton on the tangent space with the analytic Jacobian; the iterate is
// a rotation by construction. Without an initial guess the Wahba solution
// seeds the iteration.
RotationEstimate solve_rotation_tangent(const DirectionalTriad& world, const DirectionalTriad& body,
                                        std::optional<TangentVector> init = std::nullopt,
                                        double step_tol = 1e-12, int max_iterations = 50);

// Closed-form SVD solution with weights (alpha, 1, 1) on (g, m, c).
RotationEstimate solve_rotation_wahba(const DirectionalTriad& world, const DirectionalTriad& body,
                                      double alpha = 50.0);

// General weight layout, used by the alpha overload and by weight-scaling checks.
RotationEstimate solve_rotation_wahba_weighted(const DirectionalTriad& world,
                                               const DirectionalTriad& body, const Vec3& weights);

// Residual of stacked (g, m, c) world vectors against rotated body vectors.
double triad_residual(const DirectionalTriad& world, const DirectionalTriad& body, const Mat3& r);

struct EpochEstimate {
  Timestamped<Pose> pose;
  RotationEstimate rotation;
};

// One GNSS epoch to one 6-DoF pose: rotation from the selected solver,
// position composed from the G2 measurement and the lever arm.
EpochEstimate estimate_pose_epoch(const Timestamped<Vec3>& g1, const Timestamped<Vec3>& g2,
                                  const Vec3& mag_raw, const AntennaCalibration& cal,
                                  const magcal::EllipsoidCalibration& mag_cal,
                                  const Mat3& r_imu_mag, const WorldMagneticModel& wmm,
                                  Method method, double alpha = 50.0, double min_baseline = 0.1);

// Worst-case rotational error from per-antenna accuracy eta and baseline B:
// atan(2 eta / B).
double worst_case_heading_error(double eta_m, double baseline_m);

}  // namespace gt::attitude
