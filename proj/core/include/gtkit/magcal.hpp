#pragma once

#include <vector>

#include "gtkit/geometry.hpp"

namespace gt::magcal {

// Hard-iron offset and sphere-restoring soft-iron transform:
// m_corr = t_sp * (m_raw - b_ct). t_sp is canonicalized symmetric positive
// definite so the ellipsoid fit's rotation ambiguity lands in the extrinsics.
struct EllipsoidCalibration {
  Vec3 b_ct = Vec3::Zero();
  Mat3 t_sp = Mat3::Identity();
};

// Per static pose: mean gravity direction in the IMU frame (down) and mean
// intrinsically corrected field direction in the magnetometer frame.
struct StaticOrientation {
  UnitVec3 gravity_imu;
  UnitVec3 mag_field;
};

struct StaticOrientationSet {
  std::vector<StaticOrientation> poses;
};

struct MagExtrinsics {
  Mat3 r_imu_mag = Mat3::Identity();
  double inclination = 0.0;  // rad, positive down, |I| <= pi/2
  double residual = 0.0;
  int iterations = 0;
};

struct FitOptions {
  std::size_t min_samples = 10;
  // Smallest eigenvalue of the second moment of centered sample directions;
  // near-planar or great-circle data drives this to zero.
  double min_coverage = 0.02;
};

// Algebraic least-squares quadric fit constrained to ellipsoids.
// b_ct = -Q^-1 q; t_sp = sqrt(Q/s) scaled to unit RMS corrected norm.
EllipsoidCalibration fit_ellipsoid(const std::vector<Vec3>& samples, const FitOptions& opts = {});

Vec3 correct_sample(const Vec3& m_raw, const EllipsoidCalibration& cal);

struct ExtrinsicOptions {
  double step_tol = 1e-12;
  int max_iterations = 100;
  // Condition-number gate on the stacked gravity directions.
  double max_condition = 1e3;
  // Axis-aligned pose sets at low inclination admit several equal-cost
  // optima (axis flips preserve every gravity/field dot product). Ties are
  // broken toward the nominal mounting rotation.
  Mat3 nominal_rotation = Mat3::Identity();
  double cost_tie_tol = 1e-9;
};

// Joint rotation + inclination estimate from static poses. Minimizes
// sum_i (g_i . (R m_i) - sin I)^2 by Gauss-Newton on (omega, I); the
// gravity/field dot product is invariant to vehicle rotation, which is what
// pins down R and I together.
MagExtrinsics estimate_extrinsics(const StaticOrientationSet& data,
                                  const ExtrinsicOptions& opts = {});

struct StaticWindow {
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct ImuSample {
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

// Stationarity detector: gyro norm below threshold for at least min_duration.
std::vector<StaticWindow> detect_static_windows(const TimeSeries<ImuSample>& imu,
                                                double gyro_threshold = 0.02,
                                                double min_duration = 1.0);

// Mean accelerometer (negated, i.e. down) and mean corrected field per window.
StaticOrientationSet build_static_orientation_set(const TimeSeries<ImuSample>& imu,
                                                  const TimeSeries<Vec3>& mag,
                                                  const EllipsoidCalibration& intrinsics,
                                                  const std::vector<StaticWindow>& windows);

}  // namespace gt::magcal
