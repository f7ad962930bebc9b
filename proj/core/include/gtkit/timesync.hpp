#pragma once

#include <vector>

#include "gtkit/geometry.hpp"

namespace gt::timesync {

// Scalar channel sampled at strictly increasing times.
struct SignalTrace {
  std::vector<double> t;
  std::vector<double> v;

  void validate() const;
};

// delta > 0 means the second signal lags the first: b(t) = a(t - delta).
struct TimeOffset {
  double delta = 0.0;
  double peak_correlation = 0.0;
};

// Central differences in the interior, second-order one-sided at the ends.
TimeSeries<Vec3> differentiate(const TimeSeries<Vec3>& series);
SignalTrace differentiate(const SignalTrace& trace);

struct XcorrOptions {
  double max_lag = 2.0;  // s
  // Fraction of the shorter trace that must overlap at a candidate lag.
  double min_overlap = 0.5;
};

// Normalized cross-correlation over a uniform resampling of both traces at
// the faster native rate; the discrete peak is refined by parabolic
// interpolation for sub-sample resolution.
TimeOffset estimate_offset_xcorr(const SignalTrace& a, const SignalTrace& b,
                                 const XcorrOptions& opts = {});

// GNSS-to-GNSS offset from cross-correlated speed (velocity norm) traces.
TimeOffset sync_gnss_pair(const TimeSeries<Vec3>& g1, const TimeSeries<Vec3>& g2,
                          const XcorrOptions& opts = {});

// Magnetometer-to-virtual-GNSS offset from heading-rate traces. Both inputs
// are headings in radians with the same sign convention; they are unwrapped
// here before differentiation.
TimeOffset sync_mag_to_vg(const SignalTrace& vg_heading, const SignalTrace& mag_heading,
                          const XcorrOptions& opts = {});

// IMU-to-ground-truth offset: body rates log(R_k^T R_k+1)/dt (norm channel)
// against the gyro norm.
TimeOffset sync_imu_to_gt(const TimeSeries<Mat3>& gt_rotations, const TimeSeries<Vec3>& imu_gyro,
                          const XcorrOptions& opts = {});

// Removes +-pi jumps in place; threshold pi.
std::vector<double> unwrap_angles(std::vector<double> angles);

SignalTrace norm_trace(const TimeSeries<Vec3>& series);

}  // namespace gt::timesync
