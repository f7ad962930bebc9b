#pragma once

#include <json.hpp>  // vendored nlohmann/json
#include <optional>
#include <string>

#include "gtkit/alignment.hpp"
#include "gtkit/attitude.hpp"
#include "gtkit/config.hpp"
#include "gtkit/io.hpp"
#include "gtkit/timesync.hpp"

namespace gt::pipeline {

inline constexpr const char* kToolName = "gtkit";
inline constexpr const char* kToolVersion = "0.1.0";

struct Dataset {
  TimeSeries<io::GnssSample> gnss1;
  TimeSeries<io::GnssSample> gnss2;
  TimeSeries<Vec3> mag;
  TimeSeries<magcal::ImuSample> imu;                 // optional
  std::vector<markers::MarkerObservation> markers;   // optional
  TimeSeries<vibration::MotorRates> motor_rates;     // optional
};

struct SkippedEpoch {
  double t = 0.0;
  std::string reason;
};

struct MethodStats {
  int solved = 0;
  int failed = 0;
  double mean_residual = 0.0;
  double rms_residual = 0.0;
  double max_residual = 0.0;
};

struct FixCounts {
  int fixed = 0;
  int rtk_float = 0;
  int rejected = 0;
};

struct GroundTruthResult {
  TimeSeries<Pose> trajectory;
  timesync::TimeOffset gnss2_offset;                  // applied to gnss2 timestamps
  std::optional<timesync::TimeOffset> mag_offset;     // applied to mag timestamps
  std::optional<timesync::TimeOffset> imu_offset;     // reported only
  FixCounts fix_gnss1;
  FixCounts fix_gnss2;
  std::vector<SkippedEpoch> skipped;
  MethodStats stats_linear;
  MethodStats stats_tangent;
  MethodStats stats_wahba;
  int epochs_total = 0;
};

// Full cascade: GNSS pair sync, magnetometer sync, per-epoch attitude and
// position, IMU offset report. Degenerate epochs are skipped and listed,
// never interpolated.
GroundTruthResult run_ground_truth(const Dataset& ds, const PipelineConfig& cfg);

nlohmann::ordered_json report_json(const GroundTruthResult& result, const PipelineConfig& cfg);

// Linear interpolation at time t; t must lie within the series range.
Vec3 interpolate(const TimeSeries<Vec3>& series, double t);

TimeSeries<Vec3> gnss_positions(const TimeSeries<io::GnssSample>& gnss);

// Keeps samples whose fix state passes the config filter.
TimeSeries<io::GnssSample> filter_by_fix(const TimeSeries<io::GnssSample>& gnss,
                                         const PipelineConfig& cfg, FixCounts* counts = nullptr);

// Heading of the G1-G2 baseline's horizontal projection per matched epoch.
timesync::SignalTrace vg_heading_trace(const TimeSeries<Vec3>& g1, const TimeSeries<Vec3>& g2);

// Vehicle yaw from the magnetometer's corrected horizontal components. The
// body-frame field angle runs opposite to yaw, hence the negation.
timesync::SignalTrace mag_yaw_trace(const TimeSeries<Vec3>& mag,
                                    const magcal::EllipsoidCalibration& intrinsics,
                                    const Mat3& r_imu_mag);

TimeSeries<Vec3> shift_timestamps(const TimeSeries<Vec3>& series, double shift);

// Uniform-rate scalar channel from an IMU stream. channel is one of
// ax, ay, az, gx, gy, gz, anorm, gnorm; the sample rate comes from the
// median timestamp spacing.
vibration::UniformSignal imu_channel_signal(const TimeSeries<magcal::ImuSample>& imu,
                                            const std::string& channel);

}  // namespace gt::pipeline
