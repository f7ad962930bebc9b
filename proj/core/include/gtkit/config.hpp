#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gtkit/attitude.hpp"
#include "gtkit/geometry.hpp"
#include "gtkit/magcal.hpp"
#include "gtkit/vibration.hpp"

namespace gt::pipeline {

// Flat `section.key = value` configuration. Every key is optional and falls
// back to the documented default; unknown keys are rejected.
struct PipelineConfig {
  // antenna.*
  attitude::AntennaCalibration antenna{Vec3(0.4243, -0.4243, 0.0), Vec3(-0.4243, 0.4243, 0.0),
                                       Mat3::Identity()};

  // mag.*  (declination/inclination stored in radians, configured in degrees)
  attitude::WorldMagneticModel magnetic_model{};
  Mat3 r_imu_mag = Mat3::Identity();
  magcal::EllipsoidCalibration mag_intrinsics{};

  // attitude.*
  attitude::Method method = attitude::Method::WahbaSvd;
  double alpha = 50.0;
  double min_baseline_m = 0.1;

  // gnss.*
  bool accept_float = true;
  bool accept_nortk = false;

  // timesync.*
  double max_lag_s = 2.0;
  bool apply_timesync = true;

  // align.*
  double align_max_gap_s = 0.05;
  bool align_fix_quality_weights = false;
  std::vector<int> segment_priorities;  // empty: input order

  // markers.*
  int main_marker = 0;
  int marker_paths = 32;
  std::uint64_t seed = 1;

  // magcal.*
  std::size_t magcal_min_samples = 10;
  double magcal_min_coverage = 0.02;
  double static_gyro_threshold = 0.02;  // rad/s
  double static_min_duration_s = 1.0;

  // vibration.*
  double psd_window_s = 2.0;
  double psd_overlap = 0.5;
  double min_peak_freq_hz = 20.0;
  vibration::RpmCalibration rpm_cal{168.5541, 12.1870, -0.0023};
  vibration::ResonanceModel resonance{10.6666, 0.0161};
  int allan_points_per_decade = 10;
  std::string allan_channel = "anorm";  // ax..az, gx..gz, anorm, gnorm
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace gt::pipeline
