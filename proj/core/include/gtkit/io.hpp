#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gtkit/geometry.hpp"
#include "gtkit/magcal.hpp"
#include "gtkit/markers.hpp"
#include "gtkit/vibration.hpp"

namespace gt::io {

enum class RtkFix { NoRtk = 0, Float = 1, Fixed = 2 };

struct GnssSample {
  Vec3 position = Vec3::Zero();  // ENU, m
  RtkFix fix = RtkFix::Fixed;
  Vec3 cov = Vec3::Zero();  // sigma^2 per axis, m^2
};

// Shortest round-trip decimal representation (std::to_chars); parsing the
// printed text recovers the exact double, which keeps outputs byte-stable.
std::string format_double(double value);

// GNSS CSV: t_s,east_m,north_m,up_m[,fix][,cov_e_m2,cov_n_m2,cov_u_m2]
TimeSeries<GnssSample> load_gnss_csv(const std::filesystem::path& path);
void save_gnss_csv(const std::filesystem::path& path, const TimeSeries<GnssSample>& series);

// Magnetometer CSV: t_s,mx,my,mz (raw sensor units)
TimeSeries<Vec3> load_mag_csv(const std::filesystem::path& path);
void save_mag_csv(const std::filesystem::path& path, const TimeSeries<Vec3>& series);

// IMU CSV: t_s,gx_rad_s,gy_rad_s,gz_rad_s,ax_m_s2,ay_m_s2,az_m_s2
TimeSeries<magcal::ImuSample> load_imu_csv(const std::filesystem::path& path);
void save_imu_csv(const std::filesystem::path& path, const TimeSeries<magcal::ImuSample>& series);

// Pose CSV: t_s,px,py,pz,qw,qx,qy,qz with qw >= 0
TimeSeries<Pose> load_pose_csv(const std::filesystem::path& path);
void save_pose_csv(const std::filesystem::path& path, const TimeSeries<Pose>& series);

// Marker observations CSV: image_id,marker_id,qw,qx,qy,qz,tx_m,ty_m,tz_m
std::vector<markers::MarkerObservation> load_marker_obs_csv(const std::filesystem::path& path);
void save_marker_obs_csv(const std::filesystem::path& path,
                         const std::vector<markers::MarkerObservation>& obs);

// Marker field calibration CSV: marker_id,qw,qx,qy,qz,tx,ty,tz
void save_marker_field_csv(const std::filesystem::path& path,
                           const markers::MarkerFieldCalibration& field);
markers::MarkerFieldCalibration load_marker_field_csv(const std::filesystem::path& path,
                                                      int main_marker);

// Motor rates CSV: t_s,rate0,rate1,rate2,rate3
TimeSeries<vibration::MotorRates> load_motor_rates_csv(const std::filesystem::path& path);

// RPM calibration table CSV: rate,rpm
std::vector<std::pair<double, double>> load_rate_rpm_csv(const std::filesystem::path& path);

// Resonance pairs CSV: rpm,peak_hz
std::vector<std::pair<double, double>> load_rpm_freq_csv(const std::filesystem::path& path);

void save_power_spectrum_csv(const std::filesystem::path& path,
                             const vibration::PowerSpectrum& spec);
void save_spectrogram_csv(const std::filesystem::path& path, const vibration::Spectrogram& sg);
void save_allan_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<double, double>>& taus_adev);
void save_resonance_overlay_csv(const std::filesystem::path& path,
                                const TimeSeries<vibration::MotorFreqs>& overlay);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace gt::io
