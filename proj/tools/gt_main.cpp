// Ground-truth toolkit CLI: pose reconstruction from dual-GNSS/magnetometer
// logs plus the supporting sensor calibrations.

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "gtkit/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("GT_LOG_LEVEL");
    if (!env) return LogLevel::Warn;
    const std::string v(env);
    if (v == "error") return LogLevel::Error;
    if (v == "warn") return LogLevel::Warn;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level <= log_level()) {
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
  }
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Pipeline configuration file");
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
}

gt::pipeline::PipelineConfig load_config_or_default(const CommonArgs& args) {
  if (args.config_path.empty()) {
    return {};
  }
  return gt::pipeline::load_config(args.config_path);
}

fs::path prepare_out_dir(const CommonArgs& args) {
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const ordered_json& j) {
  gt::io::write_text_file(path, j.dump(2) + "\n");
}

ordered_json vec3_json(const gt::Vec3& v) {
  return ordered_json::array({v.x(), v.y(), v.z()});
}

ordered_json quat_json(const gt::Mat3& r) {
  const Eigen::Vector4d q = gt::quat_from_rotation(r);
  return ordered_json::array({q(0), q(1), q(2), q(3)});
}

int run_solve(const CommonArgs& common, const std::string& gnss1, const std::string& gnss2,
              const std::string& mag, const std::string& imu) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  gt::pipeline::Dataset ds;
  ds.gnss1 = gt::io::load_gnss_csv(gnss1);
  ds.gnss2 = gt::io::load_gnss_csv(gnss2);
  ds.mag = gt::io::load_mag_csv(mag);
  if (!imu.empty()) {
    ds.imu = gt::io::load_imu_csv(imu);
  }

  const auto result = gt::pipeline::run_ground_truth(ds, cfg);
  log(LogLevel::Info, "solved " + std::to_string(result.trajectory.size()) + " of " +
                          std::to_string(result.epochs_total) + " epochs");

  gt::io::save_pose_csv(out / "trajectory.csv", result.trajectory);
  write_json(out / "report.json", gt::pipeline::report_json(result, cfg));
  return 0;
}

int run_timesync(const CommonArgs& common, const std::string& gnss1, const std::string& gnss2,
                 const std::string& mag, const std::string& imu) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};

  if (!mag.empty()) {
    // Full cascade; IMU offset needs the rotational ground truth.
    gt::pipeline::Dataset ds;
    ds.gnss1 = gt::io::load_gnss_csv(gnss1);
    ds.gnss2 = gt::io::load_gnss_csv(gnss2);
    ds.mag = gt::io::load_mag_csv(mag);
    if (!imu.empty()) {
      ds.imu = gt::io::load_imu_csv(imu);
    }
    const auto result = gt::pipeline::run_ground_truth(ds, cfg);
    j["gnss2_offset_s"] = result.gnss2_offset.delta;
    j["gnss2_peak_correlation"] = result.gnss2_offset.peak_correlation;
    if (result.mag_offset) {
      j["mag_offset_s"] = result.mag_offset->delta;
      j["mag_peak_correlation"] = result.mag_offset->peak_correlation;
    }
    if (result.imu_offset) {
      j["imu_offset_s"] = result.imu_offset->delta;
      j["imu_peak_correlation"] = result.imu_offset->peak_correlation;
    }
  } else {
    const auto g1 = gt::io::load_gnss_csv(gnss1);
    const auto g2 = gt::io::load_gnss_csv(gnss2);
    const gt::timesync::XcorrOptions xopts{cfg.max_lag_s, 0.5};
    const auto offset = gt::timesync::sync_gnss_pair(gt::pipeline::gnss_positions(g1),
                                                     gt::pipeline::gnss_positions(g2), xopts);
    j["gnss2_offset_s"] = offset.delta;
    j["gnss2_peak_correlation"] = offset.peak_correlation;
  }

  write_json(out / "timesync.json", j);
  return 0;
}

int run_align(const CommonArgs& common, const std::string& reference,
              const std::vector<std::string>& segments) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  std::vector<gt::TimeSeries<gt::Pose>> series;
  series.push_back(gt::io::load_pose_csv(reference));
  for (const auto& s : segments) {
    series.push_back(gt::io::load_pose_csv(s));
  }

  const gt::align::MatchOptions mopts{cfg.align_max_gap_s};
  std::vector<gt::align::RigidAlignment> alignments;
  ordered_json seg_reports = ordered_json::array();
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto a = gt::align::align_segments(series[0], series[i], mopts);
    alignments.push_back(a);
    seg_reports.push_back({{"segment", segments[i - 1]},
                           {"rotation_wxyz", quat_json(a.rotation)},
                           {"translation_m", vec3_json(a.translation)},
                           {"rms_residual_m", a.rms_residual}});
  }

  const auto stitched =
      gt::align::stitch_trajectory(series, alignments, cfg.segment_priorities);
  gt::io::save_pose_csv(out / "stitched.csv", stitched);

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["weighting"] = cfg.align_fix_quality_weights ? "gnss-fix-quality" : "uniform";
  j["alignments"] = seg_reports;
  j["stitched_samples"] = stitched.size();
  write_json(out / "align_report.json", j);
  return 0;
}

int run_magcal_intrinsic(const CommonArgs& common, const std::string& mag) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto series = gt::io::load_mag_csv(mag);
  std::vector<gt::Vec3> samples;
  samples.reserve(series.size());
  for (const auto& s : series) {
    samples.push_back(s.value);
  }

  const gt::magcal::FitOptions fopts{cfg.magcal_min_samples, cfg.magcal_min_coverage};
  const auto cal = gt::magcal::fit_ellipsoid(samples, fopts);

  double mean_norm = 0.0;
  double mean_sq = 0.0;
  for (const auto& s : samples) {
    const double n = gt::magcal::correct_sample(s, cal).norm();
    mean_norm += n;
    mean_sq += n * n;
  }
  mean_norm /= static_cast<double>(samples.size());
  mean_sq /= static_cast<double>(samples.size());
  const double cv = std::sqrt(std::max(0.0, mean_sq - mean_norm * mean_norm)) / mean_norm;

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["b_ct"] = vec3_json(cal.b_ct);
  j["t_sp"] = ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    j["t_sp"].push_back(ordered_json::array(
        {cal.t_sp(r, 0), cal.t_sp(r, 1), cal.t_sp(r, 2)}));
  }
  j["samples"] = samples.size();
  j["corrected_norm_cv"] = cv;
  write_json(out / "mag_intrinsics.json", j);
  return 0;
}

int run_magcal_extrinsic(const CommonArgs& common, const std::string& imu,
                         const std::string& mag) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto imu_series = gt::io::load_imu_csv(imu);
  const auto mag_series = gt::io::load_mag_csv(mag);

  const auto windows = gt::magcal::detect_static_windows(imu_series, cfg.static_gyro_threshold,
                                                         cfg.static_min_duration_s);
  log(LogLevel::Info, "detected " + std::to_string(windows.size()) + " static windows");
  const auto poses =
      gt::magcal::build_static_orientation_set(imu_series, mag_series, cfg.mag_intrinsics, windows);
  const auto ext = gt::magcal::estimate_extrinsics(poses);

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["static_windows"] = windows.size();
  j["poses_used"] = poses.poses.size();
  j["r_imu_mag_wxyz"] = quat_json(ext.r_imu_mag);
  j["inclination_deg"] = ext.inclination * 180.0 / EIGEN_PI;
  j["residual"] = ext.residual;
  write_json(out / "mag_extrinsics.json", j);
  return 0;
}

int run_markercal(const CommonArgs& common, const std::string& observations) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto obs = gt::io::load_marker_obs_csv(observations);
  auto pairwise = gt::markers::extract_pairwise(obs);
  const gt::markers::CalibrateOptions copts{cfg.marker_paths, cfg.seed};
  const auto field = gt::markers::calibrate_field(std::move(pairwise), cfg.main_marker, copts);

  gt::io::save_marker_field_csv(out / "marker_field.csv", field);

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["main_marker"] = field.main_marker;
  j["calibrated_markers"] = field.poses.size();
  j["disconnected"] = field.disconnected;
  j["n_paths"] = cfg.marker_paths;
  j["seed"] = cfg.seed;
  write_json(out / "markercal_report.json", j);
  return 0;
}

int run_vibration_psd(const CommonArgs& common, const std::string& imu,
                      const std::string& channel) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto imu_series = gt::io::load_imu_csv(imu);
  const auto sig = gt::pipeline::imu_channel_signal(imu_series,
                                                    channel.empty() ? cfg.allan_channel : channel);
  const auto window_len =
      static_cast<std::size_t>(std::lround(cfg.psd_window_s * sig.sample_rate));

  const auto sg = gt::vibration::spectrogram(sig, window_len, cfg.psd_overlap);
  const auto psd = gt::vibration::welch_psd(sig, window_len, cfg.psd_overlap);
  gt::io::save_spectrogram_csv(out / "spectrogram.csv", sg);
  gt::io::save_power_spectrum_csv(out / "psd.csv", psd);

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["sample_rate_hz"] = sig.sample_rate;
  j["window_samples"] = window_len;
  j["overlap"] = cfg.psd_overlap;
  try {
    j["main_peak_hz"] = gt::vibration::find_main_peak(psd, cfg.min_peak_freq_hz);
  } catch (const gt::Error& e) {
    if (e.code() != gt::ErrorCode::NoPeak) throw;
    j["main_peak_hz"] = nullptr;
  }
  write_json(out / "psd_report.json", j);
  return 0;
}

int run_vibration_rpmfit(const CommonArgs& common, const std::string& table) {
  const fs::path out = prepare_out_dir(common);
  (void)load_config_or_default(common);

  const auto pairs = gt::io::load_rate_rpm_csv(table);
  const auto cal = gt::vibration::fit_rate_to_rpm(pairs);

  ordered_json rows = ordered_json::array();
  for (const auto& [rate, rpm] : pairs) {
    const double predicted = gt::vibration::predict_rpm(cal, rate);
    rows.push_back({{"rate", rate},
                    {"rpm_measured", rpm},
                    {"rpm_predicted", predicted},
                    {"relative_error", (predicted - rpm) / rpm}});
  }

  ordered_json j;
  j["tool"] = {{"name", gt::pipeline::kToolName}, {"version", gt::pipeline::kToolVersion}};
  j["a0"] = cal.a0;
  j["a1"] = cal.a1;
  j["a2"] = cal.a2;
  j["rows"] = rows;
  write_json(out / "rpmfit.json", j);
  return 0;
}

int run_vibration_predict(const CommonArgs& common, const std::string& rates) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto motor_rates = gt::io::load_motor_rates_csv(rates);
  const auto overlay = gt::vibration::predict_resonances(cfg.resonance, cfg.rpm_cal, motor_rates);
  gt::io::save_resonance_overlay_csv(out / "resonance_overlay.csv", overlay);
  return 0;
}

int run_vibration_allan(const CommonArgs& common, const std::string& imu,
                        const std::string& channel) {
  const auto cfg = load_config_or_default(common);
  const fs::path out = prepare_out_dir(common);

  const auto imu_series = gt::io::load_imu_csv(imu);
  const auto sig = gt::pipeline::imu_channel_signal(imu_series,
                                                    channel.empty() ? cfg.allan_channel : channel);
  const auto taus = gt::vibration::default_allan_taus(sig, cfg.allan_points_per_decade);
  if (taus.empty()) {
    throw gt::Error(gt::ErrorCode::TauOutOfRange, "signal too short for any Allan cluster");
  }
  const auto adev = gt::vibration::allan_deviation(sig, taus);
  gt::io::save_allan_csv(out / "allan.csv", adev);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"6-DoF ground-truth reconstruction and sensor calibration toolkit"};
  app.require_subcommand(1);

  // solve
  CommonArgs solve_args;
  std::string solve_g1, solve_g2, solve_mag, solve_imu;
  auto* solve = app.add_subcommand("solve", "Reconstruct the 6-DoF ground-truth trajectory");
  add_common(solve, solve_args);
  solve->add_option("--gnss1", solve_g1, "GNSS antenna 1 CSV")->required();
  solve->add_option("--gnss2", solve_g2, "GNSS antenna 2 CSV")->required();
  solve->add_option("--mag", solve_mag, "Magnetometer CSV")->required();
  solve->add_option("--imu", solve_imu, "IMU CSV (optional, enables the IMU offset)");

  // timesync
  CommonArgs sync_args;
  std::string sync_g1, sync_g2, sync_mag, sync_imu;
  auto* sync = app.add_subcommand("timesync", "Estimate inter-sensor time offsets");
  add_common(sync, sync_args);
  sync->add_option("--gnss1", sync_g1, "GNSS antenna 1 CSV")->required();
  sync->add_option("--gnss2", sync_g2, "GNSS antenna 2 CSV")->required();
  sync->add_option("--mag", sync_mag, "Magnetometer CSV (enables stages 2 and 3)");
  sync->add_option("--imu", sync_imu, "IMU CSV (stage 3)");

  // align
  CommonArgs align_args;
  std::string align_ref;
  std::vector<std::string> align_segments;
  auto* align = app.add_subcommand("align", "Align and stitch trajectory segments");
  add_common(align, align_args);
  align->add_option("--reference", align_ref, "Reference pose CSV (world frame)")->required();
  align->add_option("--segment", align_segments, "Segment pose CSV (repeatable)")->required();

  // magcal
  auto* magcal = app.add_subcommand("magcal", "Magnetometer calibration");
  magcal->require_subcommand(1);
  CommonArgs magi_args;
  std::string magi_mag;
  auto* magi = magcal->add_subcommand("intrinsic", "Hard-/soft-iron ellipsoid fit");
  add_common(magi, magi_args);
  magi->add_option("--mag", magi_mag, "Raw magnetometer CSV")->required();
  CommonArgs mage_args;
  std::string mage_imu, mage_mag;
  auto* mage = magcal->add_subcommand("extrinsic", "IMU-magnetometer rotation and inclination");
  add_common(mage, mage_args);
  mage->add_option("--imu", mage_imu, "IMU CSV with static poses")->required();
  mage->add_option("--mag", mage_mag, "Magnetometer CSV")->required();

  // markercal
  CommonArgs marker_args;
  std::string marker_obs;
  auto* marker = app.add_subcommand("markercal", "Fiducial marker field calibration");
  add_common(marker, marker_args);
  marker->add_option("--observations", marker_obs, "Marker observation CSV")->required();

  // vibration
  auto* vibration = app.add_subcommand("vibration", "Vibration and IMU noise analysis");
  vibration->require_subcommand(1);
  CommonArgs psd_args;
  std::string psd_imu, psd_channel;
  auto* psd = vibration->add_subcommand("psd", "Averaged PSD and spectrogram");
  add_common(psd, psd_args);
  psd->add_option("--imu", psd_imu, "IMU CSV")->required();
  psd->add_option("--channel", psd_channel, "Channel (ax..gz, anorm, gnorm)");
  CommonArgs rpmfit_args;
  std::string rpmfit_table;
  auto* rpmfit = vibration->add_subcommand("rpmfit", "Quadratic PX4-rate-to-RPM fit");
  add_common(rpmfit, rpmfit_args);
  rpmfit->add_option("--table", rpmfit_table, "rate,rpm CSV")->required();
  CommonArgs predict_args;
  std::string predict_rates;
  auto* predict = vibration->add_subcommand("predict", "Resonance frequencies from motor rates");
  add_common(predict, predict_args);
  predict->add_option("--rates", predict_rates, "Motor rate CSV")->required();
  CommonArgs allan_args;
  std::string allan_imu, allan_channel;
  auto* allan = vibration->add_subcommand("allan", "Overlapping Allan deviation");
  add_common(allan, allan_args);
  allan->add_option("--imu", allan_imu, "IMU CSV")->required();
  allan->add_option("--channel", allan_channel, "Channel (ax..gz, anorm, gnorm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (solve->parsed()) return run_solve(solve_args, solve_g1, solve_g2, solve_mag, solve_imu);
    if (sync->parsed()) return run_timesync(sync_args, sync_g1, sync_g2, sync_mag, sync_imu);
    if (align->parsed()) return run_align(align_args, align_ref, align_segments);
    if (magi->parsed()) return run_magcal_intrinsic(magi_args, magi_mag);
    if (mage->parsed()) return run_magcal_extrinsic(mage_args, mage_imu, mage_mag);
    if (marker->parsed()) return run_markercal(marker_args, marker_obs);
    if (psd->parsed()) return run_vibration_psd(psd_args, psd_imu, psd_channel);
    if (rpmfit->parsed()) return run_vibration_rpmfit(rpmfit_args, rpmfit_table);
    if (predict->parsed()) return run_vibration_predict(predict_args, predict_rates);
    if (allan->parsed()) return run_vibration_allan(allan_args, allan_imu, allan_channel);
  } catch (const gt::Error& e) {
    log(LogLevel::Error, e.what());
    return e.code() == gt::ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return 1;
  }
  return 2;
}
