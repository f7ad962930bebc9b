#include "gtkit/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace gt::pipeline {

Vec3 interpolate(const TimeSeries<Vec3>& series, double t) {
  if (series.empty() || t < series.front().t || t > series.back().t) {
    throw Error(ErrorCode::InsufficientOverlap, "interpolation time outside series range");
  }
  auto it = std::lower_bound(series.begin(), series.end(), t,
                             [](const Timestamped<Vec3>& s, double v) { return s.t < v; });
  if (it == series.begin()) {
    return it->value;
  }
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double u = (t - lo.t) / (hi.t - lo.t);
  return (1.0 - u) * lo.value + u * hi.value;
}

TimeSeries<Vec3> gnss_positions(const TimeSeries<io::GnssSample>& gnss) {
  TimeSeries<Vec3> out;
  out.reserve(gnss.size());
  for (const auto& s : gnss) {
    out.push_back({s.t, s.value.position});
  }
  return out;
}

TimeSeries<io::GnssSample> filter_by_fix(const TimeSeries<io::GnssSample>& gnss,
                                         const PipelineConfig& cfg, FixCounts* counts) {
  TimeSeries<io::GnssSample> out;
  out.reserve(gnss.size());
  FixCounts local;
  for (const auto& s : gnss) {
    bool keep = false;
    switch (s.value.fix) {
      case io::RtkFix::Fixed:
        keep = true;
        ++local.fixed;
        break;
      case io::RtkFix::Float:
        keep = cfg.accept_float;
        if (keep) ++local.rtk_float;
        break;
      case io::RtkFix::NoRtk:
        keep = cfg.accept_nortk;
        break;
    }
    if (keep) {
      out.push_back(s);
    } else {
      ++local.rejected;
    }
  }
  if (counts) {
    *counts = local;
  }
  return out;
}

timesync::SignalTrace vg_heading_trace(const TimeSeries<Vec3>& g1, const TimeSeries<Vec3>& g2) {
  timesync::SignalTrace trace;
  for (const auto& s : g2) {
    if (s.t < g1.front().t || s.t > g1.back().t) {
      continue;
    }
    const Vec3 baseline = interpolate(g1, s.t) - s.value;
    trace.t.push_back(s.t);
    trace.v.push_back(std::atan2(baseline.y(), baseline.x()));
  }
  return trace;
}

timesync::SignalTrace mag_yaw_trace(const TimeSeries<Vec3>& mag,
                                    const magcal::EllipsoidCalibration& intrinsics,
                                    const Mat3& r_imu_mag) {
  timesync::SignalTrace trace;
  trace.t.reserve(mag.size());
  trace.v.reserve(mag.size());
  for (const auto& s : mag) {
    const Vec3 m = r_imu_mag * magcal::correct_sample(s.value, intrinsics);
    trace.t.push_back(s.t);
    trace.v.push_back(-std::atan2(m.y(), m.x()));
  }
  return trace;
}

TimeSeries<Vec3> shift_timestamps(const TimeSeries<Vec3>& series, double shift) {
  TimeSeries<Vec3> out = series;
  for (auto& s : out) {
    s.t += shift;
  }
  return out;
}

namespace {

void accumulate(MethodStats& stats, double residual) {
  ++stats.solved;
  stats.mean_residual += residual;
  stats.rms_residual += residual * residual;
  stats.max_residual = std::max(stats.max_residual, residual);
}

void finalize(MethodStats& stats) {
  if (stats.solved > 0) {
    stats.mean_residual /= stats.solved;
    stats.rms_residual = std::sqrt(stats.rms_residual / stats.solved);
  }
}

}  // namespace

GroundTruthResult run_ground_truth(const Dataset& ds, const PipelineConfig& cfg) {
  if (ds.gnss1.empty() || ds.gnss2.empty()) {
    throw Error(ErrorCode::ConfigError, "ground truth requires both GNSS streams");
  }
  if (ds.mag.empty()) {
    throw Error(ErrorCode::ConfigError, "ground truth requires the magnetometer stream");
  }

  GroundTruthResult result;

  const TimeSeries<io::GnssSample> g1 = filter_by_fix(ds.gnss1, cfg, &result.fix_gnss1);
  const TimeSeries<io::GnssSample> g2 = filter_by_fix(ds.gnss2, cfg, &result.fix_gnss2);
  if (g1.size() < 2 || g2.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "too few GNSS samples after fix filtering");
  }

  const TimeSeries<Vec3> p1 = gnss_positions(g1);
  TimeSeries<Vec3> p2 = gnss_positions(g2);

  const timesync::XcorrOptions xopts{cfg.max_lag_s, 0.5};

  // Stage 1: GNSS to GNSS.
  if (cfg.apply_timesync) {
    result.gnss2_offset = timesync::sync_gnss_pair(p1, p2, xopts);
    p2 = shift_timestamps(p2, -result.gnss2_offset.delta);
  }

  // Stage 2: magnetometer to the virtual GNSS vector.
  TimeSeries<Vec3> mag = ds.mag;
  if (cfg.apply_timesync) {
    const timesync::SignalTrace vg = vg_heading_trace(p1, p2);
    const timesync::SignalTrace my = mag_yaw_trace(mag, cfg.mag_intrinsics, cfg.r_imu_mag);
    const timesync::TimeOffset mag_offset = timesync::sync_mag_to_vg(vg, my, xopts);
    result.mag_offset = mag_offset;
    mag = shift_timestamps(mag, -mag_offset.delta);
  }

  // Per-epoch pose estimation on the G2 clock.
  const attitude::WorldMagneticModel& wmm = cfg.magnetic_model;
  for (const auto& epoch : p2) {
    if (epoch.t < p1.front().t || epoch.t > p1.back().t) {
      continue;
    }
    ++result.epochs_total;
    if (epoch.t < mag.front().t || epoch.t > mag.back().t) {
      result.skipped.push_back({epoch.t, "no magnetometer coverage"});
      continue;
    }
    const Timestamped<Vec3> g1_at{epoch.t, interpolate(p1, epoch.t)};
    const Vec3 mag_at = interpolate(mag, epoch.t);

    // Residual statistics for all three methods; the configured one drives
    // the output trajectory.
    auto run_method = [&](attitude::Method m) {
      return attitude::estimate_pose_epoch(g1_at, epoch, mag_at, cfg.antenna, cfg.mag_intrinsics,
                                           cfg.r_imu_mag, wmm, m, cfg.alpha, cfg.min_baseline_m);
    };
    for (auto [method, stats] :
         {std::pair{attitude::Method::LinearLs, &result.stats_linear},
          std::pair{attitude::Method::TangentGn, &result.stats_tangent},
          std::pair{attitude::Method::WahbaSvd, &result.stats_wahba}}) {
      if (method == cfg.method) {
        continue;  // accounted below
      }
      try {
        accumulate(*stats, run_method(method).rotation.residual);
      } catch (const Error&) {
        ++stats->failed;
      }
    }

    MethodStats* chosen = &result.stats_wahba;
    if (cfg.method == attitude::Method::LinearLs) chosen = &result.stats_linear;
    if (cfg.method == attitude::Method::TangentGn) chosen = &result.stats_tangent;
    try {
      const attitude::EpochEstimate est = run_method(cfg.method);
      accumulate(*chosen, est.rotation.residual);
      result.trajectory.push_back(est.pose);
    } catch (const Error& e) {
      ++chosen->failed;
      result.skipped.push_back({epoch.t, e.what()});
    }
  }

  finalize(result.stats_linear);
  finalize(result.stats_tangent);
  finalize(result.stats_wahba);

  // Stage 3: IMU against the rotational ground truth, report only.
  if (!ds.imu.empty() && result.trajectory.size() >= 2) {
    TimeSeries<Mat3> rotations;
    rotations.reserve(result.trajectory.size());
    for (const auto& s : result.trajectory) {
      rotations.push_back({s.t, s.value.rotation});
    }
    TimeSeries<Vec3> gyro;
    gyro.reserve(ds.imu.size());
    for (const auto& s : ds.imu) {
      gyro.push_back({s.t, s.value.gyro});
    }
    try {
      result.imu_offset = timesync::sync_imu_to_gt(rotations, gyro, xopts);
    } catch (const Error&) {
      result.imu_offset = std::nullopt;  // unobservable (e.g. static attitude)
    }
  }

  return result;
}

vibration::UniformSignal imu_channel_signal(const TimeSeries<magcal::ImuSample>& imu,
                                            const std::string& channel) {
  if (imu.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "IMU stream too short");
  }
  std::vector<double> dts;
  dts.reserve(imu.size() - 1);
  for (std::size_t i = 0; i + 1 < imu.size(); ++i) {
    dts.push_back(imu[i + 1].t - imu[i].t);
  }
  std::nth_element(dts.begin(), dts.begin() + dts.size() / 2, dts.end());
  const double dt = dts[dts.size() / 2];

  vibration::UniformSignal sig;
  sig.sample_rate = 1.0 / dt;
  sig.values.reserve(imu.size());
  for (const auto& s : imu) {
    double v = 0.0;
    if (channel == "ax") v = s.value.accel.x();
    else if (channel == "ay") v = s.value.accel.y();
    else if (channel == "az") v = s.value.accel.z();
    else if (channel == "gx") v = s.value.gyro.x();
    else if (channel == "gy") v = s.value.gyro.y();
    else if (channel == "gz") v = s.value.gyro.z();
    else if (channel == "anorm") v = s.value.accel.norm();
    else if (channel == "gnorm") v = s.value.gyro.norm();
    else throw Error(ErrorCode::ConfigError, "unknown IMU channel '" + channel + "'");
    sig.values.push_back(v);
  }
  return sig;
}

nlohmann::ordered_json report_json(const GroundTruthResult& result, const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};

  const char* method = "wahba";
  if (cfg.method == attitude::Method::LinearLs) method = "linear";
  if (cfg.method == attitude::Method::TangentGn) method = "tangent";
  j["attitude"] = {{"method", method}, {"alpha", cfg.alpha}};

  nlohmann::ordered_json sync;
  sync["gnss2_offset_s"] = result.gnss2_offset.delta;
  sync["gnss2_peak_correlation"] = result.gnss2_offset.peak_correlation;
  if (result.mag_offset) {
    sync["mag_offset_s"] = result.mag_offset->delta;
    sync["mag_peak_correlation"] = result.mag_offset->peak_correlation;
  }
  if (result.imu_offset) {
    sync["imu_offset_s"] = result.imu_offset->delta;
    sync["imu_peak_correlation"] = result.imu_offset->peak_correlation;
  }
  j["time_sync"] = sync;

  auto fix_json = [](const FixCounts& c) {
    return nlohmann::ordered_json{
        {"fixed", c.fixed}, {"float", c.rtk_float}, {"rejected", c.rejected}};
  };
  j["gnss_fix"] = {{"gnss1", fix_json(result.fix_gnss1)}, {"gnss2", fix_json(result.fix_gnss2)}};

  auto stats_json = [](const MethodStats& s) {
    nlohmann::ordered_json out{{"solved", s.solved}, {"failed", s.failed}};
    if (s.solved > 0) {
      out["mean_residual"] = s.mean_residual;
      out["rms_residual"] = s.rms_residual;
      out["max_residual"] = s.max_residual;
    }
    return out;
  };
  j["residuals"] = {{"linear", stats_json(result.stats_linear)},
                    {"tangent", stats_json(result.stats_tangent)},
                    {"wahba", stats_json(result.stats_wahba)}};

  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : result.skipped) {
    skipped.push_back({{"t_s", s.t}, {"reason", s.reason}});
  }
  j["epochs"] = {{"total", result.epochs_total},
                 {"solved", result.trajectory.size()},
                 {"skipped", skipped}};
  return j;
}

}  // namespace gt::pipeline
