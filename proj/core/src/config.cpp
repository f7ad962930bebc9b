#include "gtkit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace gt::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> pairs;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) + ": empty key or value");
    }
    if (pairs.contains(key)) {
      throw Error(ErrorCode::ConfigError, "duplicate key '" + key + "'");
    }
    pairs[key] = value;
  }
  return pairs;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::ConfigError, "'" + key + "': bad number '" + value + "'");
  }
  return out;
}

long to_int(const std::string& key, const std::string& value) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::ConfigError, "'" + key + "': bad integer '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::ConfigError, "'" + key + "': expected true/false");
}

std::vector<double> to_doubles(const std::string& key, const std::string& value,
                               std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string token;
  while (ss >> token) {
    out.push_back(to_double(key, token));
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::ConfigError, "'" + key + "': expected " + std::to_string(expected) +
                                            " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

Vec3 to_vec3(const std::string& key, const std::string& value) {
  const auto v = to_doubles(key, value, 3);
  return {v[0], v[1], v[2]};
}

Mat3 to_rotation(const std::string& key, const std::string& value) {
  const auto v = to_doubles(key, value, 4);
  return rotation_from_quat({v[0], v[1], v[2], v[3]});
}

Mat3 to_mat3(const std::string& key, const std::string& value) {
  const auto v = to_doubles(key, value, 9);
  Mat3 m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return m;
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  auto pairs = parse_pairs(text);

  auto take = [&pairs](const std::string& key) -> const std::string* {
    auto it = pairs.find(key);
    if (it == pairs.end()) {
      return nullptr;
    }
    return &it->second;
  };

  if (const auto* v = take("antenna.p_imu_g1")) cfg.antenna.p_imu_g1 = to_vec3("antenna.p_imu_g1", *v);
  if (const auto* v = take("antenna.p_imu_g2")) cfg.antenna.p_imu_g2 = to_vec3("antenna.p_imu_g2", *v);
  if (const auto* v = take("antenna.r_vg_imu")) cfg.antenna.r_vg_imu = to_rotation("antenna.r_vg_imu", *v);

  if (const auto* v = take("mag.declination_deg")) {
    cfg.magnetic_model.declination = kDegToRad * to_double("mag.declination_deg", *v);
  }
  if (const auto* v = take("mag.inclination_deg")) {
    const double deg = to_double("mag.inclination_deg", *v);
    if (std::abs(deg) > 90.0) {
      throw Error(ErrorCode::ConfigError, "mag.inclination_deg outside [-90, 90]");
    }
    cfg.magnetic_model.inclination = kDegToRad * deg;
  }
  if (const auto* v = take("mag.field_strength_nt")) {
    cfg.magnetic_model.field_strength_nt = to_double("mag.field_strength_nt", *v);
  }
  if (const auto* v = take("mag.r_imu_mag")) cfg.r_imu_mag = to_rotation("mag.r_imu_mag", *v);
  if (const auto* v = take("mag.b_ct")) cfg.mag_intrinsics.b_ct = to_vec3("mag.b_ct", *v);
  if (const auto* v = take("mag.t_sp")) cfg.mag_intrinsics.t_sp = to_mat3("mag.t_sp", *v);

  if (const auto* v = take("attitude.method")) {
    if (*v == "wahba") cfg.method = attitude::Method::WahbaSvd;
    else if (*v == "linear") cfg.method = attitude::Method::LinearLs;
    else if (*v == "tangent") cfg.method = attitude::Method::TangentGn;
    else throw Error(ErrorCode::ConfigError, "attitude.method must be wahba, linear or tangent");
  }
  if (const auto* v = take("attitude.alpha")) {
    cfg.alpha = to_double("attitude.alpha", *v);
    if (!(cfg.alpha > 0.0)) {
      throw Error(ErrorCode::ConfigError, "attitude.alpha must be positive");
    }
  }
  if (const auto* v = take("attitude.min_baseline_m")) {
    cfg.min_baseline_m = to_double("attitude.min_baseline_m", *v);
  }

  if (const auto* v = take("gnss.accept_float")) cfg.accept_float = to_bool("gnss.accept_float", *v);
  if (const auto* v = take("gnss.accept_nortk")) cfg.accept_nortk = to_bool("gnss.accept_nortk", *v);

  if (const auto* v = take("timesync.max_lag_s")) {
    cfg.max_lag_s = to_double("timesync.max_lag_s", *v);
    if (!(cfg.max_lag_s > 0.0)) {
      throw Error(ErrorCode::ConfigError, "timesync.max_lag_s must be positive");
    }
  }
  if (const auto* v = take("timesync.apply")) cfg.apply_timesync = to_bool("timesync.apply", *v);

  if (const auto* v = take("align.max_gap_s")) cfg.align_max_gap_s = to_double("align.max_gap_s", *v);
  if (const auto* v = take("align.use_fix_quality_weights")) {
    cfg.align_fix_quality_weights = to_bool("align.use_fix_quality_weights", *v);
  }
  if (const auto* v = take("align.priorities")) {
    std::stringstream ss(*v);
    std::string token;
    cfg.segment_priorities.clear();
    while (ss >> token) {
      cfg.segment_priorities.push_back(static_cast<int>(to_int("align.priorities", token)));
    }
  }

  if (const auto* v = take("markers.main_marker")) {
    cfg.main_marker = static_cast<int>(to_int("markers.main_marker", *v));
  }
  if (const auto* v = take("markers.n_paths")) {
    cfg.marker_paths = static_cast<int>(to_int("markers.n_paths", *v));
    if (cfg.marker_paths < 1) {
      throw Error(ErrorCode::ConfigError, "markers.n_paths must be at least 1");
    }
  }
  if (const auto* v = take("markers.seed")) {
    cfg.seed = static_cast<std::uint64_t>(to_int("markers.seed", *v));
  }

  if (const auto* v = take("magcal.min_samples")) {
    cfg.magcal_min_samples = static_cast<std::size_t>(to_int("magcal.min_samples", *v));
  }
  if (const auto* v = take("magcal.min_coverage")) {
    cfg.magcal_min_coverage = to_double("magcal.min_coverage", *v);
  }
  if (const auto* v = take("magcal.static_gyro_threshold")) {
    cfg.static_gyro_threshold = to_double("magcal.static_gyro_threshold", *v);
  }
  if (const auto* v = take("magcal.static_min_duration_s")) {
    cfg.static_min_duration_s = to_double("magcal.static_min_duration_s", *v);
  }

  if (const auto* v = take("vibration.window_s")) {
    cfg.psd_window_s = to_double("vibration.window_s", *v);
    if (!(cfg.psd_window_s > 0.0)) {
      throw Error(ErrorCode::ConfigError, "vibration.window_s must be positive");
    }
  }
  if (const auto* v = take("vibration.overlap")) {
    cfg.psd_overlap = to_double("vibration.overlap", *v);
    if (cfg.psd_overlap < 0.0 || cfg.psd_overlap >= 1.0) {
      throw Error(ErrorCode::ConfigError, "vibration.overlap must be in [0, 1)");
    }
  }
  if (const auto* v = take("vibration.min_peak_freq_hz")) {
    cfg.min_peak_freq_hz = to_double("vibration.min_peak_freq_hz", *v);
  }
  if (const auto* v = take("vibration.rpm_cal")) {
    const auto c = to_doubles("vibration.rpm_cal", *v, 3);
    cfg.rpm_cal = {c[0], c[1], c[2]};
  }
  if (const auto* v = take("vibration.resonance")) {
    const auto c = to_doubles("vibration.resonance", *v, 2);
    cfg.resonance = {c[0], c[1]};
  }
  if (const auto* v = take("vibration.allan_points_per_decade")) {
    cfg.allan_points_per_decade =
        static_cast<int>(to_int("vibration.allan_points_per_decade", *v));
    if (cfg.allan_points_per_decade < 1) {
      throw Error(ErrorCode::ConfigError, "vibration.allan_points_per_decade must be >= 1");
    }
  }
  if (const auto* v = take("vibration.allan_channel")) {
    static const char* allowed[] = {"ax", "ay", "az", "gx", "gy", "gz", "anorm", "gnorm"};
    bool ok = false;
    for (const char* a : allowed) {
      if (*v == a) ok = true;
    }
    if (!ok) {
      throw Error(ErrorCode::ConfigError, "vibration.allan_channel must be one of "
                                          "ax, ay, az, gx, gy, gz, anorm, gnorm");
    }
    cfg.allan_channel = *v;
  }

  // Everything consumed above was erased lazily; re-scan for unknowns.
  static const char* known[] = {
      "antenna.p_imu_g1", "antenna.p_imu_g2", "antenna.r_vg_imu",
      "mag.declination_deg", "mag.inclination_deg", "mag.field_strength_nt", "mag.r_imu_mag",
      "mag.b_ct", "mag.t_sp",
      "attitude.method", "attitude.alpha", "attitude.min_baseline_m",
      "gnss.accept_float", "gnss.accept_nortk",
      "timesync.max_lag_s", "timesync.apply",
      "align.max_gap_s", "align.use_fix_quality_weights", "align.priorities",
      "markers.main_marker", "markers.n_paths", "markers.seed",
      "magcal.min_samples", "magcal.min_coverage", "magcal.static_gyro_threshold",
      "magcal.static_min_duration_s",
      "vibration.window_s", "vibration.overlap", "vibration.min_peak_freq_hz",
      "vibration.rpm_cal", "vibration.resonance", "vibration.allan_points_per_decade",
      "vibration.allan_channel",
  };
  for (const auto& [key, value] : pairs) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
  }

  if (cfg.antenna.baseline() <= 0.0) {
    throw Error(ErrorCode::ConfigError, "antenna lever arms must differ");
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace gt::pipeline
