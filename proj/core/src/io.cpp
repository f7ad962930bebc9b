#include "gtkit/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace gt::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace.
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? std::string()
                                                : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

long parse_int(const std::string& text, std::size_t line_no) {
  long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": bad integer '" + text + "'");
  }
  return value;
}

// Header-driven CSV table. Column lookup by name; missing mandatory columns
// raise MissingColumn.
class CsvTable {
 public:
  explicit CsvTable(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path);
    if (!in) {
      throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') {
        continue;
      }
      if (!have_header) {
        header_ = split_csv_line(line);
        have_header = true;
        continue;
      }
      rows_.push_back(split_csv_line(line));
      row_lines_.push_back(line_no);
      if (rows_.back().size() != header_.size()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header_.size()) + " fields, got " +
                        std::to_string(rows_.back().size()));
      }
    }
    if (!have_header) {
      throw Error(ErrorCode::ParseError, "missing header in " + path.string());
    }
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) {
        return i;
      }
    }
    throw Error(ErrorCode::MissingColumn, "'" + name + "' in " + path_.string());
  }

  bool has_column(const std::string& name) const {
    for (const auto& h : header_) {
      if (h == name) return true;
    }
    return false;
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t line_of(std::size_t row) const { return row_lines_[row]; }

  double number(std::size_t row, std::size_t col) const {
    return parse_double(rows_[row][col], row_lines_[row]);
  }
  long integer(std::size_t row, std::size_t col) const {
    return parse_int(rows_[row][col], row_lines_[row]);
  }

 private:
  std::filesystem::path path_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> row_lines_;
};

void check_monotonic(double prev, double t, std::size_t line_no) {
  if (!(t > prev)) {
    throw Error(ErrorCode::NonMonotonicTime,
                "line " + std::to_string(line_no) + ": timestamp not strictly increasing");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: fixed newlines on all hosts
  if (!out) {
    throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

TimeSeries<GnssSample> load_gnss_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ct = table.column("t_s");
  const std::size_t ce = table.column("east_m");
  const std::size_t cn = table.column("north_m");
  const std::size_t cu = table.column("up_m");
  const bool with_fix = table.has_column("fix");
  const bool with_cov = table.has_column("cov_e_m2");
  const std::size_t cf = with_fix ? table.column("fix") : 0;
  std::array<std::size_t, 3> cc{};
  if (with_cov) {
    cc = {table.column("cov_e_m2"), table.column("cov_n_m2"), table.column("cov_u_m2")};
  }

  TimeSeries<GnssSample> out;
  out.reserve(table.rows());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Timestamped<GnssSample> s;
    s.t = table.number(r, ct);
    check_monotonic(prev, s.t, table.line_of(r));
    prev = s.t;
    s.value.position = {table.number(r, ce), table.number(r, cn), table.number(r, cu)};
    if (with_fix) {
      const long fix = table.integer(r, cf);
      if (fix < 0 || fix > 2) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(table.line_of(r)) + ": fix must be 0, 1 or 2");
      }
      s.value.fix = static_cast<RtkFix>(fix);
    }
    if (with_cov) {
      s.value.cov = {table.number(r, cc[0]), table.number(r, cc[1]), table.number(r, cc[2])};
      if ((s.value.cov.array() < 0.0).any()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(table.line_of(r)) + ": negative covariance");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_gnss_csv(const std::filesystem::path& path, const TimeSeries<GnssSample>& series) {
  auto out = open_out(path);
  out << "t_s,east_m,north_m,up_m,fix,cov_e_m2,cov_n_m2,cov_u_m2\n";
  for (const auto& s : series) {
    out << format_double(s.t) << ',' << format_double(s.value.position.x()) << ','
        << format_double(s.value.position.y()) << ',' << format_double(s.value.position.z()) << ','
        << static_cast<int>(s.value.fix) << ',' << format_double(s.value.cov.x()) << ','
        << format_double(s.value.cov.y()) << ',' << format_double(s.value.cov.z()) << '\n';
  }
}

TimeSeries<Vec3> load_mag_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ct = table.column("t_s");
  const std::size_t cx = table.column("mx");
  const std::size_t cy = table.column("my");
  const std::size_t cz = table.column("mz");
  TimeSeries<Vec3> out;
  out.reserve(table.rows());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Timestamped<Vec3> s;
    s.t = table.number(r, ct);
    check_monotonic(prev, s.t, table.line_of(r));
    prev = s.t;
    s.value = {table.number(r, cx), table.number(r, cy), table.number(r, cz)};
    out.push_back(std::move(s));
  }
  return out;
}

void save_mag_csv(const std::filesystem::path& path, const TimeSeries<Vec3>& series) {
  auto out = open_out(path);
  out << "t_s,mx,my,mz\n";
  for (const auto& s : series) {
    out << format_double(s.t) << ',' << format_double(s.value.x()) << ','
        << format_double(s.value.y()) << ',' << format_double(s.value.z()) << '\n';
  }
}

TimeSeries<magcal::ImuSample> load_imu_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ct = table.column("t_s");
  const std::array<std::size_t, 3> cg{table.column("gx_rad_s"), table.column("gy_rad_s"),
                                      table.column("gz_rad_s")};
  const std::array<std::size_t, 3> ca{table.column("ax_m_s2"), table.column("ay_m_s2"),
                                      table.column("az_m_s2")};
  TimeSeries<magcal::ImuSample> out;
  out.reserve(table.rows());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Timestamped<magcal::ImuSample> s;
    s.t = table.number(r, ct);
    check_monotonic(prev, s.t, table.line_of(r));
    prev = s.t;
    s.value.gyro = {table.number(r, cg[0]), table.number(r, cg[1]), table.number(r, cg[2])};
    s.value.accel = {table.number(r, ca[0]), table.number(r, ca[1]), table.number(r, ca[2])};
    out.push_back(std::move(s));
  }
  return out;
}

void save_imu_csv(const std::filesystem::path& path, const TimeSeries<magcal::ImuSample>& series) {
  auto out = open_out(path);
  out << "t_s,gx_rad_s,gy_rad_s,gz_rad_s,ax_m_s2,ay_m_s2,az_m_s2\n";
  for (const auto& s : series) {
    out << format_double(s.t) << ',' << format_double(s.value.gyro.x()) << ','
        << format_double(s.value.gyro.y()) << ',' << format_double(s.value.gyro.z()) << ','
        << format_double(s.value.accel.x()) << ',' << format_double(s.value.accel.y()) << ','
        << format_double(s.value.accel.z()) << '\n';
  }
}

TimeSeries<Pose> load_pose_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ct = table.column("t_s");
  const std::array<std::size_t, 3> cp{table.column("px"), table.column("py"), table.column("pz")};
  const std::array<std::size_t, 4> cq{table.column("qw"), table.column("qx"), table.column("qy"),
                                      table.column("qz")};
  TimeSeries<Pose> out;
  out.reserve(table.rows());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Timestamped<Pose> s;
    s.t = table.number(r, ct);
    check_monotonic(prev, s.t, table.line_of(r));
    prev = s.t;
    s.value.translation = {table.number(r, cp[0]), table.number(r, cp[1]),
                           table.number(r, cp[2])};
    s.value.rotation = rotation_from_quat({table.number(r, cq[0]), table.number(r, cq[1]),
                                           table.number(r, cq[2]), table.number(r, cq[3])});
    out.push_back(std::move(s));
  }
  return out;
}

void save_pose_csv(const std::filesystem::path& path, const TimeSeries<Pose>& series) {
  auto out = open_out(path);
  out << "t_s,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& s : series) {
    const Eigen::Vector4d q = quat_from_rotation(s.value.rotation);
    out << format_double(s.t) << ',' << format_double(s.value.translation.x()) << ','
        << format_double(s.value.translation.y()) << ',' << format_double(s.value.translation.z())
        << ',' << format_double(q(0)) << ',' << format_double(q(1)) << ',' << format_double(q(2))
        << ',' << format_double(q(3)) << '\n';
  }
}

std::vector<markers::MarkerObservation> load_marker_obs_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ci = table.column("image_id");
  const std::size_t cm = table.column("marker_id");
  const std::array<std::size_t, 4> cq{table.column("qw"), table.column("qx"), table.column("qy"),
                                      table.column("qz")};
  const std::array<std::size_t, 3> cp{table.column("tx_m"), table.column("ty_m"),
                                      table.column("tz_m")};
  std::vector<markers::MarkerObservation> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    markers::MarkerObservation obs;
    obs.image_id = table.integer(r, ci);
    obs.marker_id = static_cast<int>(table.integer(r, cm));
    if (obs.marker_id < 0) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(table.line_of(r)) + ": negative marker id");
    }
    obs.pose.rotation = rotation_from_quat({table.number(r, cq[0]), table.number(r, cq[1]),
                                            table.number(r, cq[2]), table.number(r, cq[3])});
    obs.pose.translation = {table.number(r, cp[0]), table.number(r, cp[1]),
                            table.number(r, cp[2])};
    out.push_back(std::move(obs));
  }
  return out;
}

void save_marker_obs_csv(const std::filesystem::path& path,
                         const std::vector<markers::MarkerObservation>& obs) {
  auto out = open_out(path);
  out << "image_id,marker_id,qw,qx,qy,qz,tx_m,ty_m,tz_m\n";
  for (const auto& o : obs) {
    const Eigen::Vector4d q = quat_from_rotation(o.pose.rotation);
    out << o.image_id << ',' << o.marker_id << ',' << format_double(q(0)) << ','
        << format_double(q(1)) << ',' << format_double(q(2)) << ',' << format_double(q(3)) << ','
        << format_double(o.pose.translation.x()) << ',' << format_double(o.pose.translation.y())
        << ',' << format_double(o.pose.translation.z()) << '\n';
  }
}

void save_marker_field_csv(const std::filesystem::path& path,
                           const markers::MarkerFieldCalibration& field) {
  auto out = open_out(path);
  out << "marker_id,qw,qx,qy,qz,tx,ty,tz\n";
  for (const auto& [id, pose] : field.poses) {
    const Eigen::Vector4d q = quat_from_rotation(pose.rotation);
    out << id << ',' << format_double(q(0)) << ',' << format_double(q(1)) << ','
        << format_double(q(2)) << ',' << format_double(q(3)) << ','
        << format_double(pose.translation.x()) << ',' << format_double(pose.translation.y()) << ','
        << format_double(pose.translation.z()) << '\n';
  }
}

markers::MarkerFieldCalibration load_marker_field_csv(const std::filesystem::path& path,
                                                      int main_marker) {
  const CsvTable table(path);
  const std::size_t cm = table.column("marker_id");
  const std::array<std::size_t, 4> cq{table.column("qw"), table.column("qx"), table.column("qy"),
                                      table.column("qz")};
  const std::array<std::size_t, 3> cp{table.column("tx"), table.column("ty"), table.column("tz")};
  markers::MarkerFieldCalibration field;
  field.main_marker = main_marker;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const int id = static_cast<int>(table.integer(r, cm));
    Pose pose;
    pose.rotation = rotation_from_quat({table.number(r, cq[0]), table.number(r, cq[1]),
                                        table.number(r, cq[2]), table.number(r, cq[3])});
    pose.translation = {table.number(r, cp[0]), table.number(r, cp[1]), table.number(r, cp[2])};
    field.poses[id] = pose;
  }
  return field;
}

TimeSeries<vibration::MotorRates> load_motor_rates_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ct = table.column("t_s");
  const std::array<std::size_t, 4> cr{table.column("rate0"), table.column("rate1"),
                                      table.column("rate2"), table.column("rate3")};
  TimeSeries<vibration::MotorRates> out;
  out.reserve(table.rows());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < table.rows(); ++r) {
    Timestamped<vibration::MotorRates> s;
    s.t = table.number(r, ct);
    check_monotonic(prev, s.t, table.line_of(r));
    prev = s.t;
    for (std::size_t m = 0; m < 4; ++m) {
      s.value[m] = table.number(r, cr[m]);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<double, double>> load_rate_rpm_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ca = table.column("rate");
  const std::size_t cb = table.column("rpm");
  std::vector<std::pair<double, double>> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out.emplace_back(table.number(r, ca), table.number(r, cb));
  }
  return out;
}

std::vector<std::pair<double, double>> load_rpm_freq_csv(const std::filesystem::path& path) {
  const CsvTable table(path);
  const std::size_t ca = table.column("rpm");
  const std::size_t cb = table.column("peak_hz");
  std::vector<std::pair<double, double>> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out.emplace_back(table.number(r, ca), table.number(r, cb));
  }
  return out;
}

void save_power_spectrum_csv(const std::filesystem::path& path,
                             const vibration::PowerSpectrum& spec) {
  auto out = open_out(path);
  out << "freq_hz,power\n";
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    out << format_double(spec.freqs[k]) << ',' << format_double(spec.power[k]) << '\n';
  }
}

void save_spectrogram_csv(const std::filesystem::path& path, const vibration::Spectrogram& sg) {
  auto out = open_out(path);
  out << "t_s,freq_hz,power\n";
  for (std::size_t w = 0; w < sg.times.size(); ++w) {
    for (std::size_t k = 0; k < sg.freqs.size(); ++k) {
      out << format_double(sg.times[w]) << ',' << format_double(sg.freqs[k]) << ','
          << format_double(sg.power[w][k]) << '\n';
    }
  }
}

void save_allan_csv(const std::filesystem::path& path,
                    const std::vector<std::pair<double, double>>& taus_adev) {
  auto out = open_out(path);
  out << "tau_s,adev\n";
  for (const auto& [tau, adev] : taus_adev) {
    out << format_double(tau) << ',' << format_double(adev) << '\n';
  }
}

void save_resonance_overlay_csv(const std::filesystem::path& path,
                                const TimeSeries<vibration::MotorFreqs>& overlay) {
  auto out = open_out(path);
  out << "t_s,f0_hz,f1_hz,f2_hz,f3_hz\n";
  for (const auto& s : overlay) {
    out << format_double(s.t) << ',' << format_double(s.value[0]) << ','
        << format_double(s.value[1]) << ',' << format_double(s.value[2]) << ','
        << format_double(s.value[3]) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

}  // namespace gt::io
