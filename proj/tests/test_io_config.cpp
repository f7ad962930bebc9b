#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtkit/config.hpp"
#include "gtkit/io.hpp"
#include "support/synthetic.hpp"

using namespace gt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "gtkit_io_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gnss csv parsing") {
  const fs::path dir = scratch_dir();
  SUBCASE("well-formed file") {
    const fs::path p = dir / "gnss_ok.csv";
    write_file(p,
               "t_s,east_m,north_m,up_m,fix,cov_e_m2,cov_n_m2,cov_u_m2\n"
               "0.0,1.5,2.5,3.5,2,1e-4,1e-4,2e-4\n"
               "0.1,1.6,2.6,3.6,1,1e-4,1e-4,2e-4\n"
               "0.2,1.7,2.7,3.7,0,1e-4,1e-4,2e-4\n");
    const auto series = io::load_gnss_csv(p);
    REQUIRE(series.size() == 3);
    CHECK(series[0].value.fix == io::RtkFix::Fixed);
    CHECK(series[1].value.fix == io::RtkFix::Float);
    CHECK(series[2].value.fix == io::RtkFix::NoRtk);
    CHECK((series[1].value.position - Vec3(1.6, 2.6, 3.6)).norm() == 0.0);
  }
  SUBCASE("non-monotonic time names the row") {
    const fs::path p = dir / "gnss_bad_time.csv";
    write_file(p,
               "t_s,east_m,north_m,up_m\n"
               "0.0,0,0,0\n"
               "0.2,0,0,0\n"
               "0.1,0,0,0\n");
    try {
      io::load_gnss_csv(p);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonMonotonicTime);
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }
  SUBCASE("missing column") {
    const fs::path p = dir / "gnss_missing.csv";
    write_file(p, "t_s,east_m,north_m\n0.0,0,0\n");
    try {
      io::load_gnss_csv(p);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingColumn);
      CHECK(std::string(e.what()).find("up_m") != std::string::npos);
    }
  }
  SUBCASE("bad number names the row") {
    const fs::path p = dir / "gnss_bad_num.csv";
    write_file(p, "t_s,east_m,north_m,up_m\n0.0,0,zzz,0\n");
    try {
      io::load_gnss_csv(p);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}

TEST_CASE("round trips through the writers") {
  const fs::path dir = scratch_dir();
  SUBCASE("gnss write-parse-write is byte stable") {
    TimeSeries<io::GnssSample> series;
    std::mt19937_64 rng(61);
    for (int i = 0; i < 20; ++i) {
      Timestamped<io::GnssSample> s;
      s.t = 0.1 * i + 1.7e9;
      s.value.position = synth::random_vec(rng, 100.0);
      s.value.fix = io::RtkFix::Fixed;
      s.value.cov = Vec3(1e-4, 1e-4, 4e-4);
      series.push_back(s);
    }
    const fs::path p1 = dir / "rt1.csv";
    const fs::path p2 = dir / "rt2.csv";
    io::save_gnss_csv(p1, series);
    io::save_gnss_csv(p2, io::load_gnss_csv(p1));
    CHECK(read_file(p1) == read_file(p2));
  }
  SUBCASE("pose csv canonical quaternion sign") {
    TimeSeries<Pose> series;
    std::mt19937_64 rng(62);
    for (int i = 0; i < 10; ++i) {
      series.push_back({0.5 * i, {synth::random_rotation(rng), synth::random_vec(rng, 10.0)}});
    }
    const fs::path p1 = dir / "pose1.csv";
    const fs::path p2 = dir / "pose2.csv";
    io::save_pose_csv(p1, series);
    const auto loaded = io::load_pose_csv(p1);
    io::save_pose_csv(p2, loaded);
    CHECK(read_file(p1) == read_file(p2));
    REQUIRE(loaded.size() == series.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      CHECK(geodesic_distance(loaded[i].value.rotation, series[i].value.rotation) < 1e-12);
      CHECK(quat_from_rotation(loaded[i].value.rotation)(0) >= 0.0);
    }
  }
  SUBCASE("format_double survives parse round trip") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1.7e9 + 0.123456789, 0.0}) {
      const std::string text = io::format_double(v);
      CHECK(std::stod(text) == v);
    }
  }
}

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto cfg = pipeline::parse_config_text("");
    CHECK(cfg.alpha == 50.0);
    CHECK(cfg.method == attitude::Method::WahbaSvd);
    CHECK(cfg.rpm_cal.a0 == doctest::Approx(168.5541));
    CHECK(cfg.resonance.a1 == doctest::Approx(0.0161));
    CHECK(cfg.antenna.baseline() == doctest::Approx(1.2).epsilon(1e-4));
  }
  SUBCASE("full configuration") {
    const std::string text = R"(
# ground-truth pipeline settings
antenna.p_imu_g1 = 0.5 -0.5 0.1
antenna.p_imu_g2 = -0.5 0.5 0.1
antenna.r_vg_imu = 1 0 0 0
mag.declination_deg = 4.15
mag.inclination_deg = 63.133333
mag.field_strength_nt = 48300.8
mag.b_ct = 0.01 -0.02 0.005
mag.t_sp = 1.1 0 0 0 0.9 0 0 0 1.0
attitude.method = tangent
attitude.alpha = 25
gnss.accept_float = false
timesync.max_lag_s = 1.5
markers.n_paths = 64
markers.seed = 77
vibration.rpm_cal = 170 12 -0.002
vibration.allan_channel = gz
)";
    const auto cfg = pipeline::parse_config_text(text);
    CHECK(cfg.method == attitude::Method::TangentGn);
    CHECK(cfg.alpha == 25.0);
    CHECK_FALSE(cfg.accept_float);
    CHECK(cfg.max_lag_s == 1.5);
    CHECK(cfg.marker_paths == 64);
    CHECK(cfg.seed == 77);
    CHECK(cfg.magnetic_model.declination == doctest::Approx(4.15 * synth::kDeg));
    CHECK(cfg.mag_intrinsics.t_sp(1, 1) == 0.9);
    CHECK(cfg.rpm_cal.a1 == 12.0);
    CHECK(cfg.allan_channel == "gz");
  }
  SUBCASE("unknown key rejected") {
    try {
      pipeline::parse_config_text("attitude.alhpa = 50\n");
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      CHECK(std::string(e.what()).find("alhpa") != std::string::npos);
    }
  }
  SUBCASE("invalid values rejected") {
    CHECK_THROWS_AS(pipeline::parse_config_text("attitude.alpha = -3\n"), Error);
    CHECK_THROWS_AS(pipeline::parse_config_text("attitude.method = qwert\n"), Error);
    CHECK_THROWS_AS(pipeline::parse_config_text("mag.inclination_deg = 95\n"), Error);
    CHECK_THROWS_AS(pipeline::parse_config_text("antenna.p_imu_g1 = 1 2\n"), Error);
    CHECK_THROWS_AS(pipeline::parse_config_text("vibration.overlap = 1.0\n"), Error);
    CHECK_THROWS_AS(pipeline::parse_config_text("attitude.alpha = 50\nattitude.alpha = 60\n"),
                    Error);
  }
}
