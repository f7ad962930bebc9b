#include <doctest.h>

#include <cmath>

#include "gtkit/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace gt;
using namespace gt::pipeline;

TEST_CASE("noiseless forward model is recovered exactly") {
  synth::FlightOptions opts;
  opts.duration = 20.0;
  synth::Flight flight = synth::make_flight(opts);

  PipelineConfig cfg;
  cfg.antenna = flight.antenna;
  cfg.magnetic_model = flight.wmm;
  cfg.apply_timesync = false;  // no injected offsets, epochs already aligned

  const auto result = run_ground_truth(flight.dataset, cfg);
  CHECK(result.epochs_total > 150);
  CHECK(result.skipped.empty());
  REQUIRE(result.trajectory.size() == static_cast<std::size_t>(result.epochs_total));

  double max_rot = 0.0;
  double max_pos = 0.0;
  for (const auto& s : result.trajectory) {
    max_rot = std::max(max_rot, geodesic_distance(s.value.rotation, flight.rotation(s.t)));
    max_pos = std::max(max_pos, (s.value.translation - flight.position(s.t)).norm());
  }
  CHECK(max_rot < 1e-9);
  CHECK(max_pos < 1e-9);
}

TEST_CASE("degenerate epochs are skipped and reported") {
  synth::FlightOptions opts;
  opts.duration = 20.0;
  synth::Flight flight = synth::make_flight(opts);

  // Zero out the magnetometer at exact epoch times: the triad degenerates
  // there and nowhere else.
  int corrupted = 0;
  for (auto& s : flight.dataset.mag) {
    const double epoch_pos = s.t * 10.0;  // GNSS epochs at 10 Hz
    if (std::abs(epoch_pos - std::round(epoch_pos)) < 1e-9 &&
        static_cast<int>(std::round(epoch_pos)) % 20 == 5) {
      s.value = Vec3::Zero();
      ++corrupted;
    }
  }
  REQUIRE(corrupted > 3);

  PipelineConfig cfg;
  cfg.antenna = flight.antenna;
  cfg.magnetic_model = flight.wmm;
  cfg.apply_timesync = false;

  const auto result = run_ground_truth(flight.dataset, cfg);
  CHECK(result.skipped.size() == static_cast<std::size_t>(corrupted));
  CHECK(result.trajectory.size() + result.skipped.size() ==
        static_cast<std::size_t>(result.epochs_total));
  for (const auto& skip : result.skipped) {
    const double epoch_pos = skip.t * 10.0;
    CHECK(static_cast<int>(std::round(epoch_pos)) % 20 == 5);
  }
}

TEST_CASE("missing streams fail before processing") {
  synth::Flight flight = synth::make_flight({});
  PipelineConfig cfg;
  cfg.antenna = flight.antenna;

  Dataset no_mag = flight.dataset;
  no_mag.mag.clear();
  try {
    run_ground_truth(no_mag, cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }

  Dataset no_gnss = flight.dataset;
  no_gnss.gnss2.clear();
  CHECK_THROWS_AS(run_ground_truth(no_gnss, cfg), Error);
}

TEST_CASE("injected offsets are recovered by the cascade") {
  synth::FlightOptions opts;
  opts.duration = 90.0;
  opts.gnss_sigma = 0.002;
  opts.mag_sigma = 0.002;
  opts.gyro_sigma = 0.001;
  opts.gnss2_offset = 0.12;
  opts.mag_offset = 0.08;
  opts.imu_offset = 0.05;
  synth::Flight flight = synth::make_flight(opts);

  PipelineConfig cfg;
  cfg.antenna = flight.antenna;
  cfg.magnetic_model = flight.wmm;

  const auto result = run_ground_truth(flight.dataset, cfg);
  CHECK(std::abs(result.gnss2_offset.delta - 0.12) < 0.01);
  REQUIRE(result.mag_offset.has_value());
  CHECK(std::abs(result.mag_offset->delta - 0.08) < 0.01);
  REQUIRE(result.imu_offset.has_value());
  CHECK(std::abs(result.imu_offset->delta - 0.05) < 0.01);

  // Output epochs are shifted G2 epochs.
  CHECK(!result.trajectory.empty());
  const double first_epoch = result.trajectory.front().t;
  double matched = 1e9;
  for (const auto& g2 : flight.dataset.gnss2) {
    matched = std::min(matched, std::abs(g2.t - result.gnss2_offset.delta - first_epoch));
  }
  CHECK(matched < 1e-9);
}

TEST_CASE("fix filtering honors the config") {
  synth::Flight flight = synth::make_flight({});
  auto& g1 = flight.dataset.gnss1;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    if (i % 3 == 1) g1[i].value.fix = io::RtkFix::Float;
    if (i % 3 == 2) g1[i].value.fix = io::RtkFix::NoRtk;
  }

  PipelineConfig cfg;
  cfg.antenna = flight.antenna;
  cfg.magnetic_model = flight.wmm;
  cfg.apply_timesync = false;

  const auto result = run_ground_truth(flight.dataset, cfg);
  CHECK(result.fix_gnss1.rtk_float > 0);
  CHECK(result.fix_gnss1.rejected > 0);

  cfg.accept_float = false;
  const auto strict = run_ground_truth(flight.dataset, cfg);
  CHECK(strict.fix_gnss1.rtk_float == 0);
  CHECK(strict.fix_gnss1.rejected > result.fix_gnss1.rejected);
}

TEST_CASE("report json is deterministic") {
  synth::FlightOptions opts;
  opts.duration = 15.0;
  opts.gnss_sigma = 0.005;
  synth::Flight flight = synth::make_flight(opts);

  PipelineConfig cfg;
  cfg.antenna = flight.antenna;
  cfg.magnetic_model = flight.wmm;
  cfg.apply_timesync = false;

  const auto r1 = run_ground_truth(flight.dataset, cfg);
  const auto r2 = run_ground_truth(flight.dataset, cfg);
  CHECK(report_json(r1, cfg).dump(2) == report_json(r2, cfg).dump(2));
  REQUIRE(r1.trajectory.size() == r2.trajectory.size());
  for (std::size_t i = 0; i < r1.trajectory.size(); ++i) {
    CHECK((r1.trajectory[i].value.translation - r2.trajectory[i].value.translation).norm() == 0.0);
  }
}

TEST_CASE("imu channel extraction") {
  synth::Flight flight = synth::make_flight({});
  const auto sig = imu_channel_signal(flight.dataset.imu, "gnorm");
  CHECK(sig.sample_rate == doctest::Approx(200.0).epsilon(0.01));
  CHECK(sig.values.size() == flight.dataset.imu.size());
  CHECK_THROWS_AS(imu_channel_signal(flight.dataset.imu, "bogus"), Error);
}
