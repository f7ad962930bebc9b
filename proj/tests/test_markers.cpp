#include <doctest.h>

#include <algorithm>
#include <random>

#include "gtkit/markers.hpp"
#include "support/synthetic.hpp"

using namespace gt;
using namespace gt::markers;

namespace {

MarkerObservation observe(std::int64_t image, int id, const Pose& t_cam_marker) {
  return {image, id, t_cam_marker};
}

Pose pose_rt(const Mat3& r, const Vec3& t) { return {r, t}; }

}  // namespace

TEST_CASE("pairwise extraction") {
  std::mt19937_64 rng(41);
  SUBCASE("single image, one pair") {
    const Pose cam_m0 = pose_rt(synth::random_rotation(rng), Vec3(0.5, 0, 2));
    const Pose cam_m1 = pose_rt(synth::random_rotation(rng), Vec3(-0.5, 0.2, 2));
    const auto pairwise = extract_pairwise({observe(0, 0, cam_m0), observe(0, 1, cam_m1)});
    REQUIRE(pairwise.size() == 1);
    CHECK(pairwise[0].i == 1);
    CHECK(pairwise[0].j == 0);
    REQUIRE(pairwise[0].samples.size() == 1);
    // Composed by hand: T_10 = T_cam_1^-1 * T_cam_0.
    const Pose expected = cam_m1.inverse().compose(cam_m0);
    CHECK(geodesic_distance(pairwise[0].samples[0].rotation, expected.rotation) < 1e-12);
    CHECK((pairwise[0].samples[0].translation - expected.translation).norm() < 1e-12);
  }
  SUBCASE("lone marker produces no pairs") {
    CHECK(extract_pairwise({observe(0, 3, Pose{})}).empty());
  }
  SUBCASE("repeated geometry accumulates samples") {
    const Pose cam_m0 = pose_rt(Mat3::Identity(), Vec3(0, 0, 2));
    const Pose cam_m2 = pose_rt(Mat3::Identity(), Vec3(1, 0, 2));
    std::vector<MarkerObservation> obs;
    for (int image = 0; image < 5; ++image) {
      obs.push_back(observe(image, 0, cam_m0));
      obs.push_back(observe(image, 2, cam_m2));
    }
    const auto pairwise = extract_pairwise(obs);
    REQUIRE(pairwise.size() == 1);
    CHECK(pairwise[0].samples.size() == 5);
  }
  SUBCASE("pairwise transforms compose consistently") {
    const Pose cam_m0 = pose_rt(synth::random_rotation(rng), Vec3(0, 0, 2));
    const Pose cam_m1 = pose_rt(synth::random_rotation(rng), Vec3(1, 0, 2));
    const Pose cam_m2 = pose_rt(synth::random_rotation(rng), Vec3(0, 1, 2));
    const auto pairwise =
        extract_pairwise({observe(0, 0, cam_m0), observe(0, 1, cam_m1), observe(0, 2, cam_m2)});
    REQUIRE(pairwise.size() == 3);
    // (2,1) o (1,0) == (2,0) on exact data.
    const auto find = [&](int i, int j) {
      for (const auto& pt : pairwise) {
        if (pt.i == i && pt.j == j) return pt.samples[0];
      }
      REQUIRE(false);
      return Pose{};
    };
    const Pose t21 = find(2, 1);
    const Pose t10 = find(1, 0);
    const Pose t20 = find(2, 0);
    const Pose composed = t21.compose(t10);
    CHECK(geodesic_distance(composed.rotation, t20.rotation) < 1e-12);
    CHECK((composed.translation - t20.translation).norm() < 1e-12);
  }
}

TEST_CASE("pairwise filtering and mean") {
  SUBCASE("identical samples") {
    PairwiseTransform pt;
    pt.i = 1;
    pt.j = 0;
    const Pose p = pose_rt(synth::rot_z(0.3), Vec3(1, 2, 3));
    pt.samples.assign(4, p);
    const Pose mean = filter_and_mean(pt);
    CHECK(geodesic_distance(mean.rotation, p.rotation) < 1e-12);
    CHECK((mean.translation - p.translation).norm() < 1e-12);
    CHECK_FALSE(pt.filter_fallback);
  }
  SUBCASE("single outlier rejected") {
    PairwiseTransform pt;
    pt.i = 1;
    pt.j = 0;
    for (int i = 0; i < 9; ++i) {
      pt.samples.push_back(Pose{});
    }
    pt.samples.push_back(pose_rt(Mat3::Identity(), Vec3(0.1, 0, 0)));
    const Pose mean = filter_and_mean(pt);
    CHECK(mean.translation.norm() < 1e-12);
  }
  SUBCASE("two samples both retained") {
    PairwiseTransform pt;
    pt.i = 1;
    pt.j = 0;
    pt.samples.push_back(pose_rt(Mat3::Identity(), Vec3(0, 0, 0)));
    pt.samples.push_back(pose_rt(Mat3::Identity(), Vec3(0.2, 0, 0)));
    const Pose mean = filter_and_mean(pt);
    CHECK((mean.translation - Vec3(0.1, 0, 0)).norm() < 1e-12);
  }
}

TEST_CASE("geometric median") {
  SUBCASE("definition check against inputs") {
    std::mt19937_64 rng(42);
    std::vector<Vec3> points;
    for (int i = 0; i < 15; ++i) {
      points.push_back(synth::random_vec(rng, 2.0));
    }
    const Vec3 median = geometric_median(points);
    const auto cost = [&](const Vec3& x) {
      double c = 0.0;
      for (const auto& p : points) c += (p - x).norm();
      return c;
    };
    const double best = cost(median);
    for (const auto& p : points) {
      CHECK(best <= cost(p) + 1e-9);
    }
  }
  SUBCASE("matches brute force on a 2-D toy set") {
    const std::vector<Vec3> points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 2, 0}, {0.4, 0.3, 0}};
    const Vec3 median = geometric_median(points, 1e-12, 10000);
    const auto cost = [&](double x, double y) {
      double c = 0.0;
      for (const auto& p : points) c += (p - Vec3(x, y, 0)).norm();
      return c;
    };
    // Coarse-to-fine grid search.
    double bx = 0.0, by = 0.0, best = cost(0, 0);
    double span = 2.0, step = 0.01;
    for (int refine = 0; refine < 3; ++refine) {
      const double cx = bx, cy = by;
      for (double x = cx - span; x <= cx + span; x += step) {
        for (double y = cy - span; y <= cy + span; y += step) {
          const double c = cost(x, y);
          if (c < best) {
            best = c;
            bx = x;
            by = y;
          }
        }
      }
      span = 2.0 * step;
      step /= 10.0;
    }
    CHECK((median - Vec3(bx, by, 0)).norm() < 1e-4);
    CHECK(std::abs(median.z()) < 1e-12);
  }
  SUBCASE("iterate landing on a data point stays stable") {
    const std::vector<Vec3> points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const Vec3 median = geometric_median(points);
    CHECK((median - Vec3(0.5, 0.5, 0)).norm() < 1e-8);
  }
}

TEST_CASE("field calibration") {
  SUBCASE("chain of exact edges") {
    // 0 - 1 - 2 with known relative poses.
    std::vector<PairwiseTransform> pairwise(2);
    pairwise[0].i = 1;
    pairwise[0].j = 0;
    pairwise[0].samples.push_back(pose_rt(synth::rot_z(0.2), Vec3(1, 0, 0)));
    pairwise[1].i = 2;
    pairwise[1].j = 1;
    pairwise[1].samples.push_back(pose_rt(synth::rot_z(-0.1), Vec3(0, 1, 0)));

    const auto field = calibrate_field(pairwise, 0, {8, 7});
    REQUIRE(field.poses.size() == 3);
    // pose of 1 in 0's frame: T_01 = T_10^-1.
    const Pose t10 = pose_rt(synth::rot_z(0.2), Vec3(1, 0, 0));
    const Pose expected1 = t10.inverse();
    CHECK(geodesic_distance(field.poses.at(1).rotation, expected1.rotation) < 1e-12);
    CHECK((field.poses.at(1).translation - expected1.translation).norm() < 1e-12);
    const Pose t21 = pose_rt(synth::rot_z(-0.1), Vec3(0, 1, 0));
    const Pose expected2 = expected1.compose(t21.inverse());
    CHECK(geodesic_distance(field.poses.at(2).rotation, expected2.rotation) < 1e-12);
    CHECK((field.poses.at(2).translation - expected2.translation).norm() < 1e-12);
  }
  SUBCASE("disconnected marker reported") {
    std::vector<PairwiseTransform> pairwise(2);
    pairwise[0].i = 1;
    pairwise[0].j = 0;
    pairwise[0].samples.push_back(Pose{});
    pairwise[1].i = 5;
    pairwise[1].j = 4;
    pairwise[1].samples.push_back(Pose{});
    const auto field = calibrate_field(pairwise, 0, {4, 1});
    CHECK(field.poses.contains(1));
    CHECK(!field.poses.contains(4));
    CHECK(std::count(field.disconnected.begin(), field.disconnected.end(), 4) == 1);
    CHECK(std::count(field.disconnected.begin(), field.disconnected.end(), 5) == 1);
  }
  SUBCASE("median of randomized paths beats the corrupted shortest path") {
    const int main_marker = 7;
    const auto grid = synth::grid_field(4, 5, 1.0, 0.001, Vec3(0.2, 0, 0), {8, 7}, 11);
    const auto field = calibrate_field(grid.pairwise, main_marker, {32, 5});

    double max_err = 0.0;
    for (const auto& [id, truth] : grid.truth) {
      REQUIRE(field.poses.contains(id));
      const Vec3 estimated = grid.truth.at(main_marker) + field.poses.at(id).translation;
      max_err = std::max(max_err, (estimated - truth).norm());
    }
    // The shortest path to marker 8 runs straight through the corrupted edge
    // and would carry its full 0.2 m error.
    CHECK(max_err <= 2.0 * grid.edge_noise_rms);
    CHECK(max_err < 0.02);
  }
  SUBCASE("marker enumeration order does not matter on exact data") {
    std::mt19937_64 rng(43);
    auto grid = synth::grid_field(3, 3, 1.0, 0.0, Vec3::Zero(), {-1, -1}, 3);
    const auto base = calibrate_field(grid.pairwise, 4, {16, 9});
    std::shuffle(grid.pairwise.begin(), grid.pairwise.end(), rng);
    const auto shuffled = calibrate_field(grid.pairwise, 4, {16, 10});
    for (const auto& [id, pose] : base.poses) {
      CHECK((shuffled.poses.at(id).translation - pose.translation).norm() < 1e-10);
      CHECK(geodesic_distance(shuffled.poses.at(id).rotation, pose.rotation) < 1e-10);
    }
  }
}

TEST_CASE("vehicle pose from detections") {
  SUBCASE("single marker inverse") {
    MarkerFieldCalibration field;
    field.main_marker = 0;
    field.poses[0] = Pose{};
    const Pose detection = pose_rt(Mat3::Identity(), Vec3(0, 0, 2));
    const Pose cam = vehicle_pose_from_markers({observe(0, 0, detection)}, field);
    const Pose expected = detection.inverse();
    CHECK((cam.translation - expected.translation).norm() < 1e-12);
    CHECK(geodesic_distance(cam.rotation, expected.rotation) < 1e-12);
  }
  SUBCASE("four co-visible markers agree") {
    std::mt19937_64 rng(44);
    MarkerFieldCalibration field;
    field.main_marker = 0;
    const Pose t_field_cam = pose_rt(synth::random_rotation(rng), Vec3(1, 2, 3));
    std::vector<MarkerObservation> obs;
    for (int id = 0; id < 4; ++id) {
      const Pose marker_in_field = pose_rt(synth::random_rotation(rng), synth::random_vec(rng, 2.0));
      field.poses[id] = marker_in_field;
      // T_cam_marker = T_cam_field * T_field_marker.
      obs.push_back(observe(0, id, t_field_cam.inverse().compose(marker_in_field)));
    }
    const Pose fused = vehicle_pose_from_markers(obs, field);
    CHECK((fused.translation - t_field_cam.translation).norm() < 1e-10);
    CHECK(geodesic_distance(fused.rotation, t_field_cam.rotation) < 1e-10);
  }
  SUBCASE("no known markers") {
    MarkerFieldCalibration field;
    field.main_marker = 0;
    field.poses[0] = Pose{};
    try {
      vehicle_pose_from_markers({observe(0, 9, Pose{})}, field);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoKnownMarkers);
    }
  }
}
