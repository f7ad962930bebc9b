#include <doctest.h>

#include <random>

#include "gtkit/attitude.hpp"
#include "support/synthetic.hpp"

using namespace gt;
using namespace gt::attitude;

TEST_CASE("world magnetic vector") {
  CHECK((world_mag_vector({0.0, 0.0, 0.0}).vec() - Vec3(0, 1, 0)).norm() < 1e-15);
  CHECK((world_mag_vector({0.0, synth::kPi / 2.0, 0.0}).vec() - Vec3(0, 0, -1)).norm() < 1e-15);

  const auto m = world_mag_vector(synth::klagenfurt_model());
  CHECK((m.vec() - Vec3(0.0327, 0.4509, -0.8920)).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(std::abs(m.vec().norm() - 1.0) < 1e-12);
}

TEST_CASE("triad construction") {
  SUBCASE("world triad") {
    const auto triad = build_world_triad(Vec3(1.2, 0, 0), Vec3::Zero(), UnitVec3(Vec3(0, 1, 0)));
    CHECK((triad.g.vec() - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((triad.c.vec() - Vec3(0, 0, 1)).norm() < 1e-15);
  }
  SUBCASE("coincident antennas") {
    CHECK_THROWS_WITH_AS(build_world_triad(Vec3(1, 1, 1), Vec3(1, 1, 1), UnitVec3(Vec3(0, 1, 0))),
                         doctest::Contains("baseline"), Error);
  }
  SUBCASE("parallel vectors") {
    try {
      build_world_triad(Vec3(1.2, 0, 0), Vec3::Zero(), UnitVec3(Vec3(1, 0, 0)));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParallelVectors);
    }
  }
  SUBCASE("body triad") {
    AntennaCalibration cal{Vec3(0.6, -0.6, 0), Vec3(-0.6, 0.6, 0), Mat3::Identity()};
    const auto triad =
        build_body_triad(cal, Vec3(0, 1, 0), magcal::EllipsoidCalibration{}, Mat3::Identity());
    CHECK((triad.g.vec() - Vec3(0.70710678, -0.70710678, 0)).norm() < 1e-8);
    CHECK((triad.m.vec() - Vec3(0, 1, 0)).norm() < 1e-15);

    CHECK_THROWS_AS(
        build_body_triad(cal, Vec3::Zero(), magcal::EllipsoidCalibration{}, Mat3::Identity()),
        Error);
  }
}

TEST_CASE("linear solver") {
  std::mt19937_64 rng(11);
  SUBCASE("identity") {
    const auto pair = synth::random_triad_pair(rng, Mat3::Identity());
    const auto est = solve_rotation_linear(pair.world, pair.body);
    CHECK(geodesic_distance(est.rotation, Mat3::Identity()) < 1e-12);
  }
  SUBCASE("quarter turn") {
    const Mat3 r = synth::rot_z(synth::kPi / 2.0);
    const auto pair = synth::random_triad_pair(rng, r);
    const auto est = solve_rotation_linear(pair.world, pair.body);
    CHECK(geodesic_distance(est.rotation, r) < 1e-12);
  }
  SUBCASE("random rotations") {
    for (int i = 0; i < 1000; ++i) {
      const Mat3 r = synth::random_rotation(rng);
      const auto pair = synth::random_triad_pair(rng, r);
      const auto est = solve_rotation_linear(pair.world, pair.body);
      CHECK(geodesic_distance(est.rotation, r) < 1e-10);
    }
  }
}

TEST_CASE("tangent-space solver") {
  std::mt19937_64 rng(12);
  SUBCASE("identity converges immediately") {
    const auto pair = synth::random_triad_pair(rng, Mat3::Identity());
    const auto est = solve_rotation_tangent(pair.world, pair.body, TangentVector::Zero());
    CHECK(est.iterations == 0);
    CHECK(geodesic_distance(est.rotation, Mat3::Identity()) < 1e-12);
  }
  SUBCASE("quarter turn from zero init") {
    const Mat3 r = synth::rot_z(synth::kPi / 2.0);
    const auto pair = synth::random_triad_pair(rng, r);
    const auto est = solve_rotation_tangent(pair.world, pair.body, TangentVector::Zero());
    CHECK(geodesic_distance(est.rotation, r) < 1e-9);
  }
  SUBCASE("analytic Jacobian matches central differences") {
    // Blocks of dh/domega for h(omega) = blockdiag(exp(omega)) * stacked body
    // vectors, perturbed multiplicatively on the right.
    const double h = 1e-6;
    double max_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Vec3 omega = synth::random_vec(rng, 1.0);
      const Mat3 r = exp_so3(omega);
      const Vec3 v = synth::random_unit(rng);
      const Mat3 analytic = -r * skew(v);
      Mat3 fd;
      for (int k = 0; k < 3; ++k) {
        Vec3 delta = Vec3::Zero();
        delta(k) = h;
        fd.col(k) = (r * exp_so3(delta) * v - r * exp_so3(-delta) * v) / (2.0 * h);
      }
      max_rel = std::max(max_rel,
                         (analytic - fd).cwiseAbs().maxCoeff() / analytic.cwiseAbs().maxCoeff());
    }
    CHECK(max_rel < 1e-5);
  }
}

TEST_CASE("wahba solver") {
  std::mt19937_64 rng(13);
  SUBCASE("identity for any alpha") {
    const auto pair = synth::random_triad_pair(rng, Mat3::Identity());
    for (double alpha : {1.0, 50.0, 1000.0}) {
      const auto est = solve_rotation_wahba(pair.world, pair.body, alpha);
      CHECK(geodesic_distance(est.rotation, Mat3::Identity()) < 1e-12);
    }
  }
  SUBCASE("alpha-independent on consistent data") {
    const Mat3 r = synth::rot_z(synth::kPi / 2.0);
    const auto pair = synth::random_triad_pair(rng, r);
    const Mat3 r1 = solve_rotation_wahba(pair.world, pair.body, 1.0).rotation;
    const Mat3 r50 = solve_rotation_wahba(pair.world, pair.body, 50.0).rotation;
    const Mat3 r1000 = solve_rotation_wahba(pair.world, pair.body, 1000.0).rotation;
    CHECK(geodesic_distance(r1, r) < 1e-10);
    CHECK(geodesic_distance(r1, r50) < 1e-10);
    CHECK(geodesic_distance(r50, r1000) < 1e-10);
  }
  SUBCASE("uniform weight scaling invariance") {
    for (int i = 0; i < 50; ++i) {
      const auto pair = synth::random_triad_pair(rng, synth::random_rotation(rng));
      const Mat3 base = solve_rotation_wahba_weighted(pair.world, pair.body, {50, 1, 1}).rotation;
      const Mat3 scaled =
          solve_rotation_wahba_weighted(pair.world, pair.body, {50 * 7.3, 7.3, 7.3}).rotation;
      CHECK(geodesic_distance(base, scaled) < 1e-12);
    }
  }
  SUBCASE("gnss weight dominates magnetometer disturbance") {
    const Mat3 r = synth::random_rotation(rng);
    const auto pair = synth::random_triad_pair(rng, r);
    // Disturb the body-frame field by 5 degrees about the baseline axis.
    const Mat3 disturb = exp_so3(5.0 * synth::kDeg * pair.body.g.vec());
    const auto body =
        DirectionalTriad::from_gm(pair.body.g.vec(), disturb * pair.body.m.vec());
    const auto est = solve_rotation_wahba(pair.world, body, 50.0);
    const double g_err = std::acos(std::clamp(
        (est.rotation * body.g.vec()).dot(pair.world.g.vec()), -1.0, 1.0));
    const double m_err = std::acos(std::clamp(
        (est.rotation * body.m.vec()).dot(pair.world.m.vec()), -1.0, 1.0));
    CHECK(g_err < m_err);
    CHECK(g_err < 0.5 * synth::kDeg);  // alpha = 50 pins the baseline
  }
  SUBCASE("maximizes trace(R^T A) over random rotations") {
    for (int trial = 0; trial < 20; ++trial) {
      const Mat3 r_true = synth::random_rotation(rng);
      const auto pair = synth::random_triad_pair(rng, r_true);
      const double alpha = 50.0;
      Mat3 profile = alpha * pair.world.g.vec() * pair.body.g.vec().transpose() +
                     pair.world.m.vec() * pair.body.m.vec().transpose() +
                     pair.world.c.vec() * pair.body.c.vec().transpose();
      const Mat3 best = solve_rotation_wahba(pair.world, pair.body, alpha).rotation;
      const double best_trace = (best.transpose() * profile).trace();
      for (int s = 0; s < 10000; ++s) {
        const Mat3 sample = synth::random_rotation(rng);
        CHECK((sample.transpose() * profile).trace() <= best_trace + 1e-9);
      }
    }
  }
}

TEST_CASE("all three solvers agree on noiseless triads") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = synth::random_rotation(rng);
    const auto pair = synth::random_triad_pair(rng, r);
    const Mat3 rl = solve_rotation_linear(pair.world, pair.body).rotation;
    const Mat3 rt = solve_rotation_tangent(pair.world, pair.body).rotation;
    const Mat3 rw = solve_rotation_wahba(pair.world, pair.body).rotation;
    CHECK(geodesic_distance(rl, r) < 1e-8);
    CHECK(geodesic_distance(rt, r) < 1e-8);
    CHECK(geodesic_distance(rw, r) < 1e-8);
    CHECK(geodesic_distance(rl, rt) < 1e-8);
    CHECK(geodesic_distance(rt, rw) < 1e-8);
  }
}

TEST_CASE("pose epoch estimation") {
  const AntennaCalibration cal{Vec3(0.6, -0.6, 0), Vec3(-0.6, 0.6, 0), Mat3::Identity()};
  const WorldMagneticModel wmm = synth::klagenfurt_model();

  SUBCASE("static vehicle aligned with ENU") {
    const Vec3 origin(3.0, -2.0, 1.0);
    const Timestamped<Vec3> g1{0.0, origin + cal.p_imu_g1};
    const Timestamped<Vec3> g2{0.0, origin + cal.p_imu_g2};
    const Vec3 mag = world_mag_vector(wmm).vec() * 48.3;
    const auto est = estimate_pose_epoch(g1, g2, mag, cal, {}, Mat3::Identity(), wmm,
                                         Method::WahbaSvd);
    CHECK(geodesic_distance(est.pose.value.rotation, Mat3::Identity()) < 1e-9);
    CHECK((est.pose.value.translation - origin).norm() < 1e-9);
    // pose = (I, p_W_G2 - p_I_G2)
    CHECK((est.pose.value.translation - (g2.value - cal.p_imu_g2)).norm() < 1e-9);
  }

  SUBCASE("synthetic epochs across methods") {
    std::mt19937_64 rng(15);
    const Vec3 m_world = world_mag_vector(wmm).vec() * 48.3;
    for (Method method : {Method::LinearLs, Method::TangentGn, Method::WahbaSvd}) {
      for (int i = 0; i < 50; ++i) {
        const Mat3 r = synth::random_rotation(rng);
        const Vec3 p = synth::random_vec(rng, 20.0);
        const Timestamped<Vec3> g1{1.0, p + r * cal.p_imu_g1};
        const Timestamped<Vec3> g2{1.0, p + r * cal.p_imu_g2};
        const Vec3 mag = r.transpose() * m_world;
        const auto est =
            estimate_pose_epoch(g1, g2, mag, cal, {}, Mat3::Identity(), wmm, method);
        CHECK(geodesic_distance(est.pose.value.rotation, r) < 1e-9);
        CHECK((est.pose.value.translation - p).norm() < 1e-12);
        CHECK(est.pose.t == 1.0);
      }
    }
  }

  SUBCASE("yaw equivariance of the full epoch estimate") {
    std::mt19937_64 rng(16);
    const double q_yaw = 0.7;
    const Mat3 q = synth::rot_z(q_yaw);
    const Mat3 r = synth::random_rotation(rng);
    const Vec3 p = synth::random_vec(rng, 10.0);
    const Vec3 m_world = world_mag_vector(wmm).vec() * 48.3;

    const Timestamped<Vec3> g1{0.0, p + r * cal.p_imu_g1};
    const Timestamped<Vec3> g2{0.0, p + r * cal.p_imu_g2};
    const Vec3 mag = r.transpose() * m_world;
    const auto base = estimate_pose_epoch(g1, g2, mag, cal, {}, Mat3::Identity(), wmm,
                                          Method::WahbaSvd);

    // Rotating the world by yaw q is a declination change of -q.
    WorldMagneticModel wmm_rot = wmm;
    wmm_rot.declination -= q_yaw;
    const Timestamped<Vec3> g1r{0.0, q * g1.value};
    const Timestamped<Vec3> g2r{0.0, q * g2.value};
    const auto rotated = estimate_pose_epoch(g1r, g2r, mag, cal, {}, Mat3::Identity(), wmm_rot,
                                             Method::WahbaSvd);
    CHECK(geodesic_distance(rotated.pose.value.rotation, q * base.pose.value.rotation) < 1e-9);
    CHECK((rotated.pose.value.translation - q * base.pose.value.translation).norm() < 1e-9);
  }

  SUBCASE("disturbed magnetometer bounded by weight ratio") {
    std::mt19937_64 rng(17);
    const Mat3 r = synth::random_rotation(rng);
    const Vec3 p = synth::random_vec(rng, 10.0);
    const Vec3 m_world = world_mag_vector(wmm).vec() * 48.3;
    const Timestamped<Vec3> g1{0.0, p + r * cal.p_imu_g1};
    const Timestamped<Vec3> g2{0.0, p + r * cal.p_imu_g2};
    // 20 degree disturbance of the field in the body frame.
    const Vec3 g_body = (cal.p_imu_g1 - cal.p_imu_g2).normalized();
    const Vec3 mag = exp_so3(20.0 * synth::kDeg * g_body) * (r.transpose() * m_world);
    const auto est = estimate_pose_epoch(g1, g2, mag, cal, {}, Mat3::Identity(), wmm,
                                         Method::WahbaSvd, 50.0);
    const double err = geodesic_distance(est.pose.value.rotation, r);
    CHECK(err < 20.0 * synth::kDeg);  // bounded well below the disturbance
    CHECK(err < 5.0 * synth::kDeg);
  }
}

TEST_CASE("worst-case heading error") {
  CHECK(worst_case_heading_error(0.01, 1.2) / synth::kDeg == doctest::Approx(0.9548).epsilon(2e-4));
  CHECK(worst_case_heading_error(0.0, 1.2) == 0.0);
  CHECK(worst_case_heading_error(0.05, 1.0) / synth::kDeg ==
        doctest::Approx(5.7106).epsilon(1e-4));
}
