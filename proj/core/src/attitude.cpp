#include "gtkit/attitude.hpp"

#include <cmath>

namespace gt::attitude {

DirectionalTriad DirectionalTriad::from_gm(const Vec3& g, const Vec3& m, double parallel_tol) {
  const double gn = g.norm();
  const double mn = m.norm();
  if (!(gn > 0.0) || !(mn > 0.0)) {
    throw Error(ErrorCode::ParallelVectors, "triad input vector has zero norm");
  }
  const Vec3 gu = g / gn;
  const Vec3 mu = m / mn;
  const Vec3 cross = gu.cross(mu);
  if (cross.norm() <= parallel_tol) {
    throw Error(ErrorCode::ParallelVectors, "g and m are parallel; triad underdetermined");
  }
  return DirectionalTriad{UnitVec3(gu), UnitVec3(mu), UnitVec3(cross)};
}

UnitVec3 world_mag_vector(const WorldMagneticModel& model) {
  const double cd = std::cos(model.declination);
  const double sd = std::sin(model.declination);
  const double ci = std::cos(model.inclination);
  const double si = std::sin(model.inclination);
  return UnitVec3(Vec3(sd * ci, cd * ci, -si));
}

DirectionalTriad build_world_triad(const Vec3& p_w_g1, const Vec3& p_w_g2, const UnitVec3& m_w,
                                   double min_baseline) {
  const Vec3 baseline = p_w_g1 - p_w_g2;
  if (baseline.norm() <= min_baseline) {
    throw Error(ErrorCode::DegenerateBaseline, "antenna baseline below minimum");
  }
  return DirectionalTriad::from_gm(baseline, m_w.vec());
}

DirectionalTriad build_body_triad(const AntennaCalibration& cal, const Vec3& m_raw,
                                  const magcal::EllipsoidCalibration& mag_cal,
                                  const Mat3& r_imu_mag) {
  const Vec3 baseline = cal.p_imu_g1 - cal.p_imu_g2;
  if (baseline.norm() <= 0.0) {
    throw Error(ErrorCode::DegenerateBaseline, "antenna lever arms coincide");
  }
  const Vec3 m_imu = r_imu_mag * magcal::correct_sample(m_raw, mag_cal);
  return DirectionalTriad::from_gm(baseline, m_imu);
}

double triad_residual(const DirectionalTriad& world, const DirectionalTriad& body, const Mat3& r) {
  return (world.as_columns() - r * body.as_columns()).norm();
}

RotationEstimate solve_rotation_linear(const DirectionalTriad& world,
                                       const DirectionalTriad& body) {
  const Mat3 w = world.as_columns();
  const Mat3 b = body.as_columns();

  // W = R B over the nine entries of R; with B as coefficient matrix this is
  // B^T R^T = W^T solved column-wise.
  Eigen::ColPivHouseholderQR<Mat3> qr(b.transpose());
  if (qr.rank() < 3) {
    throw Error(ErrorCode::SingularSystem, "stacked body matrix rank deficient");
  }
  const Mat3 r_raw = Mat3(qr.solve(w.transpose())).transpose();
  const Mat3 r = project_to_so3(r_raw);
  return {r, Method::LinearLs, triad_residual(world, body, r), 0};
}

RotationEstimate solve_rotation_tangent(const DirectionalTriad& world,
                                        const DirectionalTriad& body,
                                        std::optional<TangentVector> init, double step_tol,
                                        int max_iterations) {
  Mat3 r = init ? exp_so3(*init) : solve_rotation_wahba(world, body).rotation;

  const Mat3 w = world.as_columns();
  const Mat3 b = body.as_columns();

  auto residual_vector = [&](const Mat3& rot) {
    Eigen::Matrix<double, 9, 1> res;
    for (int k = 0; k < 3; ++k) {
      res.segment<3>(3 * k) = w.col(k) - rot * b.col(k);
    }
    return res;
  };

  Eigen::Matrix<double, 9, 1> res = residual_vector(r);
  for (int iter = 0; iter < max_iterations; ++iter) {
    // Columns of h(omega) stack to Jacobian blocks -R [v]x per body vector.
    Eigen::Matrix<double, 9, 3> jac;
    for (int k = 0; k < 3; ++k) {
      jac.block<3, 3>(3 * k, 0) = -r * skew(b.col(k));
    }
    // r(omega) = stacked world - h(omega), so d r/d omega = -dh/d omega.
    const Eigen::Matrix<double, 9, 3> jr = -jac;

    const Mat3 normal = jr.transpose() * jr;
    const Vec3 rhs = -jr.transpose() * res;
    const TangentVector step = normal.ldlt().solve(rhs);

    if (step.norm() < step_tol) {
      return {r, Method::TangentGn, res.norm(), iter};
    }

    // Halve the step while it increases the residual.
    TangentVector applied = step;
    Mat3 r_next = r * exp_so3(applied);
    Eigen::Matrix<double, 9, 1> res_next = residual_vector(r_next);
    int halvings = 0;
    while (res_next.norm() > res.norm() && halvings < 30) {
      applied *= 0.5;
      r_next = r * exp_so3(applied);
      res_next = residual_vector(r_next);
      ++halvings;
    }
    if (halvings >= 30) {
      // No descent direction left: already at a local minimum.
      return {r, Method::TangentGn, res.norm(), iter};
    }
    r = r_next;
    res = res_next;
  }
  throw Error(ErrorCode::NonConvergence,
              "tangent-space solver exceeded iteration limit, residual " +
                  std::to_string(res.norm()));
}

RotationEstimate solve_rotation_wahba_weighted(const DirectionalTriad& world,
                                               const DirectionalTriad& body, const Vec3& weights) {
  const Mat3 w = world.as_columns();
  const Mat3 b = body.as_columns();
  Mat3 a = Mat3::Zero();
  for (int k = 0; k < 3; ++k) {
    a += weights(k) * w.col(k) * b.col(k).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  if (sigma(1) < kSvdDegeneracyTol * std::max(1.0, sigma(0))) {
    throw Error(ErrorCode::DegenerateSvd, "attitude profile matrix has vanishing singular values");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const double d = u.determinant() * v.determinant();
  const Mat3 r = u * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, d) * v.transpose();

  double weighted_sse = 0.0;
  for (int k = 0; k < 3; ++k) {
    weighted_sse += weights(k) * (w.col(k) - r * b.col(k)).squaredNorm();
  }
  return {r, Method::WahbaSvd, std::sqrt(weighted_sse), 0};
}

RotationEstimate solve_rotation_wahba(const DirectionalTriad& world, const DirectionalTriad& body,
                                      double alpha) {
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::ConfigError, "wahba weight alpha must be positive");
  }
  return solve_rotation_wahba_weighted(world, body, Vec3(alpha, 1.0, 1.0));
}

EpochEstimate estimate_pose_epoch(const Timestamped<Vec3>& g1, const Timestamped<Vec3>& g2,
                                  const Vec3& mag_raw, const AntennaCalibration& cal,
                                  const magcal::EllipsoidCalibration& mag_cal,
                                  const Mat3& r_imu_mag, const WorldMagneticModel& wmm,
                                  Method method, double alpha, double min_baseline) {
  const DirectionalTriad world = build_world_triad(g1.value, g2.value, world_mag_vector(wmm),
                                                   min_baseline);
  const DirectionalTriad body = build_body_triad(cal, mag_raw, mag_cal, r_imu_mag);

  RotationEstimate est;
  switch (method) {
    case Method::LinearLs: est = solve_rotation_linear(world, body); break;
    case Method::TangentGn: est = solve_rotation_tangent(world, body); break;
    case Method::WahbaSvd: est = solve_rotation_wahba(world, body, alpha); break;
  }

  // The solver output is R_W_I; splitting off the calibration rotation gives
  // R_W_VG = R_W_I * R_VG_I^T for the position composition.
  const Mat3 r_w_vg = est.rotation * cal.r_vg_imu.transpose();
  const Vec3 position = compose_position(g2.value, r_w_vg, cal.r_vg_imu, cal.p_imu_g2);

  return {Timestamped<Pose>{g2.t, Pose{est.rotation, position}}, est};
}

double worst_case_heading_error(double eta_m, double baseline_m) {
  if (!(baseline_m > 0.0)) {
    throw Error(ErrorCode::ConfigError, "baseline must be positive");
  }
  if (eta_m < 0.0) {
    throw Error(ErrorCode::ConfigError, "antenna accuracy must be non-negative");
  }
  return std::atan(2.0 * eta_m / baseline_m);
}

}  // namespace gt::attitude
