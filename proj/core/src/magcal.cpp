#include "gtkit/magcal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gt::magcal {

namespace {

// Symmetric positive definite square root via eigendecomposition.
Mat3 spd_sqrt(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  const Vec3 ev = eig.eigenvalues();
  if (ev(0) <= 0.0) {
    throw Error(ErrorCode::DegenerateFit, "quadric is not positive definite");
  }
  return eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

EllipsoidCalibration fit_ellipsoid(const std::vector<Vec3>& samples, const FitOptions& opts) {
  if (samples.size() < opts.min_samples) {
    throw Error(ErrorCode::DegenerateFit, "too few samples for ellipsoid fit");
  }

  Vec3 centroid = Vec3::Zero();
  for (const auto& s : samples) centroid += s;
  centroid /= static_cast<double>(samples.size());

  // Angular coverage gate: directions of centered samples must span 3-D.
  Mat3 second_moment = Mat3::Zero();
  for (const auto& s : samples) {
    const Vec3 d = s - centroid;
    const double n = d.norm();
    if (n > 0.0) {
      second_moment += (d / n) * (d / n).transpose();
    }
  }
  second_moment /= static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Mat3> cov_eig(second_moment);
  if (cov_eig.eigenvalues()(0) < opts.min_coverage) {
    throw Error(ErrorCode::DegenerateFit, "samples lie near a plane or great circle");
  }

  // Quadric x^T Q x + 2 q^T x + k = 0 in parameters
  // (A, B, C, D, E, F, G, H, I, J); rows [x2 y2 z2 2xy 2xz 2yz 2x 2y 2z 1].
  // Samples are shifted to the centroid and scaled to unit RMS radius first;
  // the raw design matrix becomes severely ill-conditioned otherwise.
  double rms = 0.0;
  for (const auto& s : samples) rms += (s - centroid).squaredNorm();
  rms = std::sqrt(rms / static_cast<double>(samples.size()));
  if (!(rms > 0.0)) {
    throw Error(ErrorCode::DegenerateFit, "all samples coincide");
  }

  Eigen::MatrixXd design(samples.size(), 10);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec3 p = (samples[i] - centroid) / rms;
    design.row(i) << p.x() * p.x(), p.y() * p.y(), p.z() * p.z(), 2.0 * p.x() * p.y(),
        2.0 * p.x() * p.z(), 2.0 * p.y() * p.z(), 2.0 * p.x(), 2.0 * p.y(), 2.0 * p.z(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
  const Eigen::VectorXd theta = svd.matrixV().col(9);

  Mat3 q_mat;
  q_mat << theta(0), theta(3), theta(4),
           theta(3), theta(1), theta(5),
           theta(4), theta(5), theta(2);
  Vec3 q_vec(theta(6), theta(7), theta(8));
  double k = theta(9);

  if (q_mat.trace() < 0.0) {
    q_mat = -q_mat;
    q_vec = -q_vec;
    k = -k;
  }

  Eigen::SelfAdjointEigenSolver<Mat3> q_eig(q_mat);
  if (q_eig.eigenvalues()(0) <= 0.0) {
    throw Error(ErrorCode::DegenerateFit, "fitted quadric is not an ellipsoid");
  }

  const Vec3 center = -q_mat.ldlt().solve(q_vec);
  const double scale = center.dot(q_mat * center) - k;  // (x-c)^T Q (x-c) = s
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::DegenerateFit, "fitted quadric has non-positive radius");
  }

  EllipsoidCalibration cal;
  cal.b_ct = centroid + rms * center;  // undo the normalization shift
  Mat3 t = spd_sqrt(q_mat / scale) / rms;

  // Scale so corrected samples have unit RMS norm.
  double corrected_rms = 0.0;
  for (const auto& s : samples) {
    corrected_rms += (t * (s - cal.b_ct)).squaredNorm();
  }
  corrected_rms = std::sqrt(corrected_rms / static_cast<double>(samples.size()));
  cal.t_sp = t / corrected_rms;
  return cal;
}

Vec3 correct_sample(const Vec3& m_raw, const EllipsoidCalibration& cal) {
  return cal.t_sp * (m_raw - cal.b_ct);
}

namespace {

struct ExtrinsicCost {
  const StaticOrientationSet& data;

  Eigen::VectorXd residuals(const Mat3& r, double inclination) const {
    Eigen::VectorXd res(data.poses.size());
    const double target = std::sin(inclination);
    for (std::size_t i = 0; i < data.poses.size(); ++i) {
      res(static_cast<Eigen::Index>(i)) =
          data.poses[i].gravity_imu.vec().dot(r * data.poses[i].mag_field.vec()) - target;
    }
    return res;
  }
};

}  // namespace

MagExtrinsics estimate_extrinsics(const StaticOrientationSet& data, const ExtrinsicOptions& opts) {
  const std::size_t n = data.poses.size();
  if (n < 3) {
    throw Error(ErrorCode::IllConditioned, "need at least 3 static poses");
  }

  Eigen::MatrixXd gravity_stack(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    gravity_stack.row(static_cast<Eigen::Index>(i)) = data.poses[i].gravity_imu.vec().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> gsvd(gravity_stack);
  const double smin = gsvd.singularValues()(2);
  if (smin <= 0.0 || gsvd.singularValues()(0) / smin >= opts.max_condition) {
    throw Error(ErrorCode::IllConditioned, "gravity directions do not span 3-D");
  }

  const ExtrinsicCost cost{data};

  // Wahba on the (g, m) pairs seeds the rotation; the nominal mounting and
  // its 90-degree neighborhood serve as fallback basins.
  Mat3 profile = Mat3::Zero();
  for (const auto& p : data.poses) {
    profile += p.gravity_imu.vec() * p.mag_field.vec().transpose();
  }
  Eigen::JacobiSVD<Mat3> psvd(profile, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double pd = psvd.matrixU().determinant() * psvd.matrixV().determinant();
  const Mat3 r_wahba = psvd.matrixU() * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, pd) *
                       psvd.matrixV().transpose();

  std::vector<Mat3> seeds = {opts.nominal_rotation, r_wahba};
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  for (int axis = 0; axis < 3; ++axis) {
    for (double angle : {kHalfPi, -kHalfPi, 2.0 * kHalfPi}) {
      Vec3 w = Vec3::Zero();
      w(axis) = angle;
      seeds.push_back(opts.nominal_rotation * exp_so3(w));
      seeds.push_back(r_wahba * exp_so3(w));
    }
  }

  struct Optimum {
    Mat3 rotation;
    double inclination;
    double residual;
    int iterations;
  };
  std::vector<Optimum> optima;

  for (const Mat3& seed : seeds) {
    Mat3 r = seed;
    double dot_mean = 0.0;
    for (const auto& p : data.poses) {
      dot_mean += p.gravity_imu.vec().dot(r * p.mag_field.vec());
    }
    double inclination = std::asin(std::clamp(dot_mean / static_cast<double>(n), -1.0, 1.0));

    Eigen::VectorXd res = cost.residuals(r, inclination);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      Eigen::MatrixXd jac(n, 4);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 g = data.poses[i].gravity_imu.vec();
        const Vec3 m = data.poses[i].mag_field.vec();
        jac.block<1, 3>(static_cast<Eigen::Index>(i), 0) = -(g.transpose() * r * skew(m));
        jac(static_cast<Eigen::Index>(i), 3) = -std::cos(inclination);
      }
      const Eigen::Matrix4d normal = jac.transpose() * jac;
      const Eigen::Vector4d rhs = -jac.transpose() * res;
      const Eigen::Vector4d step = normal.ldlt().solve(rhs);

      if (!step.allFinite()) {
        break;
      }

      bool done = step.norm() < opts.step_tol;
      if (!done) {
        Eigen::Vector4d applied = step;
        Mat3 r_next = r * exp_so3(applied.head<3>());
        double inc_next = inclination + applied(3);
        Eigen::VectorXd res_next = cost.residuals(r_next, inc_next);
        int halvings = 0;
        while (res_next.norm() > res.norm() && halvings < 30) {
          applied *= 0.5;
          r_next = r * exp_so3(applied.head<3>());
          inc_next = inclination + applied(3);
          res_next = cost.residuals(r_next, inc_next);
          ++halvings;
        }
        if (halvings >= 30) {
          done = true;  // no descent left, local minimum
        } else {
          r = r_next;
          inclination = inc_next;
          res = res_next;
        }
      }

      if (done) {
        optima.push_back({r, inclination, res.norm(), iter});
        break;
      }
    }
  }

  if (optima.empty()) {
    throw Error(ErrorCode::NonConvergence, "extrinsic optimization did not converge");
  }

  double best_cost = optima.front().residual;
  for (const auto& o : optima) {
    best_cost = std::min(best_cost, o.residual);
  }
  const Optimum* best = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& o : optima) {
    if (o.residual > best_cost + opts.cost_tie_tol) {
      continue;
    }
    const double d = geodesic_distance(o.rotation, opts.nominal_rotation);
    if (d < best_distance) {
      best_distance = d;
      best = &o;
    }
  }

  MagExtrinsics out;
  out.r_imu_mag = best->rotation;
  // sin is periodic; report the canonical inclination in [-pi/2, pi/2].
  out.inclination = std::asin(std::clamp(std::sin(best->inclination), -1.0, 1.0));
  out.residual = best->residual;
  out.iterations = best->iterations;
  return out;
}

std::vector<StaticWindow> detect_static_windows(const TimeSeries<ImuSample>& imu,
                                                double gyro_threshold, double min_duration) {
  std::vector<StaticWindow> windows;
  std::size_t start = 0;
  bool in_window = false;
  for (std::size_t i = 0; i <= imu.size(); ++i) {
    const bool still = i < imu.size() && imu[i].value.gyro.norm() < gyro_threshold;
    if (still && !in_window) {
      start = i;
      in_window = true;
    } else if (!still && in_window) {
      in_window = false;
      const double t0 = imu[start].t;
      const double t1 = imu[i - 1].t;
      if (t1 - t0 >= min_duration) {
        windows.push_back({t0, t1});
      }
    }
  }
  return windows;
}

StaticOrientationSet build_static_orientation_set(const TimeSeries<ImuSample>& imu,
                                                  const TimeSeries<Vec3>& mag,
                                                  const EllipsoidCalibration& intrinsics,
                                                  const std::vector<StaticWindow>& windows) {
  StaticOrientationSet out;
  for (const auto& w : windows) {
    Vec3 accel_sum = Vec3::Zero();
    std::size_t accel_n = 0;
    for (const auto& s : imu) {
      if (s.t >= w.t_begin && s.t <= w.t_end) {
        accel_sum += s.value.accel;
        ++accel_n;
      }
    }
    Vec3 mag_sum = Vec3::Zero();
    std::size_t mag_n = 0;
    for (const auto& s : mag) {
      if (s.t >= w.t_begin && s.t <= w.t_end) {
        mag_sum += correct_sample(s.value, intrinsics);
        ++mag_n;
      }
    }
    if (accel_n == 0 || mag_n == 0) {
      continue;
    }
    // Accelerometer measures specific force (up when static); gravity is down.
    out.poses.push_back({UnitVec3(-accel_sum / static_cast<double>(accel_n)),
                         UnitVec3(mag_sum / static_cast<double>(mag_n))});
  }
  return out;
}

}  // namespace gt::magcal
