#include "gtkit/timesync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gt::timesync {

namespace {

// Derivative at t0 from three samples (Lagrange basis), second-order on
// non-uniform spacing.
double three_point_derivative(double t0, double ta, double fa, double tb, double fb, double tc,
                              double fc) {
  return fa * (2.0 * t0 - tb - tc) / ((ta - tb) * (ta - tc)) +
         fb * (2.0 * t0 - ta - tc) / ((tb - ta) * (tb - tc)) +
         fc * (2.0 * t0 - ta - tb) / ((tc - ta) * (tc - tb));
}

struct UniformTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> v;
};

double native_rate(const SignalTrace& trace) {
  return (static_cast<double>(trace.t.size()) - 1.0) / (trace.t.back() - trace.t.front());
}

UniformTrace resample(const SignalTrace& trace, double dt) {
  UniformTrace out;
  out.t0 = trace.t.front();
  out.dt = dt;
  const double span = trace.t.back() - trace.t.front();
  const std::size_t n = static_cast<std::size_t>(std::floor(span / dt)) + 1;
  out.v.resize(n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.t0 + static_cast<double>(i) * dt;
    while (seg + 2 < trace.t.size() && trace.t[seg + 1] < t) {
      ++seg;
    }
    const double t_lo = trace.t[seg];
    const double t_hi = trace.t[seg + 1];
    const double u = std::clamp((t - t_lo) / (t_hi - t_lo), 0.0, 1.0);
    out.v[i] = (1.0 - u) * trace.v[seg] + u * trace.v[seg + 1];
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Flat means zero variance up to roundoff of the signal magnitude.
bool is_flat(const std::vector<double>& v) {
  double max_abs = 0.0;
  for (double x : v) max_abs = std::max(max_abs, std::abs(x));
  const double floor = 1e-10 * (1.0 + max_abs);
  return variance(v) <= floor * floor;
}

}  // namespace

void SignalTrace::validate() const {
  if (t.size() != v.size()) {
    throw Error(ErrorCode::TooFewSamples, "trace time/value length mismatch");
  }
  if (t.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "trace needs at least 2 samples");
  }
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (!(t[i + 1] > t[i])) {
      throw Error(ErrorCode::NonMonotonicTime, "trace timestamps not strictly increasing");
    }
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::ParseError, "trace contains non-finite value");
    }
  }
}

TimeSeries<Vec3> differentiate(const TimeSeries<Vec3>& series) {
  const std::size_t n = series.size();
  if (n < 2) {
    throw Error(ErrorCode::TooFewSamples, "differentiate needs at least 2 samples");
  }
  TimeSeries<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].t = series[i].t;
  }
  if (n == 2) {
    const Vec3 slope = (series[1].value - series[0].value) / (series[1].t - series[0].t);
    out[0].value = slope;
    out[1].value = slope;
    return out;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i].value = (series[i + 1].value - series[i - 1].value) / (series[i + 1].t - series[i - 1].t);
  }
  for (int axis = 0; axis < 3; ++axis) {
    out.front().value(axis) =
        three_point_derivative(series[0].t, series[0].t, series[0].value(axis), series[1].t,
                               series[1].value(axis), series[2].t, series[2].value(axis));
    out.back().value(axis) = three_point_derivative(
        series[n - 1].t, series[n - 3].t, series[n - 3].value(axis), series[n - 2].t,
        series[n - 2].value(axis), series[n - 1].t, series[n - 1].value(axis));
  }
  return out;
}

SignalTrace differentiate(const SignalTrace& trace) {
  trace.validate();
  const std::size_t n = trace.t.size();
  SignalTrace out;
  out.t = trace.t;
  out.v.resize(n);
  if (n == 2) {
    const double slope = (trace.v[1] - trace.v[0]) / (trace.t[1] - trace.t[0]);
    out.v[0] = slope;
    out.v[1] = slope;
    return out;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out.v[i] = (trace.v[i + 1] - trace.v[i - 1]) / (trace.t[i + 1] - trace.t[i - 1]);
  }
  out.v[0] = three_point_derivative(trace.t[0], trace.t[0], trace.v[0], trace.t[1], trace.v[1],
                                    trace.t[2], trace.v[2]);
  out.v[n - 1] = three_point_derivative(trace.t[n - 1], trace.t[n - 3], trace.v[n - 3],
                                        trace.t[n - 2], trace.v[n - 2], trace.t[n - 1],
                                        trace.v[n - 1]);
  return out;
}

TimeOffset estimate_offset_xcorr(const SignalTrace& a, const SignalTrace& b,
                                 const XcorrOptions& opts) {
  a.validate();
  b.validate();

  const double rate = std::max(native_rate(a), native_rate(b));
  const double dt = 1.0 / rate;
  const UniformTrace ua = resample(a, dt);
  const UniformTrace ub = resample(b, dt);

  if (is_flat(ua.v) || is_flat(ub.v)) {
    throw Error(ErrorCode::FlatSignal, "trace has zero variance, offset unobservable");
  }

  const double start_offset = ub.t0 - ua.t0;
  // delta(l) = l*dt + (t0_b - t0_a); search l so that |delta| <= max_lag.
  const int l_min = static_cast<int>(std::ceil((-opts.max_lag - start_offset) / dt));
  const int l_max = static_cast<int>(std::floor((opts.max_lag - start_offset) / dt));

  const std::size_t min_overlap_n = std::max<std::size_t>(
      2, static_cast<std::size_t>(opts.min_overlap *
                                  static_cast<double>(std::min(ua.v.size(), ub.v.size()))));

  std::vector<double> corr;
  std::vector<int> lags;
  corr.reserve(static_cast<std::size_t>(std::max(0, l_max - l_min + 1)));
  for (int l = l_min; l <= l_max; ++l) {
    // Pair a[i] with b[i + l].
    const int i_begin = std::max(0, -l);
    const int i_end = std::min(static_cast<int>(ua.v.size()),
                               static_cast<int>(ub.v.size()) - l);
    const int count = i_end - i_begin;
    if (count < static_cast<int>(min_overlap_n)) {
      continue;
    }
    double sa = 0.0, sb = 0.0;
    for (int i = i_begin; i < i_end; ++i) {
      sa += ua.v[i];
      sb += ub.v[i + l];
    }
    const double ma = sa / count;
    const double mb = sb / count;
    double cross = 0.0, va = 0.0, vb = 0.0;
    for (int i = i_begin; i < i_end; ++i) {
      const double da = ua.v[i] - ma;
      const double db = ub.v[i + l] - mb;
      cross += da * db;
      va += da * da;
      vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) {
      continue;
    }
    corr.push_back(cross / std::sqrt(va * vb));
    lags.push_back(l);
  }

  if (corr.empty()) {
    throw Error(ErrorCode::InsufficientOverlap, "no lag with sufficient trace overlap");
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < corr.size(); ++i) {
    if (corr[i] > corr[best]) {
      best = i;
    }
  }

  double frac = 0.0;
  double peak = corr[best];
  if (best > 0 && best + 1 < corr.size() && lags[best - 1] == lags[best] - 1 &&
      lags[best + 1] == lags[best] + 1) {
    const double c0 = corr[best - 1];
    const double c1 = corr[best];
    const double c2 = corr[best + 1];
    const double denom = c0 - 2.0 * c1 + c2;
    if (std::abs(denom) > std::numeric_limits<double>::epsilon()) {
      frac = 0.5 * (c0 - c2) / denom;
      frac = std::clamp(frac, -0.5, 0.5);
      peak = c1 - 0.25 * (c0 - c2) * frac;
    }
  }

  TimeOffset result;
  result.delta = (static_cast<double>(lags[best]) + frac) * dt + start_offset;
  result.peak_correlation = peak;
  return result;
}

SignalTrace norm_trace(const TimeSeries<Vec3>& series) {
  SignalTrace out;
  out.t.reserve(series.size());
  out.v.reserve(series.size());
  for (const auto& s : series) {
    out.t.push_back(s.t);
    out.v.push_back(s.value.norm());
  }
  return out;
}

TimeOffset sync_gnss_pair(const TimeSeries<Vec3>& g1, const TimeSeries<Vec3>& g2,
                          const XcorrOptions& opts) {
  if (g1.size() < 2 || g2.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "GNSS series too short for synchronization");
  }
  if (g1.back().t - g1.front().t < 1.0 || g2.back().t - g2.front().t < 1.0) {
    throw Error(ErrorCode::TooFewSamples, "GNSS series shorter than 1 s");
  }
  const SignalTrace speed1 = norm_trace(differentiate(g1));
  const SignalTrace speed2 = norm_trace(differentiate(g2));
  return estimate_offset_xcorr(speed1, speed2, opts);
}

std::vector<double> unwrap_angles(std::vector<double> angles) {
  constexpr double pi = std::numbers::pi;
  double accum = 0.0;
  for (std::size_t i = 1; i < angles.size(); ++i) {
    const double raw = angles[i];
    double prev = angles[i - 1];
    double diff = raw + accum - prev;
    while (diff > pi) {
      accum -= 2.0 * pi;
      diff -= 2.0 * pi;
    }
    while (diff < -pi) {
      accum += 2.0 * pi;
      diff += 2.0 * pi;
    }
    angles[i] = raw + accum;
  }
  return angles;
}

TimeOffset sync_mag_to_vg(const SignalTrace& vg_heading, const SignalTrace& mag_heading,
                          const XcorrOptions& opts) {
  SignalTrace vg = vg_heading;
  SignalTrace mag = mag_heading;
  vg.v = unwrap_angles(vg.v);
  mag.v = unwrap_angles(mag.v);
  return estimate_offset_xcorr(differentiate(vg), differentiate(mag), opts);
}

TimeOffset sync_imu_to_gt(const TimeSeries<Mat3>& gt_rotations, const TimeSeries<Vec3>& imu_gyro,
                          const XcorrOptions& opts) {
  if (gt_rotations.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "need at least 2 ground-truth rotations");
  }
  SignalTrace gt_rate;
  gt_rate.t.reserve(gt_rotations.size() - 1);
  gt_rate.v.reserve(gt_rotations.size() - 1);
  for (std::size_t i = 0; i + 1 < gt_rotations.size(); ++i) {
    const double dt = gt_rotations[i + 1].t - gt_rotations[i].t;
    const Vec3 omega =
        log_so3(gt_rotations[i].value.transpose() * gt_rotations[i + 1].value) / dt;
    gt_rate.t.push_back(0.5 * (gt_rotations[i].t + gt_rotations[i + 1].t));
    gt_rate.v.push_back(omega.norm());
  }
  return estimate_offset_xcorr(gt_rate, norm_trace(imu_gyro), opts);
}

}  // namespace gt::timesync
