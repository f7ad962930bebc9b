#include "gtkit/vibration.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace gt::vibration {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

// |FFT|^2 of one real segment, bins 0..n/2.
std::vector<double> periodogram_bins(const std::vector<double>& segment) {
  const std::size_t n = segment.size();
  const std::size_t bins = n / 2 + 1;
  std::vector<double> input(segment);
  std::vector<std::complex<double>> output(bins);

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), input.data(),
                                reinterpret_cast<fftw_complex*>(output.data()), FFTW_ESTIMATE);
  }
  // FFTW_ESTIMATE may still touch the input during planning; rewrite it.
  std::copy(segment.begin(), segment.end(), input.begin());
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }

  std::vector<double> mag2(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    mag2[k] = std::norm(output[k]);
  }
  return mag2;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  }
  return w;
}

void validate_psd_args(const UniformSignal& sig, std::size_t window_len, double overlap) {
  if (sig.sample_rate <= 0.0 || sig.values.size() < 2) {
    throw Error(ErrorCode::WindowTooLong, "signal too short for spectral analysis");
  }
  if (window_len < 2 || window_len > sig.values.size()) {
    throw Error(ErrorCode::WindowTooLong, "window length exceeds signal length");
  }
  if (overlap < 0.0 || overlap >= 1.0) {
    throw Error(ErrorCode::ConfigError, "overlap must be in [0, 1)");
  }
}

}  // namespace

Spectrogram spectrogram(const UniformSignal& sig, std::size_t window_len, double overlap) {
  validate_psd_args(sig, window_len, overlap);

  const std::vector<double> window = hann_window(window_len);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround((1.0 - overlap) * static_cast<double>(window_len))));

  Spectrogram out;
  const std::size_t bins = window_len / 2 + 1;
  out.freqs.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs[k] = static_cast<double>(k) * sig.sample_rate / static_cast<double>(window_len);
  }

  // One-sided density scaling: 1/(fs * sum w^2), doubled except DC/Nyquist.
  const double scale = 1.0 / (sig.sample_rate * window_power);
  std::vector<double> segment(window_len);
  for (std::size_t start = 0; start + window_len <= sig.values.size(); start += hop) {
    for (std::size_t i = 0; i < window_len; ++i) {
      segment[i] = sig.values[start + i] * window[i];
    }
    std::vector<double> mag2 = periodogram_bins(segment);
    std::vector<double> psd(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || (window_len % 2 == 0 && k == bins - 1);
      psd[k] = (edge ? 1.0 : 2.0) * scale * mag2[k];
    }
    out.power.push_back(std::move(psd));
    out.times.push_back((static_cast<double>(start) + static_cast<double>(window_len) / 2.0) /
                        sig.sample_rate);
  }
  return out;
}

PowerSpectrum welch_psd(const UniformSignal& sig, std::size_t window_len, double overlap) {
  const Spectrogram sg = spectrogram(sig, window_len, overlap);
  PowerSpectrum out;
  out.freqs = sg.freqs;
  out.power.assign(sg.freqs.size(), 0.0);
  for (const auto& row : sg.power) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out.power[k] += row[k];
    }
  }
  for (double& p : out.power) {
    p /= static_cast<double>(sg.power.size());
  }
  return out;
}

double find_main_peak(const PowerSpectrum& spec, double min_freq) {
  if (spec.freqs.size() != spec.power.size() || spec.freqs.empty()) {
    throw Error(ErrorCode::NoPeak, "empty spectrum");
  }
  std::size_t best = 0;
  bool found = false;
  for (std::size_t k = 1; k + 1 < spec.power.size(); ++k) {
    if (spec.freqs[k] < min_freq) {
      continue;
    }
    const bool local_max = spec.power[k] >= spec.power[k - 1] && spec.power[k] >= spec.power[k + 1];
    if (local_max && spec.power[k] > 0.0 && (!found || spec.power[k] > spec.power[best])) {
      best = k;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::NoPeak, "no interior peak above the frequency floor");
  }

  double freq = spec.freqs[best];
  const double p0 = spec.power[best - 1];
  const double p1 = spec.power[best];
  const double p2 = spec.power[best + 1];
  if (p0 > 0.0 && p2 > 0.0) {
    const double l0 = std::log(p0);
    const double l1 = std::log(p1);
    const double l2 = std::log(p2);
    const double denom = l0 - 2.0 * l1 + l2;
    if (std::abs(denom) > 0.0) {
      const double frac = 0.5 * (l0 - l2) / denom;
      if (std::abs(frac) <= 0.5) {
        const double bin = spec.freqs[1] - spec.freqs[0];
        freq += frac * bin;
      }
    }
  }
  return freq;
}

RpmCalibration fit_rate_to_rpm(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> distinct;
  for (const auto& [rate, rpm] : pairs) {
    bool seen = false;
    for (double d : distinct) {
      if (d == rate) {
        seen = true;
        break;
      }
    }
    if (!seen) distinct.push_back(rate);
  }
  if (distinct.size() < 3) {
    throw Error(ErrorCode::RankDeficient, "quadratic fit needs 3 distinct rate values");
  }

  Eigen::MatrixXd a(pairs.size(), 3);
  Eigen::VectorXd b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double rate = pairs[i].first;
    a.row(static_cast<Eigen::Index>(i)) << 1.0, rate, rate * rate;
    b(static_cast<Eigen::Index>(i)) = pairs[i].second;
  }
  const Eigen::Vector3d coeffs = a.colPivHouseholderQr().solve(b);
  return {coeffs(0), coeffs(1), coeffs(2)};
}

double predict_rpm(const RpmCalibration& cal, double rate) {
  return cal.a0 + cal.a1 * rate + cal.a2 * rate * rate;
}

ResonanceModel fit_resonance_line(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> distinct;
  for (const auto& [rpm, freq] : pairs) {
    bool seen = false;
    for (double d : distinct) {
      if (d == rpm) {
        seen = true;
        break;
      }
    }
    if (!seen) distinct.push_back(rpm);
  }
  if (distinct.size() < 2) {
    throw Error(ErrorCode::RankDeficient, "line fit needs 2 distinct RPM values");
  }

  Eigen::MatrixXd a(pairs.size(), 2);
  Eigen::VectorXd b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) << 1.0, pairs[i].first;
    b(static_cast<Eigen::Index>(i)) = pairs[i].second;
  }
  const Eigen::Vector2d coeffs = a.colPivHouseholderQr().solve(b);
  return {coeffs(0), coeffs(1)};
}

double predict_resonance_hz(const ResonanceModel& model, double rpm) {
  return model.a0 + model.a1 * rpm;
}

TimeSeries<MotorFreqs> predict_resonances(const ResonanceModel& model, const RpmCalibration& cal,
                                          const TimeSeries<MotorRates>& motor_rates) {
  TimeSeries<MotorFreqs> out;
  out.reserve(motor_rates.size());
  for (const auto& sample : motor_rates) {
    MotorFreqs freqs{};
    for (std::size_t m = 0; m < 4; ++m) {
      freqs[m] = predict_resonance_hz(model, predict_rpm(cal, sample.value[m]));
    }
    out.push_back({sample.t, freqs});
  }
  return out;
}

std::vector<std::pair<double, double>> allan_deviation(const UniformSignal& sig,
                                                       const std::vector<double>& taus) {
  const std::size_t n = sig.values.size();
  if (sig.sample_rate <= 0.0 || n < 2) {
    throw Error(ErrorCode::TauOutOfRange, "signal too short for Allan analysis");
  }
  const double duration = static_cast<double>(n) / sig.sample_rate;

  // Overlapping cluster averages via prefix sums.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + sig.values[i];
  }

  std::vector<std::pair<double, double>> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    if (tau < 2.0 / sig.sample_rate || tau > duration / 9.0) {
      throw Error(ErrorCode::TauOutOfRange, "tau outside [2/fs, duration/9]");
    }
    const std::size_t m = static_cast<std::size_t>(std::lround(tau * sig.sample_rate));
    if (n < 2 * m + 1) {
      throw Error(ErrorCode::TauOutOfRange, "too few samples for requested tau");
    }
    const double md = static_cast<double>(m);
    const std::size_t diffs = n - 2 * m + 1;
    double accum = 0.0;
    for (std::size_t k = 0; k < diffs; ++k) {
      const double mean_a = (prefix[k + m] - prefix[k]) / md;
      const double mean_b = (prefix[k + 2 * m] - prefix[k + m]) / md;
      accum += (mean_b - mean_a) * (mean_b - mean_a);
    }
    const double avar = accum / (2.0 * static_cast<double>(diffs));
    out.emplace_back(md / sig.sample_rate, std::sqrt(avar));
  }
  return out;
}

std::vector<double> default_allan_taus(const UniformSignal& sig, int points_per_decade) {
  const double duration = static_cast<double>(sig.values.size()) / sig.sample_rate;
  const double tau_min = 2.0 / sig.sample_rate;
  const double tau_max = duration / 9.0;
  std::vector<double> taus;
  if (tau_max <= tau_min) {
    return taus;
  }
  const double log_min = std::log10(tau_min);
  const double log_max = std::log10(tau_max);
  const int steps = static_cast<int>(std::floor((log_max - log_min) * points_per_decade));
  double last_tau = -1.0;
  for (int i = 0; i <= steps; ++i) {
    const double tau = std::pow(10.0, log_min + static_cast<double>(i) / points_per_decade);
    // Snap to whole clusters so duplicates collapse.
    const double snapped =
        std::lround(tau * sig.sample_rate) / sig.sample_rate;
    if (snapped > last_tau && snapped >= tau_min && snapped <= tau_max) {
      taus.push_back(snapped);
      last_tau = snapped;
    }
  }
  return taus;
}

}  // namespace gt::vibration
