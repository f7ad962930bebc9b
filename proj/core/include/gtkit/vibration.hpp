#pragma once

#include <array>
#include <vector>

#include "gtkit/geometry.hpp"

namespace gt::vibration {

struct UniformSignal {
  double sample_rate = 0.0;  // Hz
  std::vector<double> values;
};

// One-sided power spectral density, freqs in [0, fs/2].
struct PowerSpectrum {
  std::vector<double> freqs;
  std::vector<double> power;  // signal^2 / Hz
};

// Spectrogram: one PSD row per analysis window.
struct Spectrogram {
  std::vector<double> times;  // window centers, s
  std::vector<double> freqs;
  std::vector<std::vector<double>> power;  // power[window][bin]
};

// RPM = a0 + a1 * rate + a2 * rate^2 for PX4 rate values.
struct RpmCalibration {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
};

// Resonance frequency = a0 + a1 * RPM.
struct ResonanceModel {
  double a0 = 0.0;  // Hz
  double a1 = 0.0;  // Hz per RPM
};

// Hann-windowed averaged periodograms, Parseval-consistent scaling
// (integral of the PSD approximates the signal variance).
PowerSpectrum welch_psd(const UniformSignal& sig, std::size_t window_len, double overlap = 0.5);

Spectrogram spectrogram(const UniformSignal& sig, std::size_t window_len, double overlap = 0.5);

// Frequency of the dominant interior local maximum above min_freq, refined by
// parabolic interpolation of log power over the 3 neighboring bins.
double find_main_peak(const PowerSpectrum& spec, double min_freq);

RpmCalibration fit_rate_to_rpm(const std::vector<std::pair<double, double>>& rate_rpm_pairs);

double predict_rpm(const RpmCalibration& cal, double rate);

ResonanceModel fit_resonance_line(const std::vector<std::pair<double, double>>& rpm_freq_pairs);

double predict_resonance_hz(const ResonanceModel& model, double rpm);

using MotorRates = std::array<double, 4>;
using MotorFreqs = std::array<double, 4>;

// Chains rate -> RPM -> resonance frequency per motor.
TimeSeries<MotorFreqs> predict_resonances(const ResonanceModel& model, const RpmCalibration& cal,
                                          const TimeSeries<MotorRates>& motor_rates);

// Overlapping Allan deviation at the requested cluster times. Each tau must
// satisfy 2/fs <= tau <= duration/9; cluster sizes snap to whole samples.
std::vector<std::pair<double, double>> allan_deviation(const UniformSignal& sig,
                                                       const std::vector<double>& taus);

// Log-spaced taus covering the valid range, n points per decade.
std::vector<double> default_allan_taus(const UniformSignal& sig, int points_per_decade = 10);

}  // namespace gt::vibration
