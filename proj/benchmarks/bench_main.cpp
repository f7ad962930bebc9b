#include <benchmark/benchmark.h>

#include <random>

#include "gtkit/attitude.hpp"
#include "gtkit/timesync.hpp"
#include "gtkit/vibration.hpp"
#include "support/synthetic.hpp"

using namespace gt;

namespace {

std::vector<synth::TriadPair> benchmark_triads(int count) {
  std::mt19937_64 rng(404);
  std::vector<synth::TriadPair> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(synth::random_triad_pair(rng, synth::random_rotation(rng)));
  }
  return out;
}

void BM_SolveRotationWahba(benchmark::State& state) {
  const auto triads = benchmark_triads(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& pair = triads[i++ & 255];
    benchmark::DoNotOptimize(attitude::solve_rotation_wahba(pair.world, pair.body, 50.0));
  }
}
BENCHMARK(BM_SolveRotationWahba);

void BM_SolveRotationLinear(benchmark::State& state) {
  const auto triads = benchmark_triads(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& pair = triads[i++ & 255];
    benchmark::DoNotOptimize(attitude::solve_rotation_linear(pair.world, pair.body));
  }
}
BENCHMARK(BM_SolveRotationLinear);

void BM_SolveRotationTangent(benchmark::State& state) {
  const auto triads = benchmark_triads(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& pair = triads[i++ & 255];
    benchmark::DoNotOptimize(attitude::solve_rotation_tangent(pair.world, pair.body));
  }
}
BENCHMARK(BM_SolveRotationTangent);

void BM_CrossCorrelationOffset(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  timesync::SignalTrace a;
  timesync::SignalTrace b;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 0.01 * static_cast<double>(i);
    a.t.push_back(t);
    a.v.push_back(std::sin(0.7 * t) + 0.3 * std::sin(2.1 * t));
    b.t.push_back(t);
    b.v.push_back(std::sin(0.7 * (t - 0.3)) + 0.3 * std::sin(2.1 * (t - 0.3)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(timesync::estimate_offset_xcorr(a, b));
  }
}
BENCHMARK(BM_CrossCorrelationOffset)->Arg(2000)->Arg(20000);

void BM_WelchPsd(benchmark::State& state) {
  std::mt19937_64 rng(405);
  std::normal_distribution<double> noise(0.0, 1.0);
  vibration::UniformSignal sig;
  sig.sample_rate = 900.0;
  sig.values.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& v : sig.values) {
    v = noise(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(vibration::welch_psd(sig, 1800, 0.5));
  }
}
BENCHMARK(BM_WelchPsd)->Arg(18000)->Arg(90000);

void BM_AllanDeviation(benchmark::State& state) {
  std::mt19937_64 rng(406);
  std::normal_distribution<double> noise(0.0, 1.0);
  vibration::UniformSignal sig;
  sig.sample_rate = 100.0;
  sig.values.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& v : sig.values) {
    v = noise(rng);
  }
  const auto taus = vibration::default_allan_taus(sig, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vibration::allan_deviation(sig, taus));
  }
}
BENCHMARK(BM_AllanDeviation)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
