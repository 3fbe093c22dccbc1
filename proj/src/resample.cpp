#include <cmath>
#include <numbers>
#include <numeric>

#include "vocbench/audio_io.hpp"
#include "vocbench/error.hpp"

namespace vocbench::audio {

namespace {

// Phase tables are precomputed when the reduced upsampling factor is small
// enough; beyond this the kernel is evaluated per output sample.
constexpr long kMaxTablePhases = 4096;

double kaiser(double u, double beta) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, beta);
}

// Low-pass interpolation kernel evaluated at offset `t` input samples.
double kernel(double t, double cutoff, double half_width) {
  const double x = cutoff * t;
  const double sinc =
      x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  return cutoff * sinc * kaiser(t / half_width, kResampleKaiserBeta);
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate < 8000) {
    throw Error(ErrorCode::InvalidConfig,
                "resample target must be >= 8000 Hz, got " + std::to_string(target_rate));
  }
  if (target_rate == w.sample_rate()) {
    return w;
  }

  const long g = std::gcd<long, long>(target_rate, w.sample_rate());
  const long up = target_rate / g;
  const long down = w.sample_rate() / g;
  const double cutoff = std::min(1.0, static_cast<double>(up) / down);
  const double half_width = kResampleZeroCrossings / cutoff;
  const long taps = static_cast<long>(std::ceil(half_width));

  const auto in = w.samples();
  const long n_in = static_cast<long>(in.size());
  const auto n_out = static_cast<long>(
      std::llround(static_cast<double>(n_in) * target_rate / w.sample_rate()));

  // table[phase][j] = kernel(frac - (j - taps + 1)) for input index base + j - taps + 1
  const bool tabulate = up <= kMaxTablePhases;
  std::vector<double> table;
  const long width = 2 * taps;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * width));
    for (long p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      for (long j = 0; j < width; ++j) {
        table[p * width + j] = kernel(frac - static_cast<double>(j - taps + 1),
                                      cutoff, half_width);
      }
    }
  }

  std::vector<float> out(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long num = n * down;
    const long base = num / up;
    const long phase = num % up;
    const double frac = static_cast<double>(phase) / up;
    double acc = 0.0;
    for (long j = 0; j < width; ++j) {
      const long k = base + j - taps + 1;
      if (k < 0 || k >= n_in) continue;
      const double h = tabulate ? table[phase * width + j]
                                : kernel(frac - static_cast<double>(j - taps + 1),
                                         cutoff, half_width);
      acc += h * in[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  }
  return Waveform(std::move(out), target_rate, w.source_path());
}

}  // namespace vocbench::audio
