#pragma once

#include <Eigen/Core>
#include <complex>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vocbench/audio_io.hpp"

namespace vocbench::spectral {

/// Row-major so that one row is one analysis frame.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Feature-extraction parameters. Defaults are the 24 kHz, 80-band log-mel
/// setup: 40 ms Hann window, 12.5 ms hop, 1024-point FFT, 0-12 kHz.
struct SpectralConfig {
  int sample_rate = 24000;
  double win_length_ms = 40.0;
  double hop_length_ms = 12.5;
  int fft_size = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 12000.0;
  double log_floor = 1e-10;
  int griffin_lim_iters = 60;

  int win_length() const;
  int hop_length() const;
  int n_bins() const { return fft_size / 2 + 1; }

  /// Throws Error(InvalidConfig) when an invariant does not hold.
  void validate() const;

  bool operator==(const SpectralConfig&) const = default;
};

struct MagnitudeSpectrogram {
  Matrix values;  // n_frames x n_bins, all >= 0
  SpectralConfig config;

  Eigen::Index n_frames() const { return values.rows(); }
};

struct MelSpectrogram {
  Matrix values;  // n_frames x n_mels
  bool normalized = false;
  // Pre-scaling extrema of the log10 values; present whenever normalized.
  std::optional<double> norm_min;
  std::optional<double> norm_max;
  SpectralConfig config;

  Eigen::Index n_frames() const { return values.rows(); }
  Eigen::Index n_mels() const { return values.cols(); }
};

/// 1 + floor(max(0, n - win) / hop).
Eigen::Index frame_count(std::size_t n_samples, const SpectralConfig& cfg);

/// Periodic Hann window (denominator N).
std::vector<double> hann_window(int length);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Complex STFT without centering: frame t covers [t*hop, t*hop + win).
ComplexMatrix stft(std::span<const double> samples, const SpectralConfig& cfg);

/// Least-squares inverse of stft() using Hann synthesis and window-sum-square
/// normalization. Output length is (n_frames - 1) * hop + win.
std::vector<double> istft(const ComplexMatrix& spectrum, const SpectralConfig& cfg);

MagnitudeSpectrogram stft_magnitude(const audio::Waveform& w, const SpectralConfig& cfg);

/// Triangular HTK-mel filters, n_mels x n_bins, each peak-normalized to 1.
Matrix mel_filterbank(const SpectralConfig& cfg);

/// log10(max(mel power, log_floor)) without normalization.
MelSpectrogram log_mel_spectrogram(const audio::Waveform& w, const SpectralConfig& cfg);

/// Per-utterance min-max scaling of a log-mel spectrogram to [0, 1].
/// Throws DegenerateRange when the spectrogram is constant.
MelSpectrogram normalize(const MelSpectrogram& log_mel);

/// Recovers log10 values from a normalized spectrogram.
Matrix denormalize(const MelSpectrogram& m);

/// The full feature pipeline: STFT power, mel projection, log10, min-max.
MelSpectrogram mel_spectrogram(const audio::Waveform& w, const SpectralConfig& cfg);

/// Spectral convergence per Griffin-Lim iteration, measured over the full
/// two-sided spectrum.
struct GriffinLimTrace {
  std::vector<double> spectral_convergence;
};

/// Griffin-Lim phase reconstruction of a linear magnitude spectrogram, from
/// zero initial phase. Output is unscaled.
std::vector<double> griffin_lim_magnitude(const Matrix& magnitude, const SpectralConfig& cfg,
                                          GriffinLimTrace* trace = nullptr);

/// Inverts a mel spectrogram to audio: undo normalization and log, map mel
/// power to linear magnitude through the regularized filterbank pseudo-inverse,
/// then run griffin_lim_iters iterations. Non-silent output is peak-normalized
/// to 0.95.
audio::Waveform griffin_lim(const MelSpectrogram& m, const SpectralConfig& cfg,
                            GriffinLimTrace* trace = nullptr);

inline constexpr double kGriffinLimPeak = 0.95;

// VBMEL binary format.
void write_mel(const MelSpectrogram& m, const std::filesystem::path& path);
MelSpectrogram read_mel(const std::filesystem::path& path, const SpectralConfig& cfg);
void write_mel_csv(const MelSpectrogram& m, const std::filesystem::path& path);

}  // namespace vocbench::spectral
