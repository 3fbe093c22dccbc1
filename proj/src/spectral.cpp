#include "vocbench/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "vocbench/error.hpp"

namespace vocbench::spectral {

int SpectralConfig::win_length() const {
  return static_cast<int>(std::lround(win_length_ms * sample_rate / 1000.0));
}

int SpectralConfig::hop_length() const {
  return static_cast<int>(std::lround(hop_length_ms * sample_rate / 1000.0));
}

void SpectralConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (sample_rate <= 0) fail("sample_rate must be positive");
  if (fft_size < 2 || fft_size % 2 != 0) fail("fft_size must be even and >= 2");
  if (win_length() < 1 || win_length() > fft_size) {
    fail("window of " + std::to_string(win_length()) + " samples does not fit fft_size " +
         std::to_string(fft_size));
  }
  if (hop_length() < 1) fail("hop must be at least one sample");
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (fmin < 0.0 || fmax <= fmin) fail("need 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0) fail("fmax exceeds Nyquist");
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
  if (griffin_lim_iters < 0) fail("griffin_lim_iters must be >= 0");
}

Eigen::Index frame_count(std::size_t n_samples, const SpectralConfig& cfg) {
  const auto win = static_cast<std::size_t>(cfg.win_length());
  const auto hop = static_cast<std::size_t>(cfg.hop_length());
  const std::size_t excess = n_samples > win ? n_samples - win : 0;
  return static_cast<Eigen::Index>(1 + excess / hop);
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

ComplexMatrix stft(std::span<const double> samples, const SpectralConfig& cfg) {
  const int win = cfg.win_length();
  const int hop = cfg.hop_length();
  if (samples.size() < static_cast<std::size_t>(win)) {
    throw Error(ErrorCode::TooShort, std::to_string(samples.size()) +
                                         " samples is shorter than one window of " +
                                         std::to_string(win));
  }
  const Eigen::Index frames = frame_count(samples.size(), cfg);
  const auto window = hann_window(win);
  auto& fft = detail::RealFft::for_size(cfg.fft_size);

  ComplexMatrix out(frames, cfg.n_bins());
  std::vector<double> frame(static_cast<std::size_t>(win));
  for (Eigen::Index t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < win; ++n) frame[n] = samples[start + n] * window[n];
    fft.forward(frame, std::span(out.row(t).data(), static_cast<std::size_t>(cfg.n_bins())));
  }
  return out;
}

std::vector<double> istft(const ComplexMatrix& spectrum, const SpectralConfig& cfg) {
  const int win = cfg.win_length();
  const int hop = cfg.hop_length();
  const Eigen::Index frames = spectrum.rows();
  if (frames == 0) return {};
  const auto window = hann_window(win);
  auto& fft = detail::RealFft::for_size(cfg.fft_size);

  const std::size_t length = static_cast<std::size_t>(frames - 1) * hop + win;
  std::vector<double> out(length, 0.0);
  std::vector<double> wss(length, 0.0);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  const double scale = 1.0 / cfg.fft_size;
  for (Eigen::Index t = 0; t < frames; ++t) {
    fft.inverse(std::span(spectrum.row(t).data(), static_cast<std::size_t>(cfg.n_bins())),
                frame);
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < win; ++n) {
      out[start + n] += window[n] * frame[n] * scale;
      wss[start + n] += window[n] * window[n];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = wss[i] < 1e-8 ? 0.0 : out[i] / wss[i];
  }
  return out;
}

namespace {

std::vector<double> to_double(std::span<const float> s) { return {s.begin(), s.end()}; }

void require_rate(const audio::Waveform& w, const SpectralConfig& cfg) {
  if (w.sample_rate() != cfg.sample_rate) {
    throw Error(ErrorCode::RateMismatch, "waveform at " + std::to_string(w.sample_rate()) +
                                             " Hz, config expects " +
                                             std::to_string(cfg.sample_rate) + " Hz");
  }
}

}  // namespace

MagnitudeSpectrogram stft_magnitude(const audio::Waveform& w, const SpectralConfig& cfg) {
  cfg.validate();
  require_rate(w, cfg);
  const auto samples = to_double(w.samples());
  return {stft(samples, cfg).cwiseAbs(), cfg};
}

Matrix mel_filterbank(const SpectralConfig& cfg) {
  cfg.validate();
  const int n_bins = cfg.n_bins();
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_mels + 1));
  }

  Matrix fb = Matrix::Zero(cfg.n_mels, n_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
      double v = 0.0;
      if (f > lo && f <= center) {
        v = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        v = (hi - f) / (hi - center);
      }
      fb(m, k) = v;
    }
    const double peak = fb.row(m).maxCoeff();
    if (peak > 0.0) fb.row(m) /= peak;
  }
  return fb;
}

MelSpectrogram log_mel_spectrogram(const audio::Waveform& w, const SpectralConfig& cfg) {
  const auto mag = stft_magnitude(w, cfg);
  const Matrix fb = mel_filterbank(cfg);
  Matrix mel = mag.values.array().square().matrix() * fb.transpose();
  mel = mel.array().max(cfg.log_floor).log10().matrix();
  return {std::move(mel), false, std::nullopt, std::nullopt, cfg};
}

MelSpectrogram normalize(const MelSpectrogram& log_mel) {
  if (log_mel.normalized) return log_mel;
  const double lo = log_mel.values.minCoeff();
  const double hi = log_mel.values.maxCoeff();
  if (!(hi > lo)) {
    throw Error(ErrorCode::DegenerateRange,
                "constant log-mel spectrogram (value " + std::to_string(lo) + ")");
  }
  Matrix v = ((log_mel.values.array() - lo) / (hi - lo)).max(0.0).min(1.0).matrix();
  return {std::move(v), true, lo, hi, log_mel.config};
}

Matrix denormalize(const MelSpectrogram& m) {
  if (!m.normalized) return m.values;
  if (!m.norm_min || !m.norm_max) {
    throw Error(ErrorCode::MissingNormStats, "normalized spectrogram without min/max");
  }
  return (m.values.array() * (*m.norm_max - *m.norm_min) + *m.norm_min).matrix();
}

MelSpectrogram mel_spectrogram(const audio::Waveform& w, const SpectralConfig& cfg) {
  return normalize(log_mel_spectrogram(w, cfg));
}

std::vector<double> griffin_lim_magnitude(const Matrix& magnitude, const SpectralConfig& cfg,
                                          GriffinLimTrace* trace) {
  cfg.validate();
  const Eigen::Index bins = magnitude.cols();
  if (bins != cfg.n_bins()) {
    throw Error(ErrorCode::InvalidConfig, "magnitude has " + std::to_string(bins) +
                                              " bins, config expects " +
                                              std::to_string(cfg.n_bins()));
  }
  // Hermitian weights: interior bins stand for two bins of the full spectrum.
  Eigen::RowVectorXd weight = Eigen::RowVectorXd::Constant(bins, 2.0);
  weight(0) = 1.0;
  weight(bins - 1) = 1.0;
  const double target_norm =
      std::sqrt((magnitude.array().square().rowwise() * weight.array()).sum());

  ComplexMatrix estimate = magnitude.cast<std::complex<double>>();
  if (trace) trace->spectral_convergence.clear();
  for (int i = 0; i < cfg.griffin_lim_iters; ++i) {
    const auto signal = istft(estimate, cfg);
    const ComplexMatrix rebuilt = stft(signal, cfg);
    if (trace) {
      const Matrix diff = rebuilt.cwiseAbs() - magnitude;
      const double err = std::sqrt((diff.array().square().rowwise() * weight.array()).sum());
      trace->spectral_convergence.push_back(target_norm > 0.0 ? err / target_norm : 0.0);
    }
    for (Eigen::Index t = 0; t < estimate.rows(); ++t) {
      for (Eigen::Index k = 0; k < bins; ++k) {
        const std::complex<double> z = rebuilt(t, k);
        const double a = std::abs(z);
        estimate(t, k) = a > 0.0 ? magnitude(t, k) * (z / a)
                                 : std::complex<double>(magnitude(t, k), 0.0);
      }
    }
  }
  return istft(estimate, cfg);
}

namespace {

// Tikhonov-regularized Moore-Penrose inverse of the filterbank, n_bins x n_mels.
Matrix filterbank_pseudo_inverse(const Matrix& fb) {
  const Eigen::MatrixXd gram = fb * fb.transpose();
  const double lambda = 1e-8 * gram.diagonal().maxCoeff();
  const Eigen::MatrixXd reg =
      gram + lambda * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
  return fb.transpose() * reg.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

}  // namespace

audio::Waveform griffin_lim(const MelSpectrogram& m, const SpectralConfig& cfg,
                            GriffinLimTrace* trace) {
  cfg.validate();
  if (m.n_mels() != cfg.n_mels) {
    throw Error(ErrorCode::InvalidConfig, "spectrogram has " + std::to_string(m.n_mels()) +
                                              " bands, config expects " +
                                              std::to_string(cfg.n_mels));
  }
  const Matrix log_mel = denormalize(m);
  const Matrix mel_power = log_mel.unaryExpr([](double v) { return std::pow(10.0, v); });
  const Matrix inverse = filterbank_pseudo_inverse(mel_filterbank(cfg));
  const Matrix magnitude =
      (mel_power * inverse.transpose()).array().max(0.0).sqrt().matrix();

  auto signal = griffin_lim_magnitude(magnitude, cfg, trace);
  double peak = 0.0;
  for (double s : signal) peak = std::max(peak, std::abs(s));
  const double gain = peak > 0.0 ? kGriffinLimPeak / peak : 1.0;
  std::vector<float> out(signal.size());
  std::transform(signal.begin(), signal.end(), out.begin(),
                 [gain](double s) { return static_cast<float>(s * gain); });
  return audio::Waveform(std::move(out), cfg.sample_rate);
}

}  // namespace vocbench::spectral
