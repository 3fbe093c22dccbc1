#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "vocbench/audio_io.hpp"
#include "vocbench/spectral.hpp"

namespace vocbench::metrics {

using spectral::Matrix;
using spectral::MelSpectrogram;
using spectral::SpectralConfig;

// Frame-count difference above this fraction of the reference is rejected.
inline constexpr double kMaxLengthMismatch = 0.05;

/// Reference and candidate spectrograms trimmed to a common length and both
/// expressed on the reference utterance's normalization scale.
class AlignedSpecPair {
 public:
  const Matrix& reference() const noexcept { return reference_; }
  const Matrix& candidate() const noexcept { return candidate_; }
  Eigen::Index n_frames() const noexcept { return reference_.rows(); }
  Eigen::Index n_mels() const noexcept { return reference_.cols(); }

  /// Builds a pair directly from normalized matrices of equal shape.
  static AlignedSpecPair from_normalized(Matrix reference, Matrix candidate);

 private:
  friend AlignedSpecPair align(const MelSpectrogram&, const MelSpectrogram&);
  AlignedSpecPair(Matrix reference, Matrix candidate)
      : reference_(std::move(reference)), candidate_(std::move(candidate)) {}

  Matrix reference_;
  Matrix candidate_;
};

/// Trims to the shorter length and rescales the candidate with the
/// reference's min/max, clamping to [0, 1].
AlignedSpecPair align(const MelSpectrogram& reference, const MelSpectrogram& candidate);

// SSIM parameters for normalized spectrograms.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kSsimDynamicRange = 1.0;

/// Mean SSIM over every 11x11 Gaussian-weighted window that fits inside the
/// spectrogram image.
double ssim(const AlignedSpecPair& pair);

double ls_mse(const AlignedSpecPair& pair);

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10*log10(1 / mse) with unit peak; +infinity for zero error.
double psnr_from_mse(double mse);
double psnr(const AlignedSpecPair& pair);

struct MetricValues {
  double ssim = 0.0;
  double ls_mse = 0.0;
  double psnr = 0.0;
  std::optional<double> fad;
};

/// SSIM, LS-MSE and PSNR of one aligned pair.
MetricValues spectrogram_metrics(const AlignedSpecPair& pair);

// ---------------------------------------------------------------------------
// Embeddings and Frechet audio distance

inline constexpr std::string_view kMelStatProvider = "melstat-v1";
inline constexpr double kCovarianceEps = 1e-6;

/// One embedding row per non-overlapping 1.0 s window: per-band mean and
/// standard deviation of the unnormalized log-mel frames (D = 2 * n_mels).
Eigen::MatrixXd embed(const audio::Waveform& w, std::string_view provider,
                      const SpectralConfig& cfg);

/// Gaussian statistics of an embedding set. Immutable once built.
class EmbeddingSet {
 public:
  /// Unbiased covariance plus kCovarianceEps * I. Requires N >= 2.
  static EmbeddingSet fit(Eigen::MatrixXd vectors, std::string provider_id);

  /// A set defined by its moments alone (no sample vectors).
  static EmbeddingSet from_moments(Eigen::VectorXd mu, Eigen::MatrixXd sigma,
                                   std::string provider_id);

  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const std::string& provider_id() const noexcept { return provider_id_; }
  Eigen::Index dim() const noexcept { return mu_.size(); }

 private:
  EmbeddingSet(Eigen::MatrixXd vectors, Eigen::VectorXd mu, Eigen::MatrixXd sigma,
               std::string provider_id)
      : vectors_(std::move(vectors)),
        mu_(std::move(mu)),
        sigma_(std::move(sigma)),
        provider_id_(std::move(provider_id)) {}

  Eigen::MatrixXd vectors_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  std::string provider_id_;
};

/// Square root of a symmetric PSD matrix by eigendecomposition, with
/// negative eigenvalues clamped to zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

/// Frechet distance between the two fitted Gaussians, clamped to >= 0.
double fad(const EmbeddingSet& background, const EmbeddingSet& evaluation);

/// True when fad(a, b) and fad(b, a) agree within 1e-6 * (1 + fad(a, b)).
bool fad_symmetric_check(const EmbeddingSet& a, const EmbeddingSet& b);

struct EmbeddingFile {
  Eigen::MatrixXd vectors;
  std::string provider_id;
};

// VBEMB binary import/export and CSV import.
void write_embeddings(const EmbeddingFile& e, const std::filesystem::path& path);
EmbeddingFile read_embeddings(const std::filesystem::path& path);
EmbeddingFile read_embeddings_csv(const std::filesystem::path& path, std::string provider_id);

}  // namespace vocbench::metrics
