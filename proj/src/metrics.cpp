#include "vocbench/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "vocbench/error.hpp"

namespace vocbench::metrics {

AlignedSpecPair AlignedSpecPair::from_normalized(Matrix reference, Matrix candidate) {
  if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols()) {
    throw Error(ErrorCode::ConfigMismatch, "pair matrices differ in shape");
  }
  return AlignedSpecPair(std::move(reference), std::move(candidate));
}

AlignedSpecPair align(const MelSpectrogram& reference, const MelSpectrogram& candidate) {
  if (reference.n_mels() != candidate.n_mels() || !(reference.config == candidate.config)) {
    throw Error(ErrorCode::ConfigMismatch, "reference and candidate use different feature configs");
  }
  const Eigen::Index ref_frames = reference.n_frames();
  const Eigen::Index cand_frames = candidate.n_frames();
  if (static_cast<double>(std::abs(ref_frames - cand_frames)) >
      kMaxLengthMismatch * static_cast<double>(ref_frames)) {
    throw Error(ErrorCode::LengthMismatch,
                "reference has " + std::to_string(ref_frames) + " frames, candidate " +
                    std::to_string(cand_frames));
  }
  const Eigen::Index frames = std::min(ref_frames, cand_frames);

  const MelSpectrogram ref = spectral::normalize(reference);
  Matrix cand;
  if (candidate.normalized && candidate.norm_min == ref.norm_min &&
      candidate.norm_max == ref.norm_max) {
    // Already on the reference scale.
    cand = candidate.values.topRows(frames);
  } else {
    const Matrix log_values = spectral::denormalize(candidate);
    const double lo = *ref.norm_min;
    const double span = *ref.norm_max - lo;
    cand = ((log_values.topRows(frames).array() - lo) / span).max(0.0).min(1.0).matrix();
  }
  return AlignedSpecPair(ref.values.topRows(frames), std::move(cand));
}

namespace {

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" filtering: output is (rows - W + 1) x (cols - W + 1).
Matrix filter_valid(const Matrix& img, const std::vector<double>& k) {
  const Eigen::Index w = static_cast<Eigen::Index>(k.size());
  const Eigen::Index rows = img.rows() - w + 1;
  const Eigen::Index cols = img.cols() - w + 1;
  Matrix tmp = Matrix::Zero(rows, img.cols());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index i = 0; i < w; ++i) tmp.row(r) += k[i] * img.row(r + i);
  }
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index i = 0; i < w; ++i) out.col(c) += k[i] * tmp.col(c + i);
  }
  return out;
}

}  // namespace

double ssim(const AlignedSpecPair& pair) {
  if (pair.n_frames() < kSsimWindow || pair.n_mels() < kSsimWindow) {
    throw Error(ErrorCode::TooSmall, "SSIM needs at least " + std::to_string(kSsimWindow) +
                                         " frames and bands, got " +
                                         std::to_string(pair.n_frames()) + "x" +
                                         std::to_string(pair.n_mels()));
  }
  const auto k = gaussian_kernel();
  const Matrix& x = pair.reference();
  const Matrix& y = pair.candidate();
  const Matrix mu_x = filter_valid(x, k);
  const Matrix mu_y = filter_valid(y, k);
  const Matrix xx = filter_valid(x.cwiseProduct(x), k);
  const Matrix yy = filter_valid(y.cwiseProduct(y), k);
  const Matrix xy = filter_valid(x.cwiseProduct(y), k);

  const double c1 = std::pow(kSsimK1 * kSsimDynamicRange, 2);
  const double c2 = std::pow(kSsimK2 * kSsimDynamicRange, 2);
  double total = 0.0;
  for (Eigen::Index r = 0; r < mu_x.rows(); ++r) {
    for (Eigen::Index c = 0; c < mu_x.cols(); ++c) {
      const double mx = mu_x(r, c), my = mu_y(r, c);
      const double vx = xx(r, c) - mx * mx;
      const double vy = yy(r, c) - my * my;
      const double cov = xy(r, c) - mx * my;
      const double num = (2.0 * (mx * my) + c1) * (2.0 * cov + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      total += num / den;
    }
  }
  return total / static_cast<double>(mu_x.size());
}

double ls_mse(const AlignedSpecPair& pair) {
  return (pair.reference() - pair.candidate()).array().square().mean();
}

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const AlignedSpecPair& pair) { return psnr_from_mse(ls_mse(pair)); }

MetricValues spectrogram_metrics(const AlignedSpecPair& pair) {
  MetricValues v;
  v.ssim = ssim(pair);
  v.ls_mse = ls_mse(pair);
  v.psnr = psnr_from_mse(v.ls_mse);
  return v;
}

}  // namespace vocbench::metrics
