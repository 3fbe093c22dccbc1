#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "synth_speech.hpp"
#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"

using namespace vocbench;
using namespace vocbench::metrics;

namespace {

const SpectralConfig kDefaults{};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected vocbench::Error");
  return ErrorCode::Usage;
}

MelSpectrogram normalized_frames(Eigen::Index frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MelSpectrogram m;
  m.values = Matrix::Zero(frames, 80);
  for (Eigen::Index i = 0; i < m.values.size(); ++i)
    m.values.data()[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  m.values(0, 0) = 0.0;
  m.values(0, 1) = 1.0;
  m.normalized = true;
  m.norm_min = -8.0;
  m.norm_max = 2.0;
  return m;
}

// Windowed SSIM computed per window with centred second moments.
double ssim_oracle(const Matrix& x, const Matrix& y) {
  const int w = 11, half = 5;
  double g[11], gs = 0;
  for (int i = 0; i < w; ++i) gs += g[i] = std::exp(-double((i - half) * (i - half)) / (2 * 1.5 * 1.5));
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  long count = 0;
  for (Eigen::Index r = 0; r + w <= x.rows(); ++r) {
    for (Eigen::Index c = 0; c + w <= x.cols(); ++c) {
      double mx = 0, my = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          const double wt = g[i] * g[j] / (gs * gs);
          mx += wt * x(r + i, c + j);
          my += wt * y(r + i, c + j);
        }
      double vx = 0, vy = 0, cov = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          const double wt = g[i] * g[j] / (gs * gs);
          const double dx = x(r + i, c + j) - mx, dy = y(r + i, c + j) - my;
          vx += wt * dx * dx;
          vy += wt * dy * dy;
          cov += wt * dx * dy;
        }
      total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("align trims to the shorter length") {
  const auto ref = normalized_frames(77, 1);
  auto cand = ref;
  cand.values.conservativeResize(76, 80);
  const auto pair = align(ref, cand);
  CHECK(pair.n_frames() == 76);
  CHECK(pair.n_mels() == 80);
}

TEST_CASE("align rejects a large length mismatch") {
  const auto ref = normalized_frames(77, 1);
  auto cand = ref;
  cand.values.conservativeResize(60, 80);
  CHECK(code_of([&] { align(ref, cand); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("align of identical inputs is bit-identical") {
  const auto ref = mel_spectrogram(fixtures::synth_speech(2, {.seconds = 1.0}), kDefaults);
  const auto pair = align(ref, ref);
  CHECK(pair.candidate() == pair.reference());
  CHECK(pair.reference() == ref.values);
}

TEST_CASE("align rescales the candidate with the reference range") {
  auto ref = normalized_frames(40, 3);
  auto cand = normalized_frames(40, 4);
  cand.norm_min = -9.0;
  cand.norm_max = 3.0;
  const auto pair = align(ref, cand);
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index j = 0; j < 80; ++j) {
      const double log_value = -9.0 + 12.0 * cand.values(i, j);
      const double expected = std::clamp((log_value + 8.0) / 10.0, 0.0, 1.0);
      CHECK(pair.candidate()(i, j) == doctest::Approx(expected).scale(1e-12));
    }
  }
}

TEST_CASE("align rejects differing configs") {
  const auto ref = normalized_frames(40, 3);
  auto cand = ref;
  cand.config.fft_size = 2048;
  CHECK(code_of([&] { align(ref, cand); }) == ErrorCode::ConfigMismatch);
}

TEST_CASE("SSIM identity, symmetry and oracle") {
  const auto ref = mel_spectrogram(fixtures::synth_speech(5, {.seconds = 1.0}), kDefaults);
  CHECK(ssim(align(ref, ref)) == 1.0);

  const auto a = normalized_frames(30, 7);
  const auto b = normalized_frames(30, 8);
  const auto ab = AlignedSpecPair::from_normalized(a.values, b.values);
  const auto ba = AlignedSpecPair::from_normalized(b.values, a.values);
  CHECK(ssim(ab) == ssim(ba));
  CHECK(ssim(ab) == doctest::Approx(ssim_oracle(a.values, b.values)).epsilon(1e-10));
}

TEST_CASE("SSIM drops below 0.9 under sigma 0.1 noise") {
  const auto ref = mel_spectrogram(fixtures::synth_speech(6, {.seconds = 2.0}), kDefaults);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.1);
  Matrix noisy = ref.values;
  for (Eigen::Index i = 0; i < noisy.size(); ++i)
    noisy.data()[i] = std::clamp(noisy.data()[i] + noise(rng), 0.0, 1.0);
  const double s = ssim(AlignedSpecPair::from_normalized(ref.values, noisy));
  CHECK(s < 0.9);
}

TEST_CASE("SSIM needs an 11x11 image") {
  const Matrix small = Matrix::Zero(10, 80);
  CHECK(code_of([&] { ssim(AlignedSpecPair::from_normalized(small, small)); }) ==
        ErrorCode::TooSmall);
}

TEST_CASE("LS-MSE and PSNR") {
  const auto zero = AlignedSpecPair::from_normalized(Matrix::Zero(20, 80), Matrix::Zero(20, 80));
  CHECK(ls_mse(zero) == 0.0);
  CHECK(std::isinf(psnr(zero)));
  CHECK(psnr(zero) > 0);

  const auto half = AlignedSpecPair::from_normalized(Matrix::Zero(20, 80), Matrix::Constant(20, 80, 0.5));
  CHECK(ls_mse(half) == 0.25);

  CHECK(psnr_from_mse(0.001) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0).epsilon(1e-12));

  const auto v = spectrogram_metrics(half);
  CHECK(v.psnr == doctest::Approx(10 * std::log10(4.0)));
  CHECK_FALSE(v.fad.has_value());
}

TEST_CASE("melstat embedding") {
  const auto five = fixtures::synth_speech(12, {.seconds = 5.0});
  const auto e = embed(five, kMelStatProvider, kDefaults);
  CHECK(e.rows() == 5);
  CHECK(e.cols() == 160);
  CHECK(e == embed(five, kMelStatProvider, kDefaults));

  // Window 0 by hand: the first second's log-mel frames.
  const audio::Waveform first({five.samples().begin(), five.samples().begin() + 24000}, 24000);
  const auto lm = spectral::log_mel_spectrogram(first, kDefaults).values;
  const Eigen::VectorXd mean = lm.colwise().mean();
  for (int b = 0; b < 80; ++b) {
    const double var = (lm.col(b).array() - mean(b)).square().mean();
    CHECK(e(0, b) == doctest::Approx(mean(b)).epsilon(1e-12));
    CHECK(e(0, 80 + b) == doctest::Approx(std::sqrt(var)).epsilon(1e-9).scale(1e-12));
  }

  const auto trailing = fixtures::synth_speech(12, {.seconds = 2.7});
  CHECK(embed(trailing, kMelStatProvider, kDefaults).rows() == 2);

  CHECK(code_of([&] { embed(fixtures::synth_speech(1, {.seconds = 0.5}), kMelStatProvider, kDefaults); }) ==
        ErrorCode::TooShort);
  CHECK(code_of([&] { embed(five, "vggish", kDefaults); }) == ErrorCode::UnknownProvider);
}

TEST_CASE("embedding files") {
  fixtures::TempDir dir("emb");
  EmbeddingFile f{Eigen::MatrixXd::Random(4, 3), "melstat-v1"};
  write_embeddings(f, dir / "e.vbemb");
  const auto back = read_embeddings(dir / "e.vbemb");
  CHECK(back.provider_id == "melstat-v1");
  CHECK(back.vectors.isApprox(f.vectors, 1e-6));

  {
    std::ofstream csv(dir / "e.csv");
    csv << "1,2,3\n4,5,6\n";
  }
  const auto c = read_embeddings_csv(dir / "e.csv", "external");
  CHECK(c.vectors.rows() == 2);
  CHECK(c.vectors(1, 2) == 6.0);
  CHECK(c.provider_id == "external");
}
