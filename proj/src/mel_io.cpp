#include <cmath>
#include <fstream>
#include <limits>

#include "binary.hpp"
#include "vocbench/spectral.hpp"

namespace vocbench::spectral {

namespace {
constexpr char kMelMagic[7] = "VBMEL";  // five letters plus the terminating NUL
constexpr std::uint32_t kMelVersion = 1;
}  // namespace

void write_mel(const MelSpectrogram& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(kMelMagic, 6);
  detail::put<std::uint32_t>(out, kMelVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_frames()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_mels()));
  constexpr float nan = std::numeric_limits<float>::quiet_NaN();
  detail::put<float>(out, m.norm_min ? static_cast<float>(*m.norm_min) : nan);
  detail::put<float>(out, m.norm_max ? static_cast<float>(*m.norm_max) : nan);
  detail::put<std::uint8_t>(out, m.normalized ? 1 : 0);
  for (Eigen::Index t = 0; t < m.n_frames(); ++t) {
    for (Eigen::Index k = 0; k < m.n_mels(); ++k) {
      detail::put<float>(out, static_cast<float>(m.values(t, k)));
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

MelSpectrogram read_mel(const std::filesystem::path& path, const SpectralConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::string what = path.string();
  detail::expect_magic(in, kMelMagic, what);
  const auto version = detail::get<std::uint32_t>(in, what);
  if (version != kMelVersion) {
    throw Error(ErrorCode::UnsupportedFormat,
                what + ": VBMEL version " + std::to_string(version));
  }
  const auto frames = detail::get<std::uint32_t>(in, what);
  const auto mels = detail::get<std::uint32_t>(in, what);
  const auto lo = detail::get<float>(in, what);
  const auto hi = detail::get<float>(in, what);
  const auto flag = detail::get<std::uint8_t>(in, what);
  if (static_cast<int>(mels) != cfg.n_mels) {
    throw Error(ErrorCode::ConfigMismatch, what + ": " + std::to_string(mels) +
                                               " bands, config expects " +
                                               std::to_string(cfg.n_mels));
  }

  MelSpectrogram m;
  m.values.resize(frames, mels);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint32_t k = 0; k < mels; ++k) {
      m.values(t, k) = detail::get<float>(in, what);
    }
  }
  m.normalized = flag != 0;
  if (!std::isnan(lo)) m.norm_min = lo;
  if (!std::isnan(hi)) m.norm_max = hi;
  m.config = cfg;
  return m;
}

void write_mel_csv(const MelSpectrogram& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.precision(9);
  for (Eigen::Index t = 0; t < m.n_frames(); ++t) {
    for (Eigen::Index k = 0; k < m.n_mels(); ++k) {
      if (k) out << ',';
      out << m.values(t, k);
    }
    out << '\n';
  }
}

}  // namespace vocbench::spectral
