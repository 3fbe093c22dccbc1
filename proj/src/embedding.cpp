#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "binary.hpp"
#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"

namespace vocbench::metrics {

Eigen::MatrixXd embed(const audio::Waveform& w, std::string_view provider,
                      const SpectralConfig& cfg) {
  if (provider != kMelStatProvider) {
    throw Error(ErrorCode::UnknownProvider, std::string(provider));
  }
  if (w.sample_rate() != cfg.sample_rate) {
    throw Error(ErrorCode::RateMismatch, "embedding input at " +
                                             std::to_string(w.sample_rate()) + " Hz");
  }
  const auto window = static_cast<std::size_t>(cfg.sample_rate);
  const std::size_t n_windows = w.size() / window;
  if (n_windows == 0) {
    throw Error(ErrorCode::TooShort, "melstat-v1 needs at least 1.0 s of audio, got " +
                                         std::to_string(w.duration_seconds()) + " s");
  }

  const auto samples = w.samples();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_windows), 2 * cfg.n_mels);
  for (std::size_t i = 0; i < n_windows; ++i) {
    audio::Waveform chunk(
        std::vector<float>(samples.begin() + static_cast<std::ptrdiff_t>(i * window),
                           samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * window)),
        cfg.sample_rate);
    const auto mel = spectral::log_mel_spectrogram(chunk, cfg).values;
    const Eigen::RowVectorXd mean = mel.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((mel.rowwise() - mean).array().square().colwise().mean()).sqrt();
    out.row(static_cast<Eigen::Index>(i)) << mean, sd;
  }
  return out;
}

namespace {
constexpr char kEmbMagic[7] = "VBEMB";
constexpr std::uint32_t kEmbVersion = 1;
}  // namespace

void write_embeddings(const EmbeddingFile& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(kEmbMagic, 6);
  detail::put<std::uint32_t>(out, kEmbVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.vectors.rows()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.vectors.cols()));
  detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(e.provider_id.size()));
  out.write(e.provider_id.data(), static_cast<std::streamsize>(e.provider_id.size()));
  for (Eigen::Index r = 0; r < e.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < e.vectors.cols(); ++c) {
      detail::put<float>(out, static_cast<float>(e.vectors(r, c)));
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

EmbeddingFile read_embeddings(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    return read_embeddings_csv(path, "csv:" + path.stem().string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::string what = path.string();
  detail::expect_magic(in, kEmbMagic, what);
  const auto version = detail::get<std::uint32_t>(in, what);
  if (version != kEmbVersion) {
    throw Error(ErrorCode::UnsupportedFormat, what + ": VBEMB version " + std::to_string(version));
  }
  const auto n = detail::get<std::uint32_t>(in, what);
  const auto d = detail::get<std::uint32_t>(in, what);
  const auto id_len = detail::get<std::uint16_t>(in, what);
  EmbeddingFile e;
  e.provider_id.resize(id_len);
  if (!in.read(e.provider_id.data(), id_len)) {
    throw Error(ErrorCode::CorruptHeader, "truncated provider id in " + what);
  }
  e.vectors.resize(n, d);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) e.vectors(r, c) = detail::get<float>(in, what);
  }
  return e;
}

EmbeddingFile read_embeddings_csv(const std::filesystem::path& path, std::string provider_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::CorruptHeader,
                    path.string() + ": non-numeric value '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  path.string() + ": ragged row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  EmbeddingFile e;
  e.provider_id = std::move(provider_id);
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  e.vectors.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) e.vectors(static_cast<Eigen::Index>(r), c) = rows[r][c];
  }
  return e;
}

}  // namespace vocbench::metrics
