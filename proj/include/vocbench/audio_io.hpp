#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vocbench::audio {

/// Mono audio at a known sample rate. Samples are clamped to [-1, 1] on
/// construction, so every Waveform satisfies the range invariant.
class Waveform {
 public:
  Waveform(std::vector<float> samples, int sample_rate,
           std::optional<std::string> source_path = std::nullopt);

  std::span<const float> samples() const noexcept { return samples_; }
  int sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double duration_seconds() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }
  const std::optional<std::string>& source_path() const noexcept {
    return source_path_;
  }

 private:
  std::vector<float> samples_;
  int sample_rate_;
  std::optional<std::string> source_path_;
};

/// Reads a RIFF/WAVE file with PCM-16/24/32 or IEEE float-32 samples.
/// Multi-channel input is averaged to mono.
Waveform load_wav(const std::filesystem::path& path);

/// Writes 16-bit little-endian PCM.
void save_wav(const Waveform& w, const std::filesystem::path& path);

/// Encodes a waveform as an in-memory PCM-16 WAVE file.
std::vector<char> encode_wav(const Waveform& w);

// Kaiser-windowed sinc resampler parameters.
inline constexpr double kResampleKaiserBeta = 8.6;
inline constexpr int kResampleZeroCrossings = 64;

/// Band-limited resampling to target_rate (>= 8000 Hz). Output length is
/// round(n * target_rate / source_rate); matching rates return the input
/// unchanged.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace vocbench::audio
