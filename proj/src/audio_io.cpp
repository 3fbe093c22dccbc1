#include "vocbench/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vocbench/error.hpp"

namespace vocbench::audio {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

Waveform::Waveform(std::vector<float> samples, int sample_rate,
                   std::optional<std::string> source_path)
    : samples_(std::move(samples)),
      sample_rate_(sample_rate),
      source_path_(std::move(source_path)) {
  if (sample_rate_ <= 0) {
    throw Error(ErrorCode::InvalidConfig,
                "sample rate must be positive, got " + std::to_string(sample_rate_));
  }
  for (float& s : samples_) s = std::clamp(s, -1.0f, 1.0f);
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void append_le(std::vector<char>& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const char* p, const FormatChunk& fmt) {
  if (fmt.format == kFormatFloat) return read_le<float>(p);
  switch (fmt.bits) {
    case 16:
      return read_le<std::int16_t>(p) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<unsigned char>(p[0]) |
                       (static_cast<unsigned char>(p[1]) << 8) |
                       (static_cast<std::int32_t>(static_cast<signed char>(p[2])) << 16);
      return v / 8388608.0;
    }
    case 32:
      return read_le<std::int32_t>(p) / 2147483648.0;
  }
  return 0.0;
}

}  // namespace

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::CorruptHeader, name + " is not a RIFF/WAVE file");
  }

  std::optional<FormatChunk> fmt;
  const char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    std::size_t size = read_le<std::uint32_t>(id + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw Error(ErrorCode::CorruptHeader, name + ": truncated fmt chunk");
      }
      const char* f = bytes.data() + body;
      FormatChunk c;
      c.format = read_le<std::uint16_t>(f);
      c.channels = read_le<std::uint16_t>(f + 2);
      c.sample_rate = read_le<std::uint32_t>(f + 4);
      c.bits = read_le<std::uint16_t>(f + 14);
      if (c.format == kFormatExtensible) {
        if (size < 40) {
          throw Error(ErrorCode::CorruptHeader, name + ": truncated extensible fmt");
        }
        c.format = read_le<std::uint16_t>(f + 24);
      }
      fmt = c;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streamed files may carry a placeholder size; keep what is present.
      data_size = std::min(size, bytes.size() - std::min(body, bytes.size()));
      break;
    }
    pos = body + size + (size & 1);
  }

  if (!fmt) throw Error(ErrorCode::CorruptHeader, name + ": missing fmt chunk");
  if (!data) throw Error(ErrorCode::CorruptHeader, name + ": missing data chunk");
  if (fmt->channels == 0 || fmt->sample_rate == 0) {
    throw Error(ErrorCode::CorruptHeader, name + ": zero channels or sample rate");
  }
  const bool pcm_ok = fmt->format == kFormatPcm &&
                      (fmt->bits == 16 || fmt->bits == 24 || fmt->bits == 32);
  const bool float_ok = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm_ok && !float_ok) {
    throw Error(ErrorCode::UnsupportedFormat,
                name + ": format tag " + std::to_string(fmt->format) + " with " +
                    std::to_string(fmt->bits) + " bits");
  }

  const std::size_t sample_bytes = fmt->bits / 8;
  const std::size_t frame_bytes = sample_bytes * fmt->channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw Error(ErrorCode::EmptyAudio, name + " has no frames");

  std::vector<float> mono(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const char* frame = data + i * frame_bytes;
    double sum = 0.0;
    for (std::size_t ch = 0; ch < fmt->channels; ++ch) {
      sum += decode_sample(frame + ch * sample_bytes, *fmt);
    }
    mono[i] = static_cast<float>(sum / fmt->channels);
  }
  return Waveform(std::move(mono), static_cast<int>(fmt->sample_rate), name);
}

std::vector<char> encode_wav(const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  append_le<std::uint32_t>(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, kFormatPcm);
  append_le<std::uint16_t>(out, 1);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate()));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate()) * 2);
  append_le<std::uint16_t>(out, 2);
  append_le<std::uint16_t>(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  append_le<std::uint32_t>(out, data_bytes);
  for (float s : w.samples()) {
    const long q = std::lround(static_cast<double>(s) * 32768.0);
    append_le<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L)));
  }
  return out;
}

void save_wav(const Waveform& w, const std::filesystem::path& path) {
  const auto bytes = encode_wav(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace vocbench::audio
