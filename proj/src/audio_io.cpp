#include "gait/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "gait/errors.hpp"

namespace gait {

namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatIeeeFloat = 0x0003;

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

struct FmtChunk {
  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

double decode_sample(const unsigned char* p, uint16_t bits, uint16_t format) {
  if (format == kFormatIeeeFloat) {
    float f;
    std::memcpy(&f, p, 4);
    return static_cast<double>(f);
  }
  switch (bits) {
    case 8:
      // 8-bit PCM is unsigned with midpoint 128.
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: {
      int16_t v = static_cast<int16_t>(p[0] | p[1] << 8);
      return v / 32768.0;
    }
    case 24: {
      int32_t v = p[0] | p[1] << 8 | p[2] << 16;
      if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
      return v / 8388608.0;
    }
    case 32: {
      int32_t v;
      std::memcpy(&v, p, 4);
      return v / 2147483648.0;
    }
    default:
      throw Error(ErrorCode::kUnsupportedEncoding,
                  "unsupported PCM bit depth " + std::to_string(bits));
  }
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open '" + path + "'");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "'" + path + "' is not a RIFF/WAVE file");
  }

  FmtChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    uint32_t chunk_size = read_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw Error(ErrorCode::kCorruptHeader,
                  "truncated chunk in '" + path + "'");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        throw Error(ErrorCode::kCorruptHeader, "fmt chunk too small");
      }
      fmt.format = read_u16(bytes.data() + body);
      fmt.channels = read_u16(bytes.data() + body + 2);
      fmt.sample_rate = read_u32(bytes.data() + body + 4);
      fmt.bits_per_sample = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    // Chunks are word-aligned; odd sizes carry a pad byte.
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (!have_fmt || data == nullptr) {
    throw Error(ErrorCode::kCorruptHeader,
                "missing fmt or data chunk in '" + path + "'");
  }
  if (fmt.format != kFormatPcm && fmt.format != kFormatIeeeFloat) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "WAV format tag " + std::to_string(fmt.format) +
                    " is not integer or float PCM");
  }
  if (fmt.format == kFormatIeeeFloat && fmt.bits_per_sample != 32) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "only 32-bit float PCM is supported");
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw Error(ErrorCode::kCorruptHeader, "invalid fmt chunk fields");
  }

  uint16_t bytes_per_sample = fmt.bits_per_sample / 8;
  if (bytes_per_sample == 0 || fmt.bits_per_sample % 8 != 0) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "bit depth " + std::to_string(fmt.bits_per_sample));
  }
  std::size_t frame_size = static_cast<std::size_t>(bytes_per_sample) * fmt.channels;
  std::size_t num_frames = data_size / frame_size;
  if (num_frames == 0) {
    throw Error(ErrorCode::kCorruptHeader, "empty data chunk in '" + path + "'");
  }

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.channels.assign(fmt.channels, std::vector<double>(num_frames));
  for (std::size_t n = 0; n < num_frames; ++n) {
    const unsigned char* frame = data + n * frame_size;
    for (uint16_t c = 0; c < fmt.channels; ++c) {
      clip.channels[c][n] =
          decode_sample(frame + c * bytes_per_sample, fmt.bits_per_sample, fmt.format);
    }
  }
  return clip;
}

void write_wav_mono16(const std::string& path, std::span<const double> samples,
                      int sample_rate) {
  if (samples.empty() || sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty signal or bad sample rate");
  }
  std::vector<unsigned char> out;
  uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  uint32_t riff_size = 36 + data_size;
  auto push_u32 = [&out](uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
  };
  auto push_u16 = [&out](uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
  };
  auto push_tag = [&out](const char* t) { out.insert(out.end(), t, t + 4); };

  push_tag("RIFF");
  push_u32(riff_size);
  push_tag("WAVE");
  push_tag("fmt ");
  push_u32(16);
  push_u16(kFormatPcm);
  push_u16(1);  // mono
  push_u32(static_cast<uint32_t>(sample_rate));
  push_u32(static_cast<uint32_t>(sample_rate) * 2);  // byte rate
  push_u16(2);                                       // block align
  push_u16(16);
  push_tag("data");
  push_u32(data_size);
  for (double x : samples) {
    double clamped = std::clamp(x, -1.0, 1.0);
    int v = static_cast<int>(std::lround(clamped * 32767.0));
    push_u16(static_cast<uint16_t>(static_cast<int16_t>(v)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  }
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) {
    throw Error(ErrorCode::kIoError, "short write to '" + path + "'");
  }
}

MonoSignal downmix(const AudioClip& clip) {
  MonoSignal mono;
  mono.sample_rate = clip.sample_rate;
  std::size_t n = clip.length();
  mono.samples.resize(n);
  double inv = 1.0 / clip.channel_count();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& channel : clip.channels) sum += channel[i];
    mono.samples[i] = sum * inv;
  }
  return mono;
}

}  // namespace gait
