#ifndef GAIT_AUDIO_IO_HPP
#define GAIT_AUDIO_IO_HPP

#include <span>
#include <string>
#include <vector>

namespace gait {

// Multi-channel PCM recording, samples normalized to [-1, 1].
struct AudioClip {
  std::vector<std::vector<double>> channels;  // channel-major, equal lengths
  int sample_rate = 0;

  int channel_count() const { return static_cast<int>(channels.size()); }
  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
};

struct MonoSignal {
  std::vector<double> samples;
  int sample_rate = 0;
};

// Reads a PCM RIFF/WAVE file (8/16/24/32-bit integer or 32-bit float,
// little-endian). Integer samples are normalized by 2^(bits-1). Chunks other
// than `fmt ` and `data` are skipped.
AudioClip load_wav(const std::string& path);

// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1] and scaled by
// 2^15 - 1, rounding to nearest.
void write_wav_mono16(const std::string& path, std::span<const double> samples,
                      int sample_rate);

// Channel average; mono input passes through unchanged.
MonoSignal downmix(const AudioClip& clip);

}  // namespace gait

#endif  // GAIT_AUDIO_IO_HPP
