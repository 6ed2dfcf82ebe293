#include "gait/synth_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "gait/audio_io.hpp"
#include "gait/errors.hpp"
#include "fft_internal.hpp"

namespace gait {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state = h ^ (a * 0xD6E8FEB86659FD93ULL);
  h = splitmix64(state);
  state = h ^ (b * 0xCA5A826395121157ULL);
  h = splitmix64(state);
  state = h ^ (c * 0x9E3779B97F4A7C15ULL);
  return splitmix64(state);
}

// mt19937_64 with explicit uniform/gaussian mappings, so streams are pinned
// independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {  // Box-Muller
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

int condition_code(Condition c) {
  switch (c) {
    case Condition::kNormal: return 1;
    case Condition::kBackpack: return 2;
    case Condition::kShoeCover: return 3;
  }
  return 0;
}

// Linear interpolation of band gains at frequency hz; bands span 0..Nyquist.
double band_gain(const std::vector<double>& bands, double hz, double nyquist) {
  double pos = hz / nyquist * bands.size() - 0.5;
  if (pos <= 0.0) return bands.front();
  if (pos >= bands.size() - 1.0) return bands.back();
  int lo = static_cast<int>(pos);
  double frac = pos - lo;
  return bands[lo] * (1.0 - frac) + bands[lo + 1] * frac;
}

// Colored Gaussian noise: white noise filtered per-bin by the band template.
std::vector<double> shaped_noise(Rng& rng, int length,
                                 const std::vector<double>& bands, int sample_rate) {
  const int nfft = internal::next_power_of_two(length);
  std::vector<std::complex<double>> buffer(nfft);
  for (int i = 0; i < length; ++i) buffer[i] = rng.gaussian();
  internal::fft_radix2(buffer);
  const double nyquist = sample_rate / 2.0;
  for (int k = 0; k <= nfft / 2; ++k) {
    double gain = band_gain(bands, k * static_cast<double>(sample_rate) / nfft, nyquist);
    buffer[k] *= gain;
    if (k > 0 && k < nfft / 2) buffer[nfft - k] *= gain;
  }
  internal::fft_radix2(buffer, /*inverse=*/true);
  std::vector<double> out(length);
  for (int i = 0; i < length; ++i) out[i] = buffer[i].real();
  return out;
}

std::vector<double> condition_step_template(const SynthConfig& config,
                                            const SubjectProfile& profile,
                                            Condition condition) {
  std::vector<double> bands = profile.step_spectrum;
  const double nyquist = config.sample_rate / 2.0;
  if (condition == Condition::kBackpack) {
    for (int b = 0; b < kSynthBands; ++b) {
      double x = static_cast<double>(b) / (kSynthBands - 1);
      bands[b] *= 1.0 + config.backpack_tilt * (1.0 - 2.0 * x);
      bands[b] = std::max(bands[b], 1e-3);
    }
  } else if (condition == Condition::kShoeCover) {
    for (int b = 0; b < kSynthBands; ++b) {
      double hz = (b + 0.5) * nyquist / kSynthBands;
      double ratio = hz / config.shoecover_cutoff_hz;
      bands[b] /= 1.0 + ratio * ratio;
    }
  }
  return bands;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_subjects < 1 || takes_n < 1 || takes_b < 1 || takes_s < 1 ||
      steps_per_recording < 1) {
    throw Error(ErrorCode::kInvalidArgument, "all counts must be >= 1");
  }
  if (enroll_takes < 1 || enroll_takes >= takes_n) {
    throw Error(ErrorCode::kInvalidArgument,
                "enroll_takes must leave at least one N identification take");
  }
  if (period_jitter < 0.0 || period_jitter >= 0.5) {
    throw Error(ErrorCode::kInvalidArgument, "period_jitter must be in [0, 0.5)");
  }
  if (period_min <= 0.0 || period_max < period_min) {
    throw Error(ErrorCode::kInvalidArgument, "invalid step period range");
  }
  if (sample_rate < 4000) {
    throw Error(ErrorCode::kInvalidArgument, "sample_rate must be at least 4000 Hz");
  }
}

SubjectProfile subject_profile(const SynthConfig& config, int subject_index) {
  Rng rng(derive_seed(config.seed, subject_index + 1, 0, 0));
  SubjectProfile profile;
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "s%03d", subject_index + 1);
  profile.subject_id = buffer;

  const double nyquist = config.sample_rate / 2.0;
  profile.step_spectrum.resize(kSynthBands);
  profile.rustle_spectrum.resize(kSynthBands);
  for (int b = 0; b < kSynthBands; ++b) {
    double hz = (b + 0.5) * nyquist / kSynthBands;
    // Common footstep-like rolloff; the template draw carries the identity.
    double step_rolloff = 1.0 / (1.0 + std::pow(hz / 3000.0, 2.0));
    double rustle_rolloff = 1.0 / (1.0 + std::pow(hz / 2000.0, 2.0));
    profile.step_spectrum[b] =
        step_rolloff * std::exp(config.template_sigma * rng.gaussian());
    profile.rustle_spectrum[b] =
        rustle_rolloff * std::exp(config.rustle_sigma * rng.gaussian());
  }
  profile.base_period = rng.uniform(config.period_min, config.period_max);
  return profile;
}

std::vector<double> render_recording(const SynthConfig& config,
                                     const SubjectProfile& profile,
                                     Condition condition, int take) {
  config.validate();
  int subject_index = std::stoi(profile.subject_id.substr(1)) - 1;
  Rng rng(derive_seed(config.seed, subject_index + 1, condition_code(condition),
                      take));
  const int rate = config.sample_rate;
  const double nyquist = rate / 2.0;

  double period = profile.base_period;
  if (condition == Condition::kBackpack) period *= config.backpack_period_factor;

  // Step onsets at jittered period.
  const double lead_in = 0.20 + 0.05 * rng.uniform();
  std::vector<double> onsets(config.steps_per_recording);
  double t = lead_in;
  for (int i = 0; i < config.steps_per_recording; ++i) {
    onsets[i] = t;
    t += period * (1.0 + config.period_jitter * (2.0 * rng.uniform() - 1.0));
  }

  const auto step_bands = condition_step_template(config, profile, condition);
  double burst_seconds = 0.060;
  double decay_tau = 0.012;
  double attack_seconds = 0.002;
  if (condition == Condition::kShoeCover) {
    burst_seconds *= config.shoecover_decay_factor;
    decay_tau *= config.shoecover_decay_factor;
    attack_seconds *= 4.0;
  }

  const double tail = 0.25;
  const int total =
      static_cast<int>(std::ceil((onsets.back() + burst_seconds + tail) * rate));
  std::vector<double> mix(total, 0.0);
  const int burst_len = static_cast<int>(std::lround(burst_seconds * rate));
  const int attack_len = std::max(1, static_cast<int>(std::lround(attack_seconds * rate)));

  for (double onset : onsets) {
    std::vector<double> burst = shaped_noise(rng, burst_len, step_bands, rate);
    double rms = 0.0;
    for (double x : burst) rms += x * x;
    rms = std::sqrt(rms / burst_len);
    double amplitude = (1.0 + 0.1 * (2.0 * rng.uniform() - 1.0)) / std::max(rms, 1e-12);
    const int start = static_cast<int>(std::lround(onset * rate));
    for (int i = 0; i < burst_len && start + i < total; ++i) {
      double env = i < attack_len ? static_cast<double>(i + 1) / attack_len
                                  : std::exp(-(i - attack_len) / (decay_tau * rate));
      mix[start + i] += amplitude * env * burst[i];
    }
  }

  // Continuous low-level rustle between (and under) the steps.
  std::vector<double> rustle = shaped_noise(rng, total, profile.rustle_spectrum, rate);
  double rustle_rms = 0.0;
  for (double x : rustle) rustle_rms += x * x;
  rustle_rms = std::sqrt(rustle_rms / total);
  double rustle_gain = config.rustle_level / std::max(rustle_rms, 1e-12);
  for (int i = 0; i < total; ++i) mix[i] += rustle_gain * rustle[i];

  // Stationary background noise at the configured SNR.
  double signal_power = 0.0;
  for (double x : mix) signal_power += x * x;
  signal_power /= total;
  double noise_std = std::sqrt(signal_power / std::pow(10.0, config.snr_db / 10.0));
  for (int i = 0; i < total; ++i) mix[i] += noise_std * rng.gaussian();

  double peak = 0.0;
  for (double x : mix) peak = std::max(peak, std::abs(x));
  double norm = peak > 0.0 ? 0.9 / peak : 1.0;
  for (double& x : mix) x *= norm;
  return mix;
}

Manifest generate_corpus(const SynthConfig& config, const std::string& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create output directory '" + out_dir + "': " + ec.message());
  }

  Manifest manifest;
  manifest.base_dir = out_dir;
  manifest.split = "test";

  struct TakeSpec {
    Condition condition;
    int take;
    Role role;
  };
  std::vector<TakeSpec> specs;
  for (int take = 1; take <= config.takes_n; ++take) {
    specs.push_back({Condition::kNormal, take,
                     take <= config.enroll_takes ? Role::kEnrollment
                                                 : Role::kIdentification});
  }
  for (int take = 1; take <= config.takes_b; ++take) {
    specs.push_back({Condition::kBackpack, take, Role::kIdentification});
  }
  for (int take = 1; take <= config.takes_s; ++take) {
    specs.push_back({Condition::kShoeCover, take, Role::kIdentification});
  }

  for (int subject = 0; subject < config.num_subjects; ++subject) {
    SubjectProfile profile = subject_profile(config, subject);
    for (const auto& spec : specs) {
      std::vector<double> samples =
          render_recording(config, profile, spec.condition, spec.take);
      std::string filename = profile.subject_id + "_" +
                             condition_letter(spec.condition) +
                             std::to_string(spec.take) + ".wav";
      write_wav_mono16((std::filesystem::path(out_dir) / filename).string(), samples,
                       config.sample_rate);
      ManifestEntry entry;
      entry.subject_id = profile.subject_id;
      entry.condition = spec.condition;
      entry.take = spec.take;
      entry.role = spec.role;
      entry.path = filename;
      entry.step_count = config.steps_per_recording;
      manifest.entries.push_back(std::move(entry));
    }
  }

  std::ofstream csv(std::filesystem::path(out_dir) / "manifest.csv",
                    std::ios::trunc);
  if (!csv) {
    throw Error(ErrorCode::kIoError, "cannot write manifest.csv in '" + out_dir + "'");
  }
  csv << "# split: " << manifest.split << "\n";
  csv << "subject_id,condition,take,role,path,step_count\n";
  for (const auto& entry : manifest.entries) {
    csv << entry.subject_id << ',' << condition_letter(entry.condition) << ','
        << entry.take << ','
        << (entry.role == Role::kEnrollment ? "enrollment" : "identification") << ','
        << entry.path << ',' << entry.step_count.value() << "\n";
  }
  if (!csv.flush()) {
    throw Error(ErrorCode::kIoError, "short write to manifest.csv");
  }
  return manifest;
}

}  // namespace gait
