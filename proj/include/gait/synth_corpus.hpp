#ifndef GAIT_SYNTH_CORPUS_HPP
#define GAIT_SYNTH_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gait/dataset_eval.hpp"

namespace gait {

// Seeded generator of synthetic walking-sound corpora: per-subject spectral
// templates drive step transients and inter-step rustle over stationary
// background noise, mirroring the N/B/S protocol shape.
struct SynthConfig {
  int num_subjects = 10;
  int takes_n = 6;
  int takes_b = 2;
  int takes_s = 2;
  int enroll_takes = 4;  // leading N takes used for enrollment
  int sample_rate = 16000;
  double period_min = 0.45;  // subject base step period drawn in [min, max]
  double period_max = 0.65;
  double period_jitter = 0.05;  // per-step fractional jitter
  int steps_per_recording = 5;
  double snr_db = 10.0;  // signal (steps + rustle) over background noise
  std::uint64_t seed = 42;

  // Subject separability and condition-perturbation dials.
  double template_sigma = 1.0;          // log-gain spread of step templates
  double rustle_sigma = 0.5;            // log-gain spread of rustle templates
  double rustle_level = 0.08;           // rustle amplitude relative to bursts
  double backpack_period_factor = 1.12; // condition B slows the cadence
  double backpack_tilt = 0.5;           // condition B low-frequency emphasis
  double shoecover_cutoff_hz = 1500.0;  // condition S low-pass knee
  double shoecover_decay_factor = 2.0;  // condition S softens the transient

  void validate() const;
};

struct SubjectProfile {
  std::string subject_id;
  std::vector<double> step_spectrum;    // per-band gains, deterministic in (seed, id)
  std::vector<double> rustle_spectrum;
  double base_period = 0.55;  // seconds
};

// Number of spectral template bands spanning 0..Nyquist.
constexpr int kSynthBands = 16;

SubjectProfile subject_profile(const SynthConfig& config, int subject_index);

// Renders one recording; exposed so tests can probe single takes.
std::vector<double> render_recording(const SynthConfig& config,
                                     const SubjectProfile& profile,
                                     Condition condition, int take);

// Writes one WAV per (subject, condition, take) plus manifest.csv into
// out_dir; byte-identical for identical (config, seed).
Manifest generate_corpus(const SynthConfig& config, const std::string& out_dir);

}  // namespace gait

#endif  // GAIT_SYNTH_CORPUS_HPP
