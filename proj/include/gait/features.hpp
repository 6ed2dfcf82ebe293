#ifndef GAIT_FEATURES_HPP
#define GAIT_FEATURES_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "gait/audio_io.hpp"

namespace gait {

struct MfccConfig {
  double frame_length = 0.025;   // seconds
  double frame_shift = 0.010;    // seconds
  int num_cepstra = 13;          // coefficients 0..12
  int num_mel_filters = 26;
  double preemphasis = 0.97;
  int delta_window = 2;          // frames on each side
  double log_floor = 1e-10;      // filter energies are clamped here before log
  int expected_sample_rate = 16000;

  int frame_length_samples() const;
  int frame_shift_samples() const;
  void validate() const;
};

// T x D feature matrix, row-major, with frame timing metadata.
struct FeatureSequence {
  int dim = 0;
  double frame_shift = 0.010;  // seconds between frames
  std::vector<double> data;    // size T * dim

  int num_frames() const {
    return dim == 0 ? 0 : static_cast<int>(data.size() / dim);
  }
  std::span<const double> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<double> frame(int t) {
    return {data.data() + static_cast<std::size_t>(t) * dim,
            static_cast<std::size_t>(dim)};
  }
  double& at(int t, int d) { return data[static_cast<std::size_t>(t) * dim + d]; }
  double at(int t, int d) const { return data[static_cast<std::size_t>(t) * dim + d]; }
};

// Orthogonal rotation fitted on enrollment features. Rows of `rotation` are
// the covariance eigenvectors in descending eigenvalue order; no whitening.
struct PcaTransform {
  int dim = 0;
  std::vector<double> mean;         // D
  std::vector<double> rotation;     // D x D, row-major
  std::vector<double> eigenvalues;  // D, non-increasing
};

// MFCC front end: pre-emphasis, Hamming window, magnitude spectrum (DFT,
// zero-padded to the next power of two), triangular mel filterbank on
// mel(f) = 2595*log10(1 + f/700), floored log energies, orthonormal DCT-II.
// Frame count is 1 + floor((N - win) / hop).
FeatureSequence compute_mfcc(const MonoSignal& signal, const MfccConfig& config);

// Appends delta and acceleration regression coefficients,
// d_t = sum_{w=1..W} w*(c_{t+w} - c_{t-w}) / (2*sum w^2), with edge frames
// replicated beyond the sequence boundaries. Output columns are
// [static | delta | accel].
FeatureSequence append_dynamics(const FeatureSequence& seq, int window);

// Eigendecomposition of the pooled sample covariance (denominator T-1).
// Sign convention: the largest-magnitude entry of each eigenvector is
// positive, so fits are reproducible bit for bit.
PcaTransform fit_pca(const std::vector<FeatureSequence>& sequences);

// frame -> rotation * (frame - mean); dimension unchanged.
FeatureSequence apply_pca(const PcaTransform& transform, const FeatureSequence& seq);

}  // namespace gait

#endif  // GAIT_FEATURES_HPP
