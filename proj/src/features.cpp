#include "gait/features.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "gait/errors.hpp"
#include "fft_internal.hpp"

namespace gait {

namespace {

using internal::fft_radix2;
using internal::next_power_of_two;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

// Triangular filter weights per FFT bin, triangles formed in the mel domain.
std::vector<std::vector<double>> mel_filterbank(int num_filters, int nfft,
                                                int sample_rate) {
  const int num_bins = nfft / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> points(num_filters + 2);
  for (int i = 0; i < num_filters + 2; ++i) {
    points[i] = mel_max * i / (num_filters + 1);
  }
  std::vector<std::vector<double>> weights(num_filters,
                                           std::vector<double>(num_bins, 0.0));
  for (int k = 0; k < num_bins; ++k) {
    double mel_k = hz_to_mel(static_cast<double>(k) * sample_rate / nfft);
    for (int m = 0; m < num_filters; ++m) {
      double lo = points[m], center = points[m + 1], hi = points[m + 2];
      if (mel_k >= lo && mel_k <= center && center > lo) {
        weights[m][k] = (mel_k - lo) / (center - lo);
      } else if (mel_k > center && mel_k <= hi && hi > center) {
        weights[m][k] = (hi - mel_k) / (hi - center);
      }
    }
  }
  return weights;
}

}  // namespace

int MfccConfig::frame_length_samples() const {
  return static_cast<int>(std::lround(frame_length * expected_sample_rate));
}

int MfccConfig::frame_shift_samples() const {
  return static_cast<int>(std::lround(frame_shift * expected_sample_rate));
}

void MfccConfig::validate() const {
  if (frame_shift > frame_length || frame_shift <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "frame_shift must be in (0, frame_length]");
  }
  if (num_cepstra < 1 || num_cepstra > num_mel_filters) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= num_cepstra <= num_mel_filters");
  }
  if (delta_window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "delta_window must be >= 1");
  }
  if (preemphasis < 0.0 || preemphasis >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "preemphasis must be in [0, 1)");
  }
  if (log_floor <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "log_floor must be positive");
  }
  if (expected_sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "expected_sample_rate must be positive");
  }
}

FeatureSequence compute_mfcc(const MonoSignal& signal, const MfccConfig& config) {
  config.validate();
  if (signal.sample_rate != config.expected_sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                "signal is " + std::to_string(signal.sample_rate) + " Hz, expected " +
                    std::to_string(config.expected_sample_rate));
  }
  const int win = config.frame_length_samples();
  const int hop = config.frame_shift_samples();
  const auto n = static_cast<long>(signal.samples.size());
  if (n < win) {
    throw Error(ErrorCode::kSignalTooShort,
                std::to_string(n) + " samples, need at least " + std::to_string(win));
  }
  const int num_frames = 1 + static_cast<int>((n - win) / hop);

  // Pre-emphasis over the whole signal; the first sample is scaled by (1 - a).
  std::vector<double> emphasized(signal.samples.size());
  emphasized[0] = signal.samples[0] * (1.0 - config.preemphasis);
  for (std::size_t i = 1; i < signal.samples.size(); ++i) {
    emphasized[i] = signal.samples[i] - config.preemphasis * signal.samples[i - 1];
  }

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) {
    window[i] = win > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (win - 1))
                        : 1.0;
  }

  const int nfft = next_power_of_two(win);
  const int num_bins = nfft / 2 + 1;
  const auto filters = mel_filterbank(config.num_mel_filters, nfft,
                                      config.expected_sample_rate);

  const int m = config.num_mel_filters;
  std::vector<double> dct(static_cast<std::size_t>(config.num_cepstra) * m);
  for (int i = 0; i < config.num_cepstra; ++i) {
    double alpha = i == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    for (int j = 0; j < m; ++j) {
      dct[static_cast<std::size_t>(i) * m + j] =
          alpha * std::cos(std::numbers::pi * i * (j + 0.5) / m);
    }
  }

  FeatureSequence out;
  out.dim = config.num_cepstra;
  out.frame_shift = config.frame_shift;
  out.data.resize(static_cast<std::size_t>(num_frames) * config.num_cepstra);

  std::vector<std::complex<double>> buffer(nfft);
  std::vector<double> magnitudes(num_bins);
  std::vector<double> log_energies(m);
  for (int t = 0; t < num_frames; ++t) {
    const double* frame = emphasized.data() + static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) buffer[i] = frame[i] * window[i];
    for (int i = win; i < nfft; ++i) buffer[i] = 0.0;
    fft_radix2(buffer);
    for (int k = 0; k < num_bins; ++k) magnitudes[k] = std::abs(buffer[k]);
    for (int f = 0; f < m; ++f) {
      double energy = 0.0;
      for (int k = 0; k < num_bins; ++k) energy += filters[f][k] * magnitudes[k];
      log_energies[f] = std::log(std::max(energy, config.log_floor));
    }
    for (int i = 0; i < config.num_cepstra; ++i) {
      double c = 0.0;
      for (int j = 0; j < m; ++j) {
        c += dct[static_cast<std::size_t>(i) * m + j] * log_energies[j];
      }
      out.at(t, i) = c;
    }
  }
  return out;
}

FeatureSequence append_dynamics(const FeatureSequence& seq, int window) {
  if (window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "delta window must be >= 1");
  }
  const int t_count = seq.num_frames();
  const int d = seq.dim;
  double denom = 0.0;
  for (int w = 1; w <= window; ++w) denom += static_cast<double>(w) * w;
  denom *= 2.0;

  auto clamp_frame = [t_count](int t) { return std::clamp(t, 0, t_count - 1); };
  auto regress = [&](auto&& value, int t, int col) {
    double acc = 0.0;
    for (int w = 1; w <= window; ++w) {
      acc += w * (value(clamp_frame(t + w), col) - value(clamp_frame(t - w), col));
    }
    return acc / denom;
  };

  FeatureSequence out;
  out.dim = 3 * d;
  out.frame_shift = seq.frame_shift;
  out.data.resize(static_cast<std::size_t>(t_count) * out.dim);

  auto statics = [&seq](int t, int col) { return seq.at(t, col); };
  for (int t = 0; t < t_count; ++t) {
    for (int col = 0; col < d; ++col) {
      out.at(t, col) = seq.at(t, col);
      out.at(t, d + col) = regress(statics, t, col);
    }
  }
  auto deltas = [&out, d](int t, int col) { return out.at(t, d + col); };
  for (int t = 0; t < t_count; ++t) {
    for (int col = 0; col < d; ++col) {
      out.at(t, 2 * d + col) = regress(deltas, t, col);
    }
  }
  return out;
}

PcaTransform fit_pca(const std::vector<FeatureSequence>& sequences) {
  if (sequences.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no sequences to fit PCA on");
  }
  const int d = sequences[0].dim;
  std::size_t total = 0;
  for (const auto& seq : sequences) {
    if (seq.dim != d) {
      throw Error(ErrorCode::kDimensionMismatch, "sequences differ in dimension");
    }
    total += static_cast<std::size_t>(seq.num_frames());
  }
  if (total < static_cast<std::size_t>(d) + 1) {
    throw Error(ErrorCode::kDegenerateCovariance,
                std::to_string(total) + " pooled frames for dimension " +
                    std::to_string(d));
  }

  Eigen::MatrixXd pooled(total, d);
  std::size_t row = 0;
  for (const auto& seq : sequences) {
    for (int t = 0; t < seq.num_frames(); ++t, ++row) {
      for (int j = 0; j < d; ++j) pooled(row, j) = seq.at(t, j);
    }
  }
  Eigen::RowVectorXd mean = pooled.colwise().mean();
  Eigen::MatrixXd centered = pooled.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(total - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateCovariance, "eigendecomposition failed");
  }

  PcaTransform out;
  out.dim = d;
  out.mean.assign(mean.data(), mean.data() + d);
  out.rotation.resize(static_cast<std::size_t>(d) * d);
  out.eigenvalues.resize(d);
  // The solver returns ascending eigenvalues; store them descending.
  for (int r = 0; r < d; ++r) {
    int src = d - 1 - r;
    out.eigenvalues[r] = solver.eigenvalues()(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    int peak = 0;
    for (int j = 1; j < d; ++j) {
      if (std::abs(v(j)) > std::abs(v(peak))) peak = j;
    }
    if (v(peak) < 0.0) v = -v;
    for (int j = 0; j < d; ++j) {
      out.rotation[static_cast<std::size_t>(r) * d + j] = v(j);
    }
  }
  return out;
}

FeatureSequence apply_pca(const PcaTransform& transform, const FeatureSequence& seq) {
  if (seq.dim != transform.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sequence dim " + std::to_string(seq.dim) + " vs transform dim " +
                    std::to_string(transform.dim));
  }
  const int d = transform.dim;
  FeatureSequence out;
  out.dim = d;
  out.frame_shift = seq.frame_shift;
  out.data.resize(seq.data.size());
  std::vector<double> centered(d);
  for (int t = 0; t < seq.num_frames(); ++t) {
    for (int j = 0; j < d; ++j) centered[j] = seq.at(t, j) - transform.mean[j];
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      const double* rot_row = transform.rotation.data() + static_cast<std::size_t>(r) * d;
      for (int j = 0; j < d; ++j) acc += rot_row[j] * centered[j];
      out.at(t, r) = acc;
    }
  }
  return out;
}

}  // namespace gait
