#ifndef GAIT_HMM_HPP
#define GAIT_HMM_HPP

#include <string>
#include <vector>

#include "gait/features.hpp"

namespace gait {

struct HmmConfig {
  int num_states = 15;
  int training_iterations = 6;
  // Emission variances are floored at this factor times the global
  // per-dimension variance of the training data.
  double variance_floor_factor = 1e-2;
  // Allowed transitions that receive zero expected count are floored here so
  // they cannot lock at zero between iterations.
  double min_self_loop = 1e-3;
  bool cyclic = true;

  void validate() const;
};

// Left-right single-Gaussian HMM. Row i of the transition matrix permits the
// self-loop (i,i), the forward step (i,i+1), and, iff cyclic, the wrap edge
// from the last state back to the first. Disallowed entries are -inf in log
// domain.
struct GaussianHmm {
  std::string subject_id;
  int num_states = 0;
  int dim = 0;
  bool cyclic = false;
  std::vector<double> log_trans;  // S x S, row-major
  std::vector<double> means;      // S x D, row-major
  std::vector<double> variances;  // S x D, diagonal covariance

  double log_a(int from, int to) const {
    return log_trans[static_cast<std::size_t>(from) * num_states + to];
  }
  std::span<const double> state_mean(int s) const {
    return {means.data() + static_cast<std::size_t>(s) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> state_variance(int s) const {
    return {variances.data() + static_cast<std::size_t>(s) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// SinglePass: wrap edge disabled, the path starts in the first state and must
// terminate in the last. MultiStep: wrap edge enabled (when the model has
// one), the path may terminate in any state.
enum class DecodeGrammar { kSinglePass, kMultiStep };

struct DecodeResult {
  double log_likelihood = 0.0;       // joint log-prob of best path + observations
  std::vector<int> state_path;       // length T
  int step_count = 0;                // 1 + number of wrap-edge traversals
  std::vector<int> step_boundaries;  // frame index of the first frame after each wrap
};

// Uniform-segmentation initialization: each recording with k steps is cut
// into k equal-length passes (one pass for linear models), each pass into
// num_states segments by the largest-remainder rule, and state statistics are
// pooled over all segments with the same index.
GaussianHmm flat_start(const std::vector<FeatureSequence>& sequences,
                       const std::vector<int>& step_counts, const HmmConfig& config,
                       const std::string& subject_id);

struct ReestimateResult {
  GaussianHmm model;
  double log_likelihood = 0.0;  // total data log-likelihood BEFORE the update
};

// One Baum-Welch step of embedded re-estimation. Each recording with k steps
// is modelled by k tied copies of the state chain concatenated through the
// wrap edge (linear models always use one copy); accumulators are pooled over
// recordings and copies.
ReestimateResult embedded_reestimate(const GaussianHmm& model,
                                     const std::vector<FeatureSequence>& sequences,
                                     const std::vector<int>& step_counts,
                                     const HmmConfig& config);

// Max-product decoding in log domain. Ties are broken toward the
// lower-numbered predecessor state.
DecodeResult viterbi(const GaussianHmm& model, const FeatureSequence& seq,
                     DecodeGrammar grammar);

// Forward (sum-product) log-likelihood under the same topology and
// termination rules; always >= the Viterbi log-likelihood.
double log_likelihood(const GaussianHmm& model, const FeatureSequence& seq,
                      DecodeGrammar grammar);

}  // namespace gait

#endif  // GAIT_HMM_HPP
