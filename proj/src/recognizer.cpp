#include "gait/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gait/errors.hpp"

namespace gait {

FeatureSequence extract_features(const MonoSignal& signal, const MfccConfig& config,
                                 const PcaTransform* pca) {
  FeatureSequence features =
      append_dynamics(compute_mfcc(signal, config), config.delta_window);
  if (pca != nullptr) {
    features = apply_pca(*pca, features);
  }
  return features;
}

GaussianHmm enroll(const std::vector<std::pair<MonoSignal, int>>& recordings,
                   const std::string& subject_id, const MfccConfig& feature_config,
                   const HmmConfig& hmm_config, const PcaTransform* pca) {
  if (recordings.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no enrollment recordings for subject '" + subject_id + "'");
  }
  std::vector<FeatureSequence> sequences;
  std::vector<int> step_counts;
  sequences.reserve(recordings.size());
  step_counts.reserve(recordings.size());
  try {
    for (const auto& [signal, steps] : recordings) {
      sequences.push_back(extract_features(signal, feature_config, pca));
      step_counts.push_back(steps);
    }
    GaussianHmm model = flat_start(sequences, step_counts, hmm_config, subject_id);
    for (int i = 0; i < hmm_config.training_iterations; ++i) {
      model = embedded_reestimate(model, sequences, step_counts, hmm_config).model;
    }
    return model;
  } catch (const Error& e) {
    throw Error(e.code(), "subject '" + subject_id + "': " + e.what());
  }
}

IdentificationResult identify(const SubjectModelSet& set, const MonoSignal& recording,
                              DecodeGrammar grammar) {
  if (set.models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty model set");
  }
  const PcaTransform* pca = set.pca.has_value() ? &*set.pca : nullptr;
  FeatureSequence features = extract_features(recording, set.feature_config, pca);

  IdentificationResult result;
  bool have_winner = false;
  // std::map iterates in ascending id order, so a strictly-greater test keeps
  // the lower id on exact ties.
  for (const auto& [subject_id, model] : set.models) {
    double score = -std::numeric_limits<double>::infinity();
    DecodeResult decode;
    bool valid = true;
    try {
      decode = viterbi(model, features, grammar);
      score = decode.log_likelihood;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoValidPath) throw;
      valid = false;
    }
    result.ranked.emplace_back(subject_id, score);
    if (valid && (!have_winner || score > result.decode.log_likelihood)) {
      result.predicted = subject_id;
      result.decode = std::move(decode);
      have_winner = true;
    }
  }
  if (!have_winner) {
    throw Error(ErrorCode::kAllPathsInvalid,
                "no enrolled model admits a valid path for this recording");
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return result;
}

int detected_steps(const IdentificationResult& result) {
  return result.decode.step_count;
}

}  // namespace gait
