#ifndef GAIT_RECOGNIZER_HPP
#define GAIT_RECOGNIZER_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gait/audio_io.hpp"
#include "gait/features.hpp"
#include "gait/hmm.hpp"

namespace gait {

// One trained HMM per enrolled subject plus the shared front-end settings.
struct SubjectModelSet {
  std::map<std::string, GaussianHmm> models;
  std::optional<PcaTransform> pca;
  MfccConfig feature_config;
  HmmConfig hmm_config;
};

struct IdentificationResult {
  std::vector<std::pair<std::string, double>> ranked;  // descending log-likelihood
  std::string predicted;
  DecodeResult decode;  // winning model's decode
};

// Shared front end: MFCC statics, dynamics, optional PCA rotation.
FeatureSequence extract_features(const MonoSignal& signal, const MfccConfig& config,
                                 const PcaTransform* pca);

// Flat start followed by the configured number of embedded re-estimation
// rounds over the subject's recordings.
GaussianHmm enroll(const std::vector<std::pair<MonoSignal, int>>& recordings,
                   const std::string& subject_id, const MfccConfig& feature_config,
                   const HmmConfig& hmm_config, const PcaTransform* pca);

// Scores the recording against every model under the grammar. Subjects whose
// decode admits no valid path rank below all valid ones with -inf score; ties
// break toward the ascending subject id.
IdentificationResult identify(const SubjectModelSet& set, const MonoSignal& recording,
                              DecodeGrammar grammar);

int detected_steps(const IdentificationResult& result);

}  // namespace gait

#endif  // GAIT_RECOGNIZER_HPP
