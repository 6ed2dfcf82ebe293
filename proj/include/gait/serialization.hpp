#ifndef GAIT_SERIALIZATION_HPP
#define GAIT_SERIALIZATION_HPP

#include <string>

#include "gait/dataset_eval.hpp"
#include "gait/features.hpp"
#include "gait/hmm.hpp"
#include "gait/recognizer.hpp"

namespace gait {

// All documents are versioned JSON ("version": 1). Probabilities live in log
// domain; JSON cannot carry -inf, so impossible transitions serialize as null.

std::string feature_sequence_to_json(const FeatureSequence& seq);
FeatureSequence feature_sequence_from_json(const std::string& text);

std::string pca_to_json(const PcaTransform& transform);
PcaTransform pca_from_json(const std::string& text);

std::string model_to_json(const GaussianHmm& model);
GaussianHmm model_from_json(const std::string& text);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);

// Model set directory: manifest.json (configs, subject list, optional PCA)
// plus one <subject_id>.json per model.
void save_model_set(const SubjectModelSet& set, const std::string& dir);
SubjectModelSet load_model_set(const std::string& dir);

}  // namespace gait

#endif  // GAIT_SERIALIZATION_HPP
