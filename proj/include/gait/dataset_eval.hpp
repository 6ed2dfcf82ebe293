#ifndef GAIT_DATASET_EVAL_HPP
#define GAIT_DATASET_EVAL_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gait/hmm.hpp"
#include "gait/recognizer.hpp"

namespace gait {

enum class Condition { kNormal, kBackpack, kShoeCover };
enum class Role { kEnrollment, kIdentification };

char condition_letter(Condition c);
Condition parse_condition(const std::string& token);

struct ManifestEntry {
  std::string subject_id;
  Condition condition = Condition::kNormal;
  int take = 0;
  Role role = Role::kIdentification;
  std::string path;  // resolved against the manifest location on load
  std::optional<int> step_count;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string split = "test";  // development | test
  std::string base_dir;        // directory the manifest was loaded from

  std::string resolve_path(const ManifestEntry& entry) const;
};

struct RecordingResult {
  ManifestEntry entry;
  std::string predicted;
  bool correct = false;
  int detected_steps = 0;
};

struct ConditionStats {
  int total = 0;
  int correct = 0;
  double accuracy = 0.0;  // correct / total
};

struct EvaluationReport {
  std::map<Condition, ConditionStats> per_condition;
  double average = 0.0;  // arithmetic mean over conditions with recordings
  std::vector<RecordingResult> per_recording;
};

struct ProtocolConfig {
  MfccConfig mfcc;
  HmmConfig hmm;
  bool use_pca = true;
  int jobs = 1;
};

// CSV manifest with header subject_id,condition,take,role,path,step_count.
// Lines starting with '#' are comments; `# split: development` sets the split
// field. Enrollment rows must be condition N and carry a step count;
// (subject, condition, take) must be unique.
Manifest load_manifest(const std::string& path);

// Trains one model per subject from the manifest's enrollment rows: features
// are pooled for the PCA fit (when enabled) before per-subject training.
// When final_lls is given it receives each subject's training data
// log-likelihood under the finished model.
SubjectModelSet enroll_all(const Manifest& manifest, const ProtocolConfig& config,
                           std::map<std::string, double>* final_lls = nullptr);

// Scores every identification row against the model set and aggregates
// per-condition accuracies.
EvaluationReport evaluate_identification(const SubjectModelSet& set,
                                         const Manifest& manifest,
                                         DecodeGrammar grammar, int jobs = 1);

// enroll_all followed by evaluate_identification.
EvaluationReport run_protocol(const Manifest& manifest, const ProtocolConfig& config,
                              DecodeGrammar grammar);

// Recomputes the aggregate fields from per-recording rows.
EvaluationReport aggregate_results(std::vector<RecordingResult> rows);

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 0.5;
};

// Paired one-tailed t-test on per-recording correctness indicators, testing
// whether `b` improves on `a` for the given condition. A zero-variance
// difference vector short-circuits to p = 0.5 / 0.0 / 1.0 by the sign of the
// mean difference.
TTestResult significance_test(const EvaluationReport& a, const EvaluationReport& b,
                              Condition condition);

// Aligned-column text table with one row per report and N/B/S/average columns.
std::string format_report_table(const EvaluationReport& report,
                                const std::string& label = "accuracy [%]");

}  // namespace gait

#endif  // GAIT_DATASET_EVAL_HPP
