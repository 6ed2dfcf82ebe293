#include "gait/dataset_eval.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "gait/audio_io.hpp"
#include "gait/errors.hpp"
#include "gait/parallel.hpp"

namespace gait {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

int parse_positive_int(const std::string& token, const std::string& field, int line) {
  try {
    std::size_t used = 0;
    int value = std::stoi(token, &used);
    if (used != token.size() || value < 1) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kSchemaError,
                "line " + std::to_string(line) + ": field '" + field +
                    "' must be a positive integer, got '" + token + "'");
  }
}

constexpr const char* kHeader = "subject_id,condition,take,role,path,step_count";

}  // namespace

char condition_letter(Condition c) {
  switch (c) {
    case Condition::kNormal: return 'N';
    case Condition::kBackpack: return 'B';
    case Condition::kShoeCover: return 'S';
  }
  return '?';
}

Condition parse_condition(const std::string& token) {
  if (token == "N") return Condition::kNormal;
  if (token == "B") return Condition::kBackpack;
  if (token == "S") return Condition::kShoeCover;
  throw Error(ErrorCode::kSchemaError, "unknown condition '" + token + "'");
}

std::string Manifest::resolve_path(const ManifestEntry& entry) const {
  std::filesystem::path p(entry.path);
  if (p.is_absolute() || base_dir.empty()) return entry.path;
  return (std::filesystem::path(base_dir) / p).string();
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open manifest '" + path + "'");
  }
  Manifest manifest;
  manifest.base_dir = std::filesystem::path(path).parent_path().string();

  std::string line;
  int line_number = 0;
  bool saw_header = false;
  std::set<std::tuple<std::string, char, int>> seen;
  while (std::getline(in, line)) {
    ++line_number;
    std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      auto colon = text.find("split:");
      if (colon != std::string::npos) {
        std::string split = trim(text.substr(colon + 6));
        if (split != "development" && split != "test") {
          throw Error(ErrorCode::kSchemaError,
                      "line " + std::to_string(line_number) +
                          ": split must be development or test, got '" + split + "'");
        }
        manifest.split = split;
      }
      continue;
    }
    if (!saw_header) {
      if (text != kHeader) {
        throw Error(ErrorCode::kSchemaError,
                    "line " + std::to_string(line_number) + ": expected header '" +
                        kHeader + "'");
      }
      saw_header = true;
      continue;
    }
    auto fields = split_csv_line(text);
    if (fields.size() != 6) {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    ManifestEntry entry;
    entry.subject_id = fields[0];
    if (entry.subject_id.empty()) {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": empty subject_id");
    }
    try {
      entry.condition = parse_condition(fields[1]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": " + e.what());
    }
    entry.take = parse_positive_int(fields[2], "take", line_number);
    if (fields[3] == "enrollment") {
      entry.role = Role::kEnrollment;
    } else if (fields[3] == "identification") {
      entry.role = Role::kIdentification;
    } else {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": role must be " +
                      "enrollment or identification, got '" + fields[3] + "'");
    }
    entry.path = fields[4];
    if (entry.path.empty()) {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": empty path");
    }
    if (!fields[5].empty()) {
      entry.step_count = parse_positive_int(fields[5], "step_count", line_number);
    }
    if (entry.role == Role::kEnrollment) {
      if (entry.condition != Condition::kNormal) {
        throw Error(ErrorCode::kSchemaError,
                    "line " + std::to_string(line_number) +
                        ": enrollment rows must be condition N");
      }
      if (!entry.step_count.has_value()) {
        throw Error(ErrorCode::kMissingStepCount,
                    "line " + std::to_string(line_number) +
                        ": enrollment row lacks step_count");
      }
    }
    auto key = std::make_tuple(entry.subject_id, condition_letter(entry.condition),
                               entry.take);
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kSchemaError,
                  "line " + std::to_string(line_number) + ": duplicate (subject," +
                      "condition,take) = (" + entry.subject_id + "," +
                      condition_letter(entry.condition) + "," +
                      std::to_string(entry.take) + ")");
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!saw_header) {
    throw Error(ErrorCode::kSchemaError, "manifest '" + path + "' has no header row");
  }
  return manifest;
}

SubjectModelSet enroll_all(const Manifest& manifest, const ProtocolConfig& config,
                           std::map<std::string, double>* final_lls) {
  // Enrollment rows grouped per subject, keeping manifest order within groups.
  std::map<std::string, std::vector<const ManifestEntry*>> per_subject;
  for (const auto& entry : manifest.entries) {
    if (entry.role == Role::kEnrollment) {
      per_subject[entry.subject_id].push_back(&entry);
    }
  }
  if (per_subject.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest has no enrollment rows");
  }

  struct EnrollItem {
    const ManifestEntry* entry;
    FeatureSequence features;  // MFCC + dynamics, before PCA
  };
  std::vector<EnrollItem> items;
  for (const auto& [subject, entries] : per_subject) {
    for (const auto* entry : entries) items.push_back({entry, {}});
  }
  parallel_for(items.size(), config.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = *items[i].entry;
    try {
      MonoSignal signal = downmix(load_wav(manifest.resolve_path(entry)));
      items[i].features = extract_features(signal, config.mfcc, nullptr);
    } catch (const Error& e) {
      throw Error(e.code(), "enrollment entry '" + entry.path + "': " + e.what());
    }
  });

  SubjectModelSet set;
  set.feature_config = config.mfcc;
  set.hmm_config = config.hmm;
  if (config.use_pca) {
    std::vector<FeatureSequence> pooled;
    pooled.reserve(items.size());
    for (const auto& item : items) pooled.push_back(item.features);
    set.pca = fit_pca(pooled);
  }

  std::vector<std::string> subjects;
  for (const auto& [subject, entries] : per_subject) subjects.push_back(subject);
  std::vector<GaussianHmm> trained(subjects.size());
  std::vector<double> trained_lls(subjects.size(), 0.0);
  parallel_for(subjects.size(), config.jobs, [&](std::size_t i) {
    std::vector<FeatureSequence> sequences;
    std::vector<int> step_counts;
    for (const auto& item : items) {
      if (item.entry->subject_id != subjects[i]) continue;
      sequences.push_back(set.pca.has_value() ? apply_pca(*set.pca, item.features)
                                              : item.features);
      step_counts.push_back(item.entry->step_count.value());
    }
    try {
      GaussianHmm model =
          flat_start(sequences, step_counts, config.hmm, subjects[i]);
      for (int iter = 0; iter < config.hmm.training_iterations; ++iter) {
        model = embedded_reestimate(model, sequences, step_counts, config.hmm).model;
      }
      if (final_lls != nullptr) {
        // One extra accumulation pass scores the finished model.
        trained_lls[i] =
            embedded_reestimate(model, sequences, step_counts, config.hmm)
                .log_likelihood;
      }
      trained[i] = std::move(model);
    } catch (const Error& e) {
      throw Error(e.code(), "subject '" + subjects[i] + "': " + e.what());
    }
  });
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    set.models.emplace(subjects[i], std::move(trained[i]));
    if (final_lls != nullptr) (*final_lls)[subjects[i]] = trained_lls[i];
  }
  return set;
}

EvaluationReport evaluate_identification(const SubjectModelSet& set,
                                         const Manifest& manifest,
                                         DecodeGrammar grammar, int jobs) {
  std::vector<const ManifestEntry*> rows;
  for (const auto& entry : manifest.entries) {
    if (entry.role == Role::kIdentification) rows.push_back(&entry);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest has no identification rows");
  }
  for (const auto* entry : rows) {
    if (set.models.find(entry->subject_id) == set.models.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "identification subject '" + entry->subject_id +
                      "' has no enrolled model (closed-set protocol)");
    }
  }

  std::vector<RecordingResult> results(rows.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& entry = *rows[i];
    try {
      MonoSignal signal = downmix(load_wav(manifest.resolve_path(entry)));
      IdentificationResult id = identify(set, signal, grammar);
      results[i].entry = entry;
      results[i].predicted = id.predicted;
      results[i].correct = id.predicted == entry.subject_id;
      results[i].detected_steps = detected_steps(id);
    } catch (const Error& e) {
      throw Error(e.code(), "identification entry '" + entry.path + "': " + e.what());
    }
  });
  return aggregate_results(std::move(results));
}

EvaluationReport run_protocol(const Manifest& manifest, const ProtocolConfig& config,
                              DecodeGrammar grammar) {
  SubjectModelSet set = enroll_all(manifest, config);
  return evaluate_identification(set, manifest, grammar, config.jobs);
}

EvaluationReport aggregate_results(std::vector<RecordingResult> rows) {
  EvaluationReport report;
  report.per_recording = std::move(rows);
  for (Condition c :
       {Condition::kNormal, Condition::kBackpack, Condition::kShoeCover}) {
    report.per_condition[c] = ConditionStats{};
  }
  for (const auto& row : report.per_recording) {
    auto& stats = report.per_condition[row.entry.condition];
    stats.total += 1;
    if (row.correct) stats.correct += 1;
  }
  double sum = 0.0;
  int conditions_present = 0;
  for (auto& [condition, stats] : report.per_condition) {
    stats.accuracy = stats.total > 0
                         ? static_cast<double>(stats.correct) / stats.total
                         : 0.0;
    if (stats.total > 0) {
      sum += stats.accuracy;
      conditions_present += 1;
    }
  }
  report.average = conditions_present > 0 ? sum / conditions_present : 0.0;
  return report;
}

TTestResult significance_test(const EvaluationReport& a, const EvaluationReport& b,
                              Condition condition) {
  using Key = std::tuple<std::string, int>;
  auto collect = [condition](const EvaluationReport& report) {
    std::map<Key, bool> outcomes;
    for (const auto& row : report.per_recording) {
      if (row.entry.condition != condition) continue;
      outcomes[{row.entry.subject_id, row.entry.take}] = row.correct;
    }
    return outcomes;
  };
  auto in_a = collect(a);
  auto in_b = collect(b);
  if (in_a.size() != in_b.size()) {
    throw Error(ErrorCode::kMismatchedRecordingSets,
                "reports cover " + std::to_string(in_a.size()) + " vs " +
                    std::to_string(in_b.size()) + " recordings for condition " +
                    condition_letter(condition));
  }
  std::vector<double> diffs;
  diffs.reserve(in_a.size());
  for (const auto& [key, correct_a] : in_a) {
    auto it = in_b.find(key);
    if (it == in_b.end()) {
      throw Error(ErrorCode::kMismatchedRecordingSets,
                  "recording (" + std::get<0>(key) + ", take " +
                      std::to_string(std::get<1>(key)) + ") missing from second report");
    }
    diffs.push_back((it->second ? 1.0 : 0.0) - (correct_a ? 1.0 : 0.0));
  }
  const std::size_t n = diffs.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "paired t-test needs at least 2 recordings, got " + std::to_string(n));
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  double variance = ss / static_cast<double>(n - 1);

  TTestResult result;
  result.degrees_of_freedom = static_cast<int>(n) - 1;
  if (variance == 0.0) {
    result.t_statistic = mean == 0.0 ? 0.0
                         : std::copysign(std::numeric_limits<double>::infinity(), mean);
    result.p_value = mean == 0.0 ? 0.5 : (mean > 0.0 ? 0.0 : 1.0);
    return result;
  }
  result.t_statistic = mean / std::sqrt(variance / static_cast<double>(n));
  boost::math::students_t_distribution<double> dist(result.degrees_of_freedom);
  result.p_value = 1.0 - boost::math::cdf(dist, result.t_statistic);
  return result;
}

std::string format_report_table(const EvaluationReport& report,
                                const std::string& label) {
  std::ostringstream out;
  auto pct = [](double fraction) {
    std::ostringstream cell;
    cell.setf(std::ios::fixed);
    cell.precision(1);
    cell << fraction * 100.0;
    return cell.str();
  };
  auto pad = [](const std::string& s, int width) {
    return s.size() >= static_cast<std::size_t>(width)
               ? s
               : std::string(width - s.size(), ' ') + s;
  };
  const int label_width = std::max<int>(14, static_cast<int>(label.size()) + 2);
  out << std::string(label_width, ' ') << pad("N", 9) << pad("B", 9) << pad("S", 9)
      << pad("average", 10) << "\n";
  std::string row = label;
  row.resize(label_width, ' ');
  out << row
      << pad(pct(report.per_condition.at(Condition::kNormal).accuracy), 9)
      << pad(pct(report.per_condition.at(Condition::kBackpack).accuracy), 9)
      << pad(pct(report.per_condition.at(Condition::kShoeCover).accuracy), 9)
      << pad(pct(report.average), 10) << "\n";
  return out.str();
}

}  // namespace gait
