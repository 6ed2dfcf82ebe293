#include "gait/serialization.hpp"

#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gait/errors.hpp"

namespace gait {

namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

json parse(const std::string& text, const char* what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kSchemaError, std::string("malformed JSON for ") + what);
  }
  return doc;
}

void require_version(const json& doc, const char* what) {
  if (!doc.contains("version") || doc["version"] != 1) {
    throw Error(ErrorCode::kSchemaError,
                std::string(what) + " document missing version 1");
  }
}

json matrix_to_json(const std::vector<double>& data, int rows, int cols,
                    bool null_for_neg_inf = false) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) {
      double v = data[static_cast<std::size_t>(r) * cols + c];
      if (null_for_neg_inf && v == kNegInf) {
        row.push_back(nullptr);
      } else {
        row.push_back(v);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> matrix_from_json(const json& doc, int rows, int cols,
                                     const char* what) {
  if (!doc.is_array() || static_cast<int>(doc.size()) != rows) {
    throw Error(ErrorCode::kSchemaError, std::string(what) + ": bad row count");
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = doc[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw Error(ErrorCode::kSchemaError, std::string(what) + ": bad column count");
    }
    for (int c = 0; c < cols; ++c) {
      const json& cell = row[c];
      out[static_cast<std::size_t>(r) * cols + c] =
          cell.is_null() ? kNegInf : cell.get<double>();
    }
  }
  return out;
}

json mfcc_config_to_json(const MfccConfig& config) {
  return json{{"frame_length", config.frame_length},
              {"frame_shift", config.frame_shift},
              {"num_cepstra", config.num_cepstra},
              {"num_mel_filters", config.num_mel_filters},
              {"preemphasis", config.preemphasis},
              {"delta_window", config.delta_window},
              {"log_floor", config.log_floor},
              {"expected_sample_rate", config.expected_sample_rate}};
}

MfccConfig mfcc_config_from_json(const json& doc) {
  MfccConfig config;
  config.frame_length = doc.at("frame_length").get<double>();
  config.frame_shift = doc.at("frame_shift").get<double>();
  config.num_cepstra = doc.at("num_cepstra").get<int>();
  config.num_mel_filters = doc.at("num_mel_filters").get<int>();
  config.preemphasis = doc.at("preemphasis").get<double>();
  config.delta_window = doc.at("delta_window").get<int>();
  config.log_floor = doc.at("log_floor").get<double>();
  config.expected_sample_rate = doc.at("expected_sample_rate").get<int>();
  return config;
}

json hmm_config_to_json(const HmmConfig& config) {
  return json{{"num_states", config.num_states},
              {"training_iterations", config.training_iterations},
              {"variance_floor_factor", config.variance_floor_factor},
              {"min_self_loop", config.min_self_loop},
              {"cyclic", config.cyclic}};
}

HmmConfig hmm_config_from_json(const json& doc) {
  HmmConfig config;
  config.num_states = doc.at("num_states").get<int>();
  config.training_iterations = doc.at("training_iterations").get<int>();
  config.variance_floor_factor = doc.at("variance_floor_factor").get<double>();
  config.min_self_loop = doc.at("min_self_loop").get<double>();
  config.cyclic = doc.at("cyclic").get<bool>();
  return config;
}

json pca_to_json_value(const PcaTransform& transform) {
  return json{{"version", 1},
              {"dim", transform.dim},
              {"mean", transform.mean},
              {"rotation", matrix_to_json(transform.rotation, transform.dim,
                                          transform.dim)},
              {"eigenvalues", transform.eigenvalues}};
}

PcaTransform pca_from_json_value(const json& doc) {
  require_version(doc, "PcaTransform");
  PcaTransform transform;
  transform.dim = doc.at("dim").get<int>();
  transform.mean = doc.at("mean").get<std::vector<double>>();
  transform.eigenvalues = doc.at("eigenvalues").get<std::vector<double>>();
  transform.rotation =
      matrix_from_json(doc.at("rotation"), transform.dim, transform.dim, "rotation");
  if (static_cast<int>(transform.mean.size()) != transform.dim ||
      static_cast<int>(transform.eigenvalues.size()) != transform.dim) {
    throw Error(ErrorCode::kSchemaError, "PcaTransform: inconsistent dimensions");
  }
  return transform;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open '" + path + "'");
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  }
  out << content;
  if (!out.flush()) {
    throw Error(ErrorCode::kIoError, "short write to '" + path + "'");
  }
}

constexpr int kJsonIndent = 1;

}  // namespace

std::string feature_sequence_to_json(const FeatureSequence& seq) {
  json doc{{"version", 1},
           {"dim", seq.dim},
           {"frame_shift", seq.frame_shift},
           {"frames", matrix_to_json(seq.data, seq.num_frames(), seq.dim)}};
  return doc.dump(kJsonIndent);
}

FeatureSequence feature_sequence_from_json(const std::string& text) {
  json doc = parse(text, "FeatureSequence");
  require_version(doc, "FeatureSequence");
  FeatureSequence seq;
  seq.dim = doc.at("dim").get<int>();
  seq.frame_shift = doc.at("frame_shift").get<double>();
  const json& frames = doc.at("frames");
  seq.data = matrix_from_json(frames, static_cast<int>(frames.size()), seq.dim,
                              "frames");
  return seq;
}

std::string pca_to_json(const PcaTransform& transform) {
  return pca_to_json_value(transform).dump(kJsonIndent);
}

PcaTransform pca_from_json(const std::string& text) {
  return pca_from_json_value(parse(text, "PcaTransform"));
}

std::string model_to_json(const GaussianHmm& model) {
  json doc{{"version", 1},
           {"subject_id", model.subject_id},
           {"states", model.num_states},
           {"dim", model.dim},
           {"cyclic", model.cyclic},
           {"log_transitions", matrix_to_json(model.log_trans, model.num_states,
                                              model.num_states,
                                              /*null_for_neg_inf=*/true)},
           {"means", matrix_to_json(model.means, model.num_states, model.dim)},
           {"variances",
            matrix_to_json(model.variances, model.num_states, model.dim)}};
  return doc.dump(kJsonIndent);
}

GaussianHmm model_from_json(const std::string& text) {
  json doc = parse(text, "GaussianHmm");
  require_version(doc, "GaussianHmm");
  GaussianHmm model;
  model.subject_id = doc.at("subject_id").get<std::string>();
  model.num_states = doc.at("states").get<int>();
  model.dim = doc.at("dim").get<int>();
  model.cyclic = doc.at("cyclic").get<bool>();
  model.log_trans = matrix_from_json(doc.at("log_transitions"), model.num_states,
                                     model.num_states, "log_transitions");
  model.means = matrix_from_json(doc.at("means"), model.num_states, model.dim,
                                 "means");
  model.variances = matrix_from_json(doc.at("variances"), model.num_states,
                                     model.dim, "variances");
  return model;
}

std::string report_to_json(const EvaluationReport& report) {
  json conditions = json::object();
  for (const auto& [condition, stats] : report.per_condition) {
    conditions[std::string(1, condition_letter(condition))] =
        json{{"total", stats.total},
             {"correct", stats.correct},
             {"accuracy", stats.accuracy}};
  }
  json rows = json::array();
  for (const auto& row : report.per_recording) {
    json entry{{"subject_id", row.entry.subject_id},
               {"condition", std::string(1, condition_letter(row.entry.condition))},
               {"take", row.entry.take},
               {"path", row.entry.path},
               {"predicted", row.predicted},
               {"correct", row.correct},
               {"detected_steps", row.detected_steps}};
    if (row.entry.step_count.has_value()) {
      entry["step_count"] = *row.entry.step_count;
    }
    rows.push_back(std::move(entry));
  }
  json doc{{"version", 1},
           {"conditions", conditions},
           {"average", report.average},
           {"per_recording", rows}};
  return doc.dump(kJsonIndent);
}

EvaluationReport report_from_json(const std::string& text) {
  json doc = parse(text, "EvaluationReport");
  require_version(doc, "EvaluationReport");
  std::vector<RecordingResult> rows;
  for (const json& entry : doc.at("per_recording")) {
    RecordingResult row;
    row.entry.subject_id = entry.at("subject_id").get<std::string>();
    row.entry.condition = parse_condition(entry.at("condition").get<std::string>());
    row.entry.take = entry.at("take").get<int>();
    row.entry.path = entry.at("path").get<std::string>();
    row.entry.role = Role::kIdentification;
    if (entry.contains("step_count")) {
      row.entry.step_count = entry.at("step_count").get<int>();
    }
    row.predicted = entry.at("predicted").get<std::string>();
    row.correct = entry.at("correct").get<bool>();
    row.detected_steps = entry.at("detected_steps").get<int>();
    rows.push_back(std::move(row));
  }
  return aggregate_results(std::move(rows));
}

void save_model_set(const SubjectModelSet& set, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create model directory '" + dir + "': " + ec.message());
  }
  json subjects = json::array();
  for (const auto& [subject_id, model] : set.models) subjects.push_back(subject_id);
  json manifest{{"version", 1},
                {"subjects", subjects},
                {"feature_config", mfcc_config_to_json(set.feature_config)},
                {"hmm_config", hmm_config_to_json(set.hmm_config)},
                {"pca", set.pca.has_value() ? pca_to_json_value(*set.pca)
                                            : json(nullptr)}};
  write_file((std::filesystem::path(dir) / "manifest.json").string(),
             manifest.dump(kJsonIndent));
  for (const auto& [subject_id, model] : set.models) {
    write_file((std::filesystem::path(dir) / (subject_id + ".json")).string(),
               model_to_json(model));
  }
}

SubjectModelSet load_model_set(const std::string& dir) {
  json manifest = parse(
      read_file((std::filesystem::path(dir) / "manifest.json").string()),
      "model set manifest");
  require_version(manifest, "model set manifest");
  SubjectModelSet set;
  set.feature_config = mfcc_config_from_json(manifest.at("feature_config"));
  set.hmm_config = hmm_config_from_json(manifest.at("hmm_config"));
  if (!manifest.at("pca").is_null()) {
    set.pca = pca_from_json_value(manifest.at("pca"));
  }
  for (const json& subject : manifest.at("subjects")) {
    std::string subject_id = subject.get<std::string>();
    GaussianHmm model = model_from_json(
        read_file((std::filesystem::path(dir) / (subject_id + ".json")).string()));
    if (model.subject_id != subject_id) {
      throw Error(ErrorCode::kSchemaError,
                  "model file for '" + subject_id + "' carries subject_id '" +
                      model.subject_id + "'");
    }
    set.models.emplace(std::move(subject_id), std::move(model));
  }
  if (set.models.empty()) {
    throw Error(ErrorCode::kSchemaError, "model set '" + dir + "' lists no subjects");
  }
  return set;
}

}  // namespace gait
