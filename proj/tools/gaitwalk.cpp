// gaitwalk: batch front end for the acoustic gait identification pipeline.
// Subcommands: synth, enroll, evaluate, identify, features.
// Exit codes: 0 success, 2 usage/validation, 3 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "gait/audio_io.hpp"
#include "gait/dataset_eval.hpp"
#include "gait/errors.hpp"
#include "gait/recognizer.hpp"
#include "gait/serialization.hpp"
#include "gait/synth_corpus.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Pipeline settings shared by the subcommands; defaults match the paper-pinned
// configuration (15 states, 6 iterations, 39-dim features, PCA on, multi-step
// grammar, cyclic topology).
struct Settings {
  int sample_rate = 16000;
  double frame_length = 0.025;
  double frame_shift = 0.010;
  int num_cepstra = 13;
  int num_mel_filters = 26;
  double preemphasis = 0.97;
  int delta_window = 2;
  double log_floor = 1e-10;
  int num_states = 15;
  int training_iterations = 6;
  double variance_floor_factor = 1e-2;
  double min_self_loop = 1e-3;
  std::string topology = "cyclic";  // cyclic | linear
  std::string grammar = "multi";    // multi | single
  bool pca = true;
  int jobs = 1;

  gait::MfccConfig mfcc() const {
    gait::MfccConfig config;
    config.expected_sample_rate = sample_rate;
    config.frame_length = frame_length;
    config.frame_shift = frame_shift;
    config.num_cepstra = num_cepstra;
    config.num_mel_filters = num_mel_filters;
    config.preemphasis = preemphasis;
    config.delta_window = delta_window;
    config.log_floor = log_floor;
    return config;
  }
  gait::HmmConfig hmm() const {
    gait::HmmConfig config;
    config.num_states = num_states;
    config.training_iterations = training_iterations;
    config.variance_floor_factor = variance_floor_factor;
    config.min_self_loop = min_self_loop;
    config.cyclic = topology == "cyclic";
    return config;
  }
  gait::ProtocolConfig protocol() const {
    gait::ProtocolConfig config;
    config.mfcc = mfcc();
    config.hmm = hmm();
    config.use_pca = pca;
    config.jobs = jobs;
    return config;
  }
  gait::DecodeGrammar decode_grammar() const {
    return grammar == "single" ? gait::DecodeGrammar::kSinglePass
                               : gait::DecodeGrammar::kMultiStep;
  }
};

// Versioned key-value config document; unknown keys are rejected so typos
// cannot silently fall back to defaults.
void apply_config_file(const std::string& path, Settings& settings,
                       const CLI::App& flags) {
  std::ifstream in(path);
  if (!in) {
    throw gait::Error(gait::ErrorCode::kMissingFile,
                      "cannot open config '" + path + "'");
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw gait::Error(gait::ErrorCode::kSchemaError,
                      "config '" + path + "' is not a JSON object");
  }
  if (!doc.contains("version") || doc["version"] != 1) {
    throw gait::Error(gait::ErrorCode::kSchemaError,
                      "config '" + path + "' must carry \"version\": 1");
  }
  auto flag_given = [&flags](const std::string& name) {
    auto* option = flags.get_option_no_throw(name);
    return option != nullptr && option->count() > 0;
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "version") continue;
    try {
      if (key == "sample_rate") {
        if (!flag_given("--sample-rate")) settings.sample_rate = value.get<int>();
      } else if (key == "frame_length") {
        if (!flag_given("--frame-length")) settings.frame_length = value.get<double>();
      } else if (key == "frame_shift") {
        if (!flag_given("--frame-shift")) settings.frame_shift = value.get<double>();
      } else if (key == "num_cepstra") {
        if (!flag_given("--cepstra")) settings.num_cepstra = value.get<int>();
      } else if (key == "num_mel_filters") {
        if (!flag_given("--mel-filters")) settings.num_mel_filters = value.get<int>();
      } else if (key == "preemphasis") {
        if (!flag_given("--preemphasis")) settings.preemphasis = value.get<double>();
      } else if (key == "delta_window") {
        if (!flag_given("--delta-window")) settings.delta_window = value.get<int>();
      } else if (key == "log_floor") {
        settings.log_floor = value.get<double>();
      } else if (key == "num_states") {
        if (!flag_given("--states")) settings.num_states = value.get<int>();
      } else if (key == "training_iterations") {
        if (!flag_given("--iterations")) {
          settings.training_iterations = value.get<int>();
        }
      } else if (key == "variance_floor_factor") {
        settings.variance_floor_factor = value.get<double>();
      } else if (key == "min_self_loop") {
        settings.min_self_loop = value.get<double>();
      } else if (key == "topology") {
        if (!flag_given("--topology")) settings.topology = value.get<std::string>();
      } else if (key == "grammar") {
        if (!flag_given("--grammar")) settings.grammar = value.get<std::string>();
      } else if (key == "pca") {
        if (!flag_given("--no-pca")) settings.pca = value.get<bool>();
      } else if (key == "jobs") {
        if (!flag_given("--jobs")) settings.jobs = value.get<int>();
      } else {
        throw gait::Error(gait::ErrorCode::kSchemaError,
                          "config '" + path + "': unknown key '" + key + "'");
      }
    } catch (const json::exception&) {
      throw gait::Error(gait::ErrorCode::kSchemaError,
                        "config '" + path + "': bad value for '" + key + "'");
    }
  }
  if (settings.topology != "cyclic" && settings.topology != "linear") {
    throw gait::Error(gait::ErrorCode::kSchemaError,
                      "config: topology must be cyclic or linear");
  }
  if (settings.grammar != "multi" && settings.grammar != "single") {
    throw gait::Error(gait::ErrorCode::kSchemaError,
                      "config: grammar must be multi or single");
  }
}

void add_feature_flags(CLI::App* cmd, Settings& settings) {
  cmd->add_option("--sample-rate", settings.sample_rate, "Expected sample rate [Hz]")
      ->capture_default_str();
  cmd->add_option("--frame-length", settings.frame_length, "Analysis window [s]")
      ->capture_default_str();
  cmd->add_option("--frame-shift", settings.frame_shift, "Frame shift [s]")
      ->capture_default_str();
  cmd->add_option("--cepstra", settings.num_cepstra, "Cepstral coefficients (0..C-1)")
      ->capture_default_str();
  cmd->add_option("--mel-filters", settings.num_mel_filters, "Mel filterbank size")
      ->capture_default_str();
  cmd->add_option("--preemphasis", settings.preemphasis, "Pre-emphasis coefficient")
      ->capture_default_str();
  cmd->add_option("--delta-window", settings.delta_window,
                  "Delta regression window [frames]")
      ->capture_default_str();
}

void add_model_flags(CLI::App* cmd, Settings& settings) {
  cmd->add_option("--states", settings.num_states, "HMM states per model")
      ->capture_default_str();
  cmd->add_option("--iterations", settings.training_iterations,
                  "Embedded re-estimation rounds")
      ->capture_default_str();
  cmd->add_option("--topology", settings.topology, "Model topology: cyclic|linear")
      ->check(CLI::IsMember({"cyclic", "linear"}))
      ->capture_default_str();
  cmd->add_flag("--no-pca{false}", settings.pca, "Disable the PCA feature rotation");
}

void add_grammar_flag(CLI::App* cmd, Settings& settings) {
  cmd->add_option("--grammar", settings.grammar, "Decoding grammar: multi|single")
      ->check(CLI::IsMember({"multi", "single"}))
      ->capture_default_str();
}

void add_jobs_flag(CLI::App* cmd, Settings& settings) {
  cmd->add_option("--jobs", settings.jobs, "Worker threads (output is identical)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw gait::Error(gait::ErrorCode::kIoError, "cannot write '" + path + "'");
  }
  out << content;
  if (!out.flush()) {
    throw gait::Error(gait::ErrorCode::kIoError, "short write to '" + path + "'");
  }
}

int run_synth(gait::SynthConfig config, const Settings& settings,
              const std::string& out_dir) {
  config.sample_rate = settings.sample_rate;
  gait::Manifest manifest = gait::generate_corpus(config, out_dir);
  int enrollment = 0;
  for (const auto& entry : manifest.entries) {
    if (entry.role == gait::Role::kEnrollment) ++enrollment;
  }
  std::cout << "wrote " << manifest.entries.size() << " recordings ("
            << enrollment << " enrollment, "
            << manifest.entries.size() - enrollment << " identification) for "
            << config.num_subjects << " subjects\n";
  std::cout << "manifest: "
            << (std::filesystem::path(out_dir) / "manifest.csv").string() << "\n";
  return kExitOk;
}

int run_enroll(const Settings& settings, const std::string& manifest_path,
               const std::string& out_dir) {
  gait::Manifest manifest = gait::load_manifest(manifest_path);
  std::map<std::string, double> final_lls;
  gait::SubjectModelSet set =
      gait::enroll_all(manifest, settings.protocol(), &final_lls);
  gait::save_model_set(set, out_dir);
  for (const auto& [subject, ll] : final_lls) {
    std::cout << subject << "  log-likelihood " << ll << "\n";
  }
  std::cout << "enrolled " << set.models.size() << " subjects into " << out_dir
            << "\n";
  return kExitOk;
}

int run_evaluate(const Settings& settings, const std::string& manifest_path,
                 const std::string& models_dir, const std::string& models_out,
                 const std::string& report_path, bool training_flags_given) {
  gait::Manifest manifest = gait::load_manifest(manifest_path);
  gait::EvaluationReport report;
  if (!models_dir.empty()) {
    if (training_flags_given) {
      throw gait::Error(gait::ErrorCode::kInvalidArgument,
                        "training flags (--states/--iterations/--topology/"
                        "--no-pca/...) conflict with --models; the stored "
                        "model set fixes them");
    }
    gait::SubjectModelSet set = gait::load_model_set(models_dir);
    report = gait::evaluate_identification(set, manifest, settings.decode_grammar(),
                                           settings.jobs);
  } else {
    gait::SubjectModelSet set = gait::enroll_all(manifest, settings.protocol());
    if (!models_out.empty()) gait::save_model_set(set, models_out);
    report = gait::evaluate_identification(set, manifest, settings.decode_grammar(),
                                           settings.jobs);
  }
  std::cout << gait::format_report_table(report);
  if (!report_path.empty()) {
    write_text_file(report_path, gait::report_to_json(report));
    std::cout << "report: " << report_path << "\n";
  }
  return kExitOk;
}

int run_identify(const Settings& settings, const std::string& models_dir,
                 const std::string& wav_path, int top) {
  gait::SubjectModelSet set = gait::load_model_set(models_dir);
  gait::MonoSignal signal = gait::downmix(gait::load_wav(wav_path));
  gait::IdentificationResult result =
      gait::identify(set, signal, settings.decode_grammar());

  int shown = 0;
  for (const auto& [subject, score] : result.ranked) {
    if (top > 0 && shown >= top) break;
    std::cout << (shown + 1) << ". " << subject << "  " << score << "\n";
    ++shown;
  }
  std::cout << "predicted: " << result.predicted << "\n";
  std::cout << "detected steps: " << result.decode.step_count << "\n";
  if (!result.decode.step_boundaries.empty()) {
    std::cout << "step boundaries [s]:";
    for (int frame : result.decode.step_boundaries) {
      std::cout << " " << frame * set.feature_config.frame_shift;
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int run_features(const Settings& settings, const std::string& wav_path,
                 const std::string& out_path, bool raw,
                 const std::string& pca_from) {
  gait::MonoSignal signal = gait::downmix(gait::load_wav(wav_path));
  gait::FeatureSequence features = gait::compute_mfcc(signal, settings.mfcc());
  if (!raw) {
    features = gait::append_dynamics(features, settings.delta_window);
    if (!pca_from.empty()) {
      gait::SubjectModelSet set = gait::load_model_set(pca_from);
      if (set.pca.has_value()) features = gait::apply_pca(*set.pca, features);
    }
  }
  std::string doc = gait::feature_sequence_to_json(features);
  if (out_path.empty()) {
    std::cout << doc << "\n";
  } else {
    write_text_file(out_path, doc);
    std::cout << "wrote " << features.num_frames() << " frames (dim "
              << features.dim << ") to " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic gait identification pipeline"};
  app.require_subcommand(1);

  Settings settings;
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file (flags override its values)")
      ->envname("GAITWALK_CONFIG");

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  gait::SynthConfig synth_config;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--subjects", synth_config.num_subjects, "Number of subjects")
      ->capture_default_str();
  synth->add_option("--seed", synth_config.seed, "Generator seed")
      ->capture_default_str();
  synth->add_option("--takes-n", synth_config.takes_n, "N-condition takes")
      ->capture_default_str();
  synth->add_option("--takes-b", synth_config.takes_b, "B-condition takes")
      ->capture_default_str();
  synth->add_option("--takes-s", synth_config.takes_s, "S-condition takes")
      ->capture_default_str();
  synth->add_option("--enroll-takes", synth_config.enroll_takes,
                    "Leading N takes used for enrollment")
      ->capture_default_str();
  synth->add_option("--steps", synth_config.steps_per_recording,
                    "Steps per recording")
      ->capture_default_str();
  synth->add_option("--snr-db", synth_config.snr_db, "Signal-to-noise ratio [dB]")
      ->capture_default_str();
  synth->add_option("--jitter", synth_config.period_jitter,
                    "Per-step period jitter fraction")
      ->capture_default_str();
  synth->add_option("--period-min", synth_config.period_min,
                    "Minimum base step period [s]")
      ->capture_default_str();
  synth->add_option("--period-max", synth_config.period_max,
                    "Maximum base step period [s]")
      ->capture_default_str();
  synth->add_option("--sample-rate", settings.sample_rate, "Sample rate [Hz]")
      ->capture_default_str();

  // --- enroll --------------------------------------------------------------
  auto* enroll = app.add_subcommand("enroll", "Train one model per subject");
  std::string enroll_manifest, enroll_out;
  enroll->add_option("--manifest", enroll_manifest, "Corpus manifest CSV")
      ->required();
  enroll->add_option("--out", enroll_out, "Model set output directory")->required();
  add_feature_flags(enroll, settings);
  add_model_flags(enroll, settings);
  add_jobs_flag(enroll, settings);

  // --- evaluate ------------------------------------------------------------
  auto* evaluate = app.add_subcommand(
      "evaluate", "Run the identification protocol and report accuracies");
  std::string eval_manifest, eval_models, eval_models_out, eval_report;
  evaluate->add_option("--manifest", eval_manifest, "Corpus manifest CSV")
      ->required();
  evaluate->add_option("--models", eval_models,
                       "Use a pre-trained model set directory (skips training)");
  evaluate->add_option("--models-out", eval_models_out,
                       "Save the trained model set here");
  evaluate->add_option("--report", eval_report, "Write the JSON report here");
  add_feature_flags(evaluate, settings);
  add_model_flags(evaluate, settings);
  add_grammar_flag(evaluate, settings);
  add_jobs_flag(evaluate, settings);

  // --- identify ------------------------------------------------------------
  auto* identify = app.add_subcommand("identify", "Identify a single recording");
  std::string identify_models, identify_wav;
  int identify_top = 0;
  identify->add_option("--models", identify_models, "Model set directory")
      ->required();
  identify->add_option("--wav", identify_wav, "Recording to identify")->required();
  identify->add_option("--top", identify_top, "Show only the best K subjects");
  add_grammar_flag(identify, settings);

  // --- features ------------------------------------------------------------
  auto* features = app.add_subcommand("features", "Dump frame features as JSON");
  std::string features_wav, features_out, features_pca_from;
  bool features_raw = false;
  features->add_option("--wav", features_wav, "Input recording")->required();
  features->add_option("--out", features_out, "Output JSON path (default stdout)");
  features->add_flag("--raw", features_raw, "Static cepstra only, no dynamics");
  features->add_option("--pca-from", features_pca_from,
                       "Apply the PCA stored in this model set directory");
  add_feature_flags(features, settings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_path.empty()) apply_config_file(config_path, settings, app);

    if (synth->parsed()) {
      return run_synth(synth_config, settings, synth_out);
    }
    if (enroll->parsed()) {
      return run_enroll(settings, enroll_manifest, enroll_out);
    }
    if (evaluate->parsed()) {
      bool training_flags_given = false;
      for (const char* name :
           {"--states", "--iterations", "--topology", "--no-pca", "--sample-rate",
            "--frame-length", "--frame-shift", "--cepstra", "--mel-filters",
            "--preemphasis", "--delta-window"}) {
        auto* option = evaluate->get_option_no_throw(name);
        if (option != nullptr && option->count() > 0) training_flags_given = true;
      }
      return run_evaluate(settings, eval_manifest, eval_models, eval_models_out,
                          eval_report, training_flags_given);
    }
    if (identify->parsed()) {
      return run_identify(settings, identify_models, identify_wav, identify_top);
    }
    if (features->parsed()) {
      return run_features(settings, features_wav, features_out, features_raw,
                          features_pca_from);
    }
    std::cerr << "no subcommand given\n";
    return kExitUsage;
  } catch (const gait::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == gait::ErrorCode::kNumericalUnderflow ? kExitRuntime
                                                           : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitRuntime;
  }
}
