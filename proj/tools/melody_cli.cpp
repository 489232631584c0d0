#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "melody/audio_io.hpp"
#include "melody/config.hpp"
#include "melody/eval.hpp"
#include "melody/pipeline.hpp"
#include "melody/service.hpp"
#include "melody/synth.hpp"
#include "melody/synthetic.hpp"
#include "melody/voicing.hpp"

namespace fs = std::filesystem;
using namespace melody;

namespace {

constexpr int kUsageError = 1;
constexpr int kProcessingError = 2;

struct AnalyzeArgs {
  std::string wav;
  std::string config;
  std::string out;
  std::string mode;
  std::vector<std::string> overrides;
  bool lean = false;
  bool voicing = false;
};

int run_analyze(const AnalyzeArgs& args) {
  AnalysisConfig config = args.config.empty() ? AnalysisConfig{} : load_config(args.config);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
    try {
      set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw CLI::ValidationError("--set", e.what());
    }
  }
  if (!args.mode.empty()) config.mode = args.mode == "dual" ? TrackingMode::Dual : TrackingMode::Single;
  if (args.voicing) config.voicing.enabled = true;
  config.validate();

  const auto clip = load_wav(args.wav);
  const auto result = analyze(clip, config, AnalyzeOptions{.lean = args.lean, .voicing_model = nullptr});
  if (args.out.empty()) {
    write_contour(std::cout, result.contour);
  } else {
    write_contour(fs::path(args.out), result.contour);
  }
  return 0;
}

// name.wav with a sibling name.f0.tsv.
std::vector<synthetic::Item> load_corpus_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".wav") wavs.push_back(entry.path());
  }
  std::sort(wavs.begin(), wavs.end());
  std::vector<synthetic::Item> items;
  for (const auto& wav : wavs) {
    auto truth = fs::path(wav).replace_extension(".f0.tsv");
    if (!fs::exists(truth)) continue;
    items.push_back({wav.stem().string(), load_wav(wav), read_contour(truth)});
  }
  if (items.empty()) throw std::runtime_error(dir.string() + ": no .wav files with matching .f0.tsv truth");
  return items;
}

int run_train(const std::string& corpus, const std::string& out, std::uint64_t seed, std::size_t components) {
  std::vector<synthetic::Item> items;
  if (corpus == "synthetic") {
    for (std::uint64_t k = 0; k < 4; ++k) items.push_back(synthetic::voicing_scene(seed * 1000 + k));
  } else {
    items = load_corpus_dir(corpus);
  }
  const auto data = labelled_features(items, AnalysisConfig{});
  VoicingTrainingOptions options;
  options.gmm.components = components;
  options.gmm.seed = seed;
  const auto model = train_voicing_model(data, options);
  save_voicing_model(model, out);
  std::size_t vocal = std::count(data.vocal.begin(), data.vocal.end(), true);
  std::cerr << "trained on " << data.features.size() << " frames (" << vocal << " vocal) from " << items.size()
            << " clips -> " << out << "\n";
  return 0;
}

int run_gen_corpus(const std::string& out, std::uint64_t seed) {
  fs::create_directories(out);
  for (const auto& item : synthetic::corpus(seed)) {
    write_wav(item.clip, fs::path(out) / (item.name + ".wav"));
    write_contour(fs::path(out) / (item.name + ".f0.tsv"), item.truth);
  }
  return 0;
}

Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& host, int port, double max_upload_mb, std::size_t max_sessions,
              const std::string& static_dir) {
  ServiceOptions options;
  options.max_upload_bytes = static_cast<std::size_t>(max_upload_mb * 1024 * 1024);
  options.max_sessions = max_sessions;
  options.static_dir = static_dir;
  Service service(options);
  const int bound = service.bind(host, port);
  if (bound < 0) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kProcessingError;
  }
  g_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "listening on http://" << host << ":" << bound << "\n";
  const bool ok = service.run();
  g_service = nullptr;
  return ok ? 0 : kProcessingError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predominant melody extraction workbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all subcommand help");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Extract the melody contour of a WAV file");
  analyze_cmd->add_option("wav", analyze_args.wav, "Input WAV")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--config", analyze_args.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", analyze_args.out, "Output contour TSV (default: stdout)");
  analyze_cmd->add_option("--mode", analyze_args.mode, "Tracking mode")->check(CLI::IsMember({"single", "dual"}));
  analyze_cmd->add_option("--set", analyze_args.overrides, "Override a config key, key=value (repeatable)");
  analyze_cmd->add_flag("--voicing", analyze_args.voicing, "Enable the GMM voicing classifier");
  analyze_cmd->add_flag("--lean", analyze_args.lean, "Skip per-frame diagnostics");

  std::string synth_in, synth_out, synth_mode = "sine";
  int synth_rate = 44100;
  auto* synth_cmd = app.add_subcommand("synth", "Render a contour TSV as audio");
  synth_cmd->add_option("contour", synth_in, "Contour TSV")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "Output WAV")->required();
  synth_cmd->add_option("--mode", synth_mode, "Timbre")->check(CLI::IsMember({"sine", "harmonic"}));
  synth_cmd->add_option("--rate", synth_rate, "Sample rate")->check(CLI::Range(8000, 192000));

  std::string eval_est, eval_ref;
  double tolerance = 50.0;
  auto* eval_cmd = app.add_subcommand("eval", "Score an estimated contour against a reference");
  eval_cmd->add_option("estimate", eval_est, "Estimated contour TSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("reference", eval_ref, "Reference contour TSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tolerance-cents", tolerance, "Pitch tolerance")->check(CLI::PositiveNumber);

  std::string train_corpus, train_out;
  std::uint64_t train_seed = 1;
  std::size_t train_components = 4;
  auto* train_cmd = app.add_subcommand("train-svd", "Train the singing-voice GMM classifier");
  train_cmd->add_option("--corpus", train_corpus, "Directory of name.wav + name.f0.tsv, or 'synthetic'")->required();
  train_cmd->add_option("--out", train_out, "Output model JSON")->required();
  train_cmd->add_option("--seed", train_seed, "Seed for synthetic data and initialisation");
  train_cmd->add_option("--components", train_components, "Mixture components per class")->check(CLI::Range(1, 64));

  std::string corpus_out;
  std::uint64_t corpus_seed = 7;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Write the synthetic test corpus");
  gen_cmd->add_option("--out", corpus_out, "Output directory")->required();
  gen_cmd->add_option("--seed", corpus_seed, "Corpus seed");

  std::string host = "127.0.0.1", static_dir;
  int port = 8775;
  double max_upload_mb = 50.0;
  std::size_t max_sessions = 16;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--max-upload-mb", max_upload_mb, "Upload size limit")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-sessions", max_sessions, "Session store capacity")->check(CLI::Range(1, 1024));
  serve_cmd->add_option("--static", static_dir, "Directory of UI assets served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*analyze_cmd) return run_analyze(analyze_args);
    if (*synth_cmd) {
      const auto contour = read_contour(fs::path(synth_in));
      write_wav(synthesize_contour(contour, synth_rate, synth_mode_from_string(synth_mode)), synth_out);
      return 0;
    }
    if (*eval_cmd) {
      const auto metrics = evaluate(read_contour(fs::path(eval_est)), read_contour(fs::path(eval_ref)), tolerance);
      std::cout << to_json(metrics).dump(2) << "\n";
      return 0;
    }
    if (*train_cmd) return run_train(train_corpus, train_out, train_seed, train_components);
    if (*gen_cmd) return run_gen_corpus(corpus_out, corpus_seed);
    if (*serve_cmd) return run_serve(host, port, max_upload_mb, max_sessions, static_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kProcessingError;
  }
  return kUsageError;
}
