// gaitverify command line: synthesize or ingest gait data, train extractors, extract
// features, run verification protocols.
#include "gaitverify/data.hpp"
#include "gaitverify/eval.hpp"
#include "gaitverify/nn/gradcheck.hpp"
#include "gaitverify/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace gaitverify;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Provenance written next to every artifact as `<artifact>.manifest.json`.
class RunManifest {
 public:
  RunManifest(std::string command_line, const CLI::App& command)
      : command_line_(std::move(command_line)),
        config_digest_(sha256_hex(command.config_to_str(true, false))),
        start_(std::chrono::steady_clock::now()) {}

  void seed(std::uint64_t s) { seed_ = s; }
  void input(const fs::path& p) { inputs_[p.string()] = sha256_file(p); }
  void output(const fs::path& p) { outputs_[p.string()] = sha256_file(p); }

  void write(const fs::path& artifact) const {
    nlohmann::ordered_json j;
    j["command_line"] = command_line_;
    j["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
    j["config_digest"] = config_digest_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["toolkit_version"] = kToolkitVersion;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(artifact.string() + ".manifest.json");
    if (!out) throw Error("cannot write manifest for " + artifact.string());
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_line_;
  std::string config_digest_;
  std::optional<std::uint64_t> seed_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

/// "report.csv" -> "report.w3.csv".
fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out.replace_filename(p.stem().string() + suffix + p.extension().string());
  return out;
}

/// Accepts "3", "1..5" and "1,2,4" (and repeated flags).
std::vector<int> parse_windows(const std::vector<std::string>& specs) {
  std::vector<int> out;
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || v < 1) throw InvalidInput("--window: expected positive integers, got '" + s + "'");
    return v;
  };
  for (const auto& spec : specs) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (const auto dots = item.find(".."); dots != std::string::npos) {
        const int lo = number(item.substr(0, dots));
        const int hi = number(item.substr(dots + 2));
        if (hi < lo) throw InvalidInput("--window: empty range '" + item + "'");
        for (int w = lo; w <= hi; ++w) out.push_back(w);
      } else {
        out.push_back(number(item));
      }
    }
  }
  if (out.empty()) throw InvalidInput("--window: no window given");
  return out;
}

/// Expands `--config FILE` into `--key=value` arguments placed ahead of the command-line
/// flags. Keys that also appear on the command line are dropped, so flags override the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> file;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (!file) return args;
  std::ifstream in(*file);
  if (!in) throw InvalidInput("cannot open config file " + *file);
  auto given = [&](const std::string& key) {
    return std::any_of(kept.begin(), kept.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  std::vector<std::string> from_file;
  std::string line;
  for (long line_no = 1; std::getline(in, line); ++line_no) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(*file + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (!given(key)) from_file.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  // Keep the program name and the subcommand in front.
  const auto split = std::min<std::size_t>(2, kept.size());
  std::vector<std::string> out(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(split));
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), kept.begin() + static_cast<std::ptrdiff_t>(split), kept.end());
  return out;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  SyntheticConfig config;
  fs::path out;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  a.config.recordings_per_subject_per_session = 1;
  app.add_option("--subjects", a.config.num_subjects, "Number of subjects")->capture_default_str();
  app.add_option("--seconds", a.config.recording_seconds, "Seconds per recording")->capture_default_str();
  app.add_option("--recordings", a.config.recordings_per_subject_per_session, "Recordings per subject and session")
      ->capture_default_str();
  app.add_option("--sessions", a.config.sessions, "Sessions (1 or 2)")->capture_default_str();
  app.add_option("--drift", a.config.cross_day_drift, "Session-2 perturbation in [0, 1]")->capture_default_str();
  app.add_option("--seed", a.config.seed, "Random seed")->capture_default_str();
  app.add_option("--prefix", a.config.subject_prefix, "Subject id prefix")->capture_default_str();
  app.add_option("--out", a.out, "Output canonical CSV")->required();
}

void run_synth(const SynthArgs& a, RunManifest& manifest) {
  manifest.seed(a.config.seed);
  const auto recordings = generate_synthetic(a.config);
  write_canonical_csv(recordings, a.out);
  std::set<std::string> subjects;
  std::size_t frames = 0, min_frames = SIZE_MAX, max_frames = 0;
  for (const auto& rec : recordings) {
    subjects.insert(rec.subject_id);
    const auto n = segment_frames(resample_linear(rec)).size();
    frames += n;
    min_frames = std::min(min_frames, n);
    max_frames = std::max(max_frames, n);
  }
  std::printf("wrote %s: %zu subjects, %zu recordings, %zu frames (%zu", a.out.string().c_str(), subjects.size(),
              recordings.size(), frames, min_frames);
  if (max_frames != min_frames) std::printf("..%zu", max_frames);
  std::printf(" per recording)\n");
  manifest.output(a.out);
  manifest.write(a.out);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string mode = "e2e";
  std::string augment = "none";
  fs::path data;
  fs::path out;
  fs::path history;
  nn::TrainConfig train;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--mode", a.mode, "e2e (classifier) or ae (autoencoder)")
      ->check(CLI::IsMember({"e2e", "ae"}))
      ->capture_default_str();
  app.add_option("--data", a.data, "Canonical CSV")->required()->check(CLI::ExistingFile);
  app.add_option("--augment", a.augment, "Training-split augmentation")
      ->check(CLI::IsMember({"none", "rnd", "cshift"}))
      ->capture_default_str();
  app.add_option("--epochs", a.train.epochs)->capture_default_str();
  app.add_option("--batch-size", a.train.batch_size)->capture_default_str();
  app.add_option("--lr", a.train.initial_lr, "Initial learning rate")->capture_default_str();
  app.add_option("--min-lr", a.train.min_lr)->capture_default_str();
  app.add_option("--patience", a.train.plateau_patience, "Plateau patience in epochs")->capture_default_str();
  app.add_option("--val-fraction", a.train.val_fraction)->capture_default_str();
  app.add_option("--seed", a.train.seed)->capture_default_str();
  app.add_option("--out", a.out, "Encoder model container")->required();
  app.add_option("--history", a.history, "Training history CSV (default <out>.history.csv)");
}

void run_train(const TrainArgs& a, RunManifest& manifest, const std::string& config_digest) {
  manifest.seed(a.train.seed);
  manifest.input(a.data);
  ExtractorConfig config;
  config.mode = parse_train_mode(a.mode);
  config.augmentation = parse_augmentation(a.augment);
  config.train = a.train;
  const auto frames = preprocess(load_canonical_csv(a.data));
  std::fprintf(stderr, "%zu frames\n", frames.size());
  const auto result = train_extractor(frames, config, [](const nn::EpochRecord& r) {
    std::fprintf(stderr, "epoch %d train_loss %.6f val_loss %.6f lr %g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
  });
  std::printf("training frames: %zu", result.train_frames);
  if (config.augmentation != AugmentationKind::none) {
    std::printf(" (%zu after %s augmentation)", result.augmented_train_frames,
                std::string(to_string(config.augmentation)).c_str());
  }
  std::printf(", validation frames: %zu\n", result.val_frames);
  std::printf("best epoch %d, val_loss %s\n", result.best_epoch,
              format_real(result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_loss).c_str());

  auto container = encoder_to_container(result.encoder);
  container.metadata["train_mode"] = std::string(to_string(config.mode));
  container.metadata["augmentation"] = std::string(to_string(config.augmentation));
  container.metadata["training_config_digest"] = config_digest;
  save_model(container, a.out);

  const fs::path history = a.history.empty() ? fs::path(a.out.string() + ".history.csv") : a.history;
  std::ofstream h(history);
  if (!h) throw Error("cannot write " + history.string());
  h << "epoch,train_loss,val_loss,lr\n";
  for (const auto& r : result.history) {
    h << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_loss) << ',' << format_real(r.lr)
      << '\n';
  }
  h.close();
  manifest.output(a.out);
  manifest.output(history);
  manifest.write(a.out);
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractArgs {
  fs::path model;
  fs::path data;
  fs::path out;
  bool raw = false;
};

void add_extract(CLI::App& app, ExtractArgs& a) {
  auto* model = app.add_option("--model", a.model, "Encoder model container")->check(CLI::ExistingFile);
  app.add_option("--data", a.data, "Canonical CSV")->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Features CSV")->required();
  app.add_flag("--raw", a.raw, "Emit the 384 raw frame values instead of learned features")->excludes(model);
}

void run_extract(const ExtractArgs& a, RunManifest& manifest) {
  if (!a.raw && a.model.empty()) throw InvalidInput("extract: --model is required unless --raw is given");
  manifest.input(a.data);
  const auto frames = preprocess(load_canonical_csv(a.data));
  std::vector<FeatureVector> features;
  if (a.raw) {
    features = raw_features(frames);
  } else {
    manifest.input(a.model);
    features = extract_features(encoder_from_container(load_model(a.model)), frames);
  }
  export_features_csv(features, a.out);
  std::printf("wrote %s: %zu vectors of dimension %td\n", a.out.string().c_str(), features.size(),
              features.empty() ? Index{0} : features.front().values.size());
  manifest.output(a.out);
  manifest.write(a.out);
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  fs::path features;
  std::string protocol = "sd1";
  std::vector<std::string> windows{"1"};
  double nu = 0.1;
  std::string gamma = "auto";
  bool standardize = false;
  double train_fraction = 2.0 / 3.0;
  std::string kind;
  std::string augment = "none";
  std::string session1 = "1";
  std::string session2 = "2";
  fs::path out;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  app.add_option("--features", a.features, "Features CSV")->required()->check(CLI::ExistingFile);
  app.add_option("--protocol", a.protocol, "sd1, sd2 (same-day) or cd (cross-day)")
      ->check(CLI::IsMember({"sd1", "sd2", "cd"}))
      ->capture_default_str();
  app.add_option("--window", a.windows, "Aggregation windows, e.g. 1, 1..5 or 1,3")->capture_default_str();
  app.add_option("--nu", a.nu, "One-class SVM nu in (0, 1]")->capture_default_str();
  app.add_option("--gamma", a.gamma, "RBF gamma: auto or a positive real")->capture_default_str();
  app.add_flag("--standardize", a.standardize, "Standardize features with enrolment statistics");
  app.add_option("--train-fraction", a.train_fraction, "Same-day enrolment fraction")->capture_default_str();
  app.add_option("--kind", a.kind, "Feature label for the summary (default: raw for 384-d, else ee)")
      ->check(CLI::IsMember({"raw", "ae", "ee"}));
  app.add_option("--augment", a.augment, "Augmentation label for the summary")
      ->check(CLI::IsMember({"none", "rnd", "cshift"}))
      ->capture_default_str();
  app.add_option("--session1", a.session1, "Session id of the first day")->capture_default_str();
  app.add_option("--session2", a.session2, "Session id of the second day")->capture_default_str();
  app.add_option("--out", a.out, "Per-user report CSV (suffixed .wN per window when sweeping)")->required();
}

void run_evaluate(const EvaluateArgs& a, RunManifest& manifest) {
  const auto windows = parse_windows(a.windows);
  OcsvmParams params;
  params.solver.nu = a.nu;
  params.standardize = a.standardize;
  if (a.gamma != "auto") {
    params.solver.gamma = parse_real(a.gamma);
    if (!(*params.solver.gamma > 0.0)) throw InvalidInput("--gamma must be 'auto' or positive");
  }
  manifest.input(a.features);
  const auto features = load_features_csv(a.features);
  if (features.empty()) throw InvalidInput("evaluate: no feature vectors in " + a.features.string());
  ExtractorKind kind = ExtractorKind::ee;
  if (!a.kind.empty()) {
    kind = parse_extractor(a.kind);
  } else if (features.front().values.size() == 3 * kFrameLength) {
    kind = ExtractorKind::raw;
  }

  std::vector<EvalReport> reports;
  for (int w : windows) {
    ProtocolSpec spec;
    spec.kind = parse_protocol(a.protocol);
    spec.aggregation_window = w;
    spec.train_fraction = a.train_fraction;
    spec.session1 = a.session1;
    spec.session2 = a.session2;
    auto report = run_protocol(features, kind, spec, params, parse_augmentation(a.augment));
    for (const auto& warning : report.warnings) std::fprintf(stderr, "warning: %s\n", warning.c_str());
    const fs::path csv = windows.size() == 1 ? a.out : with_suffix(a.out, ".w" + std::to_string(w));
    std::ofstream out(csv);
    if (!out) throw Error("cannot write " + csv.string());
    write_report_csv(report, out);
    out.close();
    manifest.output(csv);
    reports.push_back(std::move(report));
  }
  const auto table = format_summary_table(reports);
  std::fputs(table.c_str(), stdout);
  const fs::path summary = with_suffix(a.out, ".summary").replace_extension(".txt");
  std::ofstream(summary) << table;
  manifest.output(summary);
  manifest.write(a.out);
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  Index entries = 160;
  std::string corrupt;
};

void add_gradcheck(CLI::App& app, GradcheckArgs& a) {
  app.add_option("--seed", a.seed)->capture_default_str();
  app.add_option("--entries", a.entries, "Entries sampled per parameter tensor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  // Negative control: perturbs the analytic gradient of one tensor.
  app.add_option("--corrupt-layer", a.corrupt)->group("");
}

template <typename Model>
bool report_check(const char* label, Model& model, const Tensor<double>& x, std::span<const int> labels,
                  const nn::GradCheckOptions& options, double threshold) {
  const auto report = nn::gradient_check(model, x, labels, options);
  bool ok = true;
  for (const auto& t : report.tensors) {
    const bool tensor_ok = t.max_rel_error < threshold && t.skipped < t.checked;
    ok = ok && tensor_ok;
    std::printf("%-4s %-32s checked %3td/%-7td skipped %2td  max_rel_err %.3e%s\n", label, t.name.c_str(), t.checked,
                t.total, t.skipped, t.max_rel_error, tensor_ok ? "" : "  FAIL");
  }
  std::printf("%s max relative error %.3e\n", label, report.max_rel_error);
  return ok;
}

int run_gradcheck(const GradcheckArgs& a) {
  constexpr double kThreshold = 1e-4;
  // Fully convolutional models accept any length; short inputs keep the check fast.
  Rng rng(a.seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Tensor<double> x({4, 24, 3});
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const std::vector<int> labels{0, 1, 2, 1};

  nn::GradCheckOptions options;
  options.seed = a.seed;
  options.max_entries_per_tensor = a.entries;
  options.corrupt_tensor = a.corrupt;

  auto fcn = build_fcn<double>(3, a.seed);
  auto ae = build_autoencoder<double>(a.seed + 1);
  const bool fcn_ok = report_check("fcn", fcn, x, labels, options, kThreshold);
  const bool ae_ok = report_check("ae", ae, x, {}, options, kThreshold);
  const bool ok = fcn_ok && ae_ok;
  std::printf("gradcheck %s (threshold %.0e)\n", ok ? "PASS" : "FAIL", kThreshold);
  return ok ? 0 : kExitRuntime;
}

// ---------------------------------------------------------------------------
// cyclestats
// ---------------------------------------------------------------------------

void run_cyclestats(const fs::path& annotations) {
  const auto stats = cycle_stats(load_cycle_annotations(annotations));
  std::printf("cycles %zu\nmean %.2f\nmedian %.2f\ncoverage_at_128 %.4f\nhistogram (length count)\n",
              stats.lengths.size(), stats.mean, stats.median, stats.coverage_at(kFrameLength));
  for (const auto& [length, count] : stats.histogram) std::printf("%td %td\n", length, count);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerometer gait verification toolkit", "gaitverify"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  SynthArgs synth;
  TrainArgs train;
  ExtractArgs extract;
  EvaluateArgs evaluate;
  GradcheckArgs gradcheck;
  fs::path annotations;

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic gait dataset as canonical CSV");
  add_synth(*synth_cmd, synth);
  auto* train_cmd = app.add_subcommand("train", "Train a feature extractor");
  add_train(*train_cmd, train);
  auto* extract_cmd = app.add_subcommand("extract", "Extract per-frame features");
  add_extract(*extract_cmd, extract);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run a verification protocol");
  add_evaluate(*evaluate_cmd, evaluate);
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
  add_gradcheck(*gradcheck_cmd, gradcheck);
  auto* cyclestats_cmd = app.add_subcommand("cyclestats", "Gait cycle length statistics");
  cyclestats_cmd->add_option("--annotations", annotations, "Cycle annotation CSV")
      ->required()
      ->check(CLI::ExistingFile);
  std::string config_file;  // expanded before parsing; declared for --help
  for (auto* cmd : app.get_subcommands({})) {
    cmd->add_option("--config", config_file, "File of 'key = value' lines; flags override it");
  }

  try {
    auto args = expand_config(std::vector<std::string>(argv, argv + argc));
    // CLI11 takes the arguments without argv[0] and in reverse order.
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  const std::string command_line = join_args(argc, argv);
  try {
    if (synth_cmd->parsed()) {
      RunManifest manifest(command_line, *synth_cmd);
      run_synth(synth, manifest);
    } else if (train_cmd->parsed()) {
      RunManifest manifest(command_line, *train_cmd);
      run_train(train, manifest, sha256_hex(train_cmd->config_to_str(true, false)));
    } else if (extract_cmd->parsed()) {
      RunManifest manifest(command_line, *extract_cmd);
      run_extract(extract, manifest);
    } else if (evaluate_cmd->parsed()) {
      RunManifest manifest(command_line, *evaluate_cmd);
      run_evaluate(evaluate, manifest);
    } else if (gradcheck_cmd->parsed()) {
      return run_gradcheck(gradcheck);
    } else if (cyclestats_cmd->parsed()) {
      run_cyclestats(annotations);
    }
  } catch (const InvalidInput& e) {  // includes ValidationError
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
