// ncae: command-line driver for data generation, training, streaming detection,
// Monte Carlo sweeps and gradient checks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ncae/ncae.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// key=value lines; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("--config: " + path + ":" + std::to_string(lineno) + ": expected key=value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

bool flag_given(const std::vector<std::string>& args, const std::string& name) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == name || a.rfind(name + "=", 0) == 0;
  });
}

// Precedence is flags > config file > built-in defaults: config entries are
// appended as --key=value only when the flag is absent from the command line.
// Keys that are not options of the subcommand (e.g. manifest metadata) are ignored.
std::vector<std::string> merge_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = const_cast<CLI::App&>(app).get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  for (const auto& [key, value] : read_config_file(config_path)) {
    const std::string flag = "--" + key;
    if (key == "config" || value.empty() || sub->get_option_no_throw(flag) == nullptr) continue;
    if (!flag_given(args, flag)) args.push_back(flag + "=" + value);
  }
  return args;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// Resolved value of every option of a subcommand, with defaults materialized.
std::vector<std::pair<std::string, std::string>> resolved_options(const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || opt->get_lnames().empty()) continue;
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      value = join(opt->results(), ",");
    } else {
      value = opt->get_default_str();
      if (value.size() >= 2 && value.front() == '[' && value.back() == ']')
        value = value.substr(1, value.size() - 2);
    }
    out.emplace_back(name, value);
  }
  return out;
}

void write_manifest(const std::string& path, const CLI::App& sub, std::uint64_t master_seed) {
  std::ofstream out(path);
  if (!out) throw ncae::IoError("cannot open " + path + " for writing");
  out << "# run manifest; usable as --config to reproduce this run\n";
  out << "command=" << sub.get_name() << '\n';
  out << "tool_version=" << NCAE_VERSION << '\n';
  out << "master_seed=" << master_seed << '\n';
  for (const auto& [k, v] : resolved_options(sub)) out << k << '=' << v << '\n';
  if (!out) throw ncae::IoError("write failed: " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ncae::IoError("cannot create directory " + dir + ": " + ec.message());
}

ncae::AudioClip load_canonical(const std::string& path) {
  auto clip = ncae::read_wav_file(path);
  if (clip.sample_rate != ncae::kCanonicalSampleRate)
    clip = ncae::resample_linear(clip, ncae::kCanonicalSampleRate);
  return clip;
}

struct MfccFlags {
  ncae::MfccConfig cfg;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--n-fft", cfg.n_fft, "FFT size (power of two)")->capture_default_str();
    cmd->add_option("--n-mels", cfg.n_mels, "Mel filters")->capture_default_str();
    cmd->add_option("--n-coeffs", cfg.n_coeffs, "Cepstral coefficients kept")->capture_default_str();
    cmd->add_option("--fmin", cfg.fmin, "Lowest filter edge (Hz)")->capture_default_str();
    cmd->add_option("--fmax", cfg.fmax, "Highest filter edge (Hz)")->capture_default_str();
    cmd->add_option("--frame-len", cfg.frame_len, "Frame length (samples)")->capture_default_str();
    cmd->add_option("--hop", cfg.hop, "Frame hop (samples)")->capture_default_str();
  }

  void check() const {
    try {
      cfg.validate(ncae::kCanonicalSampleRate);
    } catch (const ncae::InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
};

// ---------------------------------------------------------------------------

struct GenDataCmd {
  ncae::SynthConfig synth;
  double minutes = 2.0;
  std::string out;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("gen-data", "Write synthetic dry.wav / wet.wav road-noise clips");
    app->add_option("--seed", synth.seed, "Master seed")->capture_default_str();
    app->add_option("--minutes", minutes, "Duration per condition (minutes)")->capture_default_str();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--hiss-gain", synth.wet_hiss_gain, "Wet hiss RMS relative to dry mix")
        ->capture_default_str();
    app->add_option("--tilt", synth.wet_tilt_db_per_octave, "Wet hiss tilt (dB/octave)")
        ->capture_default_str();
    app->add_option("--engine-f0", synth.engine_f0, "Engine fundamental (Hz)")->capture_default_str();
    app->add_option("--harmonics", synth.harmonics, "Engine harmonics")->capture_default_str();
    app->add_option("--bursts", synth.spray_bursts_per_second, "Wet spray bursts per second")
        ->capture_default_str();
    app->add_option("--config", "key=value file; command-line flags take precedence");
  }

  int run() {
    if (!(minutes > 0.0)) throw UsageError("--minutes must be positive");
    synth.duration_seconds = minutes * 60.0;
    try {
      synth.validate();
    } catch (const ncae::InvalidArgument& e) {
      throw UsageError(e.what());
    }
    ensure_dir(out);
    for (auto cond : {ncae::RoadCondition::dry, ncae::RoadCondition::wet}) {
      const auto clip = ncae::gen_road_noise(cond, synth);
      const auto path = (fs::path(out) / (std::string(ncae::condition_name(cond)) + ".wav")).string();
      ncae::write_wav_file(path, clip);
      std::cout << "wrote " << path << " (" << clip.samples.size() << " samples)\n";
    }
    write_manifest((fs::path(out) / "manifest").string(), *app, synth.seed);
    return 0;
  }
};

struct TrainCmd {
  std::string model = "ncae";
  std::size_t kernel = 3;
  std::size_t hidden = 64;
  ncae::TrainConfig train;
  double train_fraction = 0.75;
  std::string data;
  std::string input;
  std::string out;
  MfccFlags mfcc;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("train", "Train a model on normal (dry) audio and calibrate its threshold");
    app->add_option("--model", model, "Model family")
        ->check(CLI::IsMember({"ncae", "baseline"}))
        ->capture_default_str();
    app->add_option("--kernel", kernel, "NCAE kernel size (odd)")->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden width (channels / units)")->capture_default_str();
    app->add_option("--lr", train.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch", train.batch_size, "Minibatch size")->capture_default_str();
    app->add_option("--seed", train.seed, "Master seed")->capture_default_str();
    app->add_option("--t-win", train.t_win, "Window length (frames)")->capture_default_str();
    app->add_option("--stride", train.stride, "Training window stride (frames)")->capture_default_str();
    app->add_option("--train-fraction", train_fraction,
                    "Leading fraction of the clip used for training")
        ->capture_default_str();
    app->add_option("--data", data, "Directory holding dry.wav");
    app->add_option("--input", input, "Training WAV file (overrides --data)");
    app->add_option("--out", out, "Output directory")->required();
    mfcc.add_to(app);
    app->add_option("--config", "key=value file; command-line flags take precedence");
  }

  int run() {
    if (kernel % 2 == 0) throw UsageError("--kernel must be odd, got " + std::to_string(kernel));
    if (!(train.learning_rate > 0.0)) throw UsageError("--lr must be positive");
    if (train.epochs < 1) throw UsageError("--epochs must be >= 1");
    if (train.batch_size < 1) throw UsageError("--batch must be >= 1");
    if (train.t_win < 1 || train.stride < 1) throw UsageError("--t-win and --stride must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
      throw UsageError("--train-fraction must lie in (0, 1]");
    if (input.empty() && data.empty()) throw UsageError("one of --input or --data is required");
    mfcc.check();
    const ncae::ModelSpec spec =
        model == "ncae" ? ncae::ModelSpec(ncae::NcaeSpec{kernel, hidden, mfcc.cfg.n_coeffs})
                        : ncae::ModelSpec(ncae::BaselineSpec{hidden, mfcc.cfg.n_coeffs});
    try {
      std::visit([](const auto& s) { s.validate(); }, spec);
    } catch (const ncae::InvalidArgument& e) {
      throw UsageError(std::string("--hidden: ") + e.what());
    }

    const std::string path = input.empty() ? (fs::path(data) / "dry.wav").string() : input;
    auto clip = load_canonical(path);
    clip.samples.resize(static_cast<std::size_t>(
        std::floor(static_cast<double>(clip.samples.size()) * train_fraction)));
    const auto windows =
        ncae::window_sequences(ncae::extract_mfcc(clip, mfcc.cfg), train.t_win, train.stride);
    std::cout << "training " << model << " on " << windows.size() << " windows of " << train.t_win
              << "x" << mfcc.cfg.n_coeffs << '\n';

    ensure_dir(out);
    const std::uint64_t master = train.seed;
    ncae::TrainConfig tc = train;
    tc.seed = ncae::derive_seed(master, 1);
    ncae::TrainResult result{ncae::build_model(spec, master), {}};
    try {
      result = ncae::train(std::move(result.model), windows, tc);
    } catch (const ncae::TrainingDiverged& e) {
      ncae::save_model(e.last_good(), (fs::path(out) / "model.last_good.ckpt").string());
      throw;
    }
    const auto scores = ncae::score_windows(result.model, windows);
    const auto calib = ncae::calibrate_threshold(scores);

    ncae::save_model(result.model, (fs::path(out) / "model.ckpt").string());
    ncae::save_detector_settings((fs::path(out) / "calibration.txt").string(),
                                 {calib, mfcc.cfg, train.t_win});
    ncae::write_loss_history_csv((fs::path(out) / "loss_history.csv").string(), result.loss_history);
    write_manifest((fs::path(out) / "manifest").string(), *app, master);
    std::printf("loss %.6g -> %.6g; mu=%.6g sigma=%.6g theta=%.6g\n", result.loss_history.front(),
                result.loss_history.back(), calib.mu, calib.sigma, calib.theta);
    return 0;
  }
};

struct DetectCmd {
  std::string model_dir;
  std::string input;
  std::string out;
  std::size_t stride = 1;
  double start_seconds = 0.0;
  double duration_seconds = 0.0;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("detect", "Stream a WAV file through a trained model");
    app->add_option("--model-dir", model_dir, "Directory written by `train`")->required();
    app->add_option("--input", input, "WAV file to analyze")->required();
    app->add_option("--out", out, "Detection CSV path")->required();
    app->add_option("--stride", stride, "Emit a decision every N frames")->capture_default_str();
    app->add_option("--start-seconds", start_seconds, "Skip this much audio first")->capture_default_str();
    app->add_option("--duration-seconds", duration_seconds, "Analyze at most this much (0 = all)")
        ->capture_default_str();
    app->add_option("--config", "key=value file; command-line flags take precedence");
  }

  int run() {
    if (stride < 1) throw UsageError("--stride must be >= 1");
    if (start_seconds < 0.0 || duration_seconds < 0.0)
      throw UsageError("--start-seconds and --duration-seconds must be >= 0");
    const auto model = ncae::load_model((fs::path(model_dir) / "model.ckpt").string());
    const auto settings = ncae::load_detector_settings((fs::path(model_dir) / "calibration.txt").string());
    if (model.input_channels() != settings.mfcc.n_coeffs)
      throw ncae::Error("incompatible checkpoint: model expects " +
                        std::to_string(model.input_channels()) + " coefficients, calibration has " +
                        std::to_string(settings.mfcc.n_coeffs));

    auto clip = load_canonical(input);
    const auto rate = static_cast<double>(clip.sample_rate);
    const auto first = std::min(clip.samples.size(), static_cast<std::size_t>(start_seconds * rate));
    auto last = clip.samples.size();
    if (duration_seconds > 0.0)
      last = std::min(last, first + static_cast<std::size_t>(duration_seconds * rate));
    clip.samples = std::vector<double>(clip.samples.begin() + static_cast<std::ptrdiff_t>(first),
                                       clip.samples.begin() + static_cast<std::ptrdiff_t>(last));

    ncae::ClipFrameSource source(clip, settings.mfcc);
    const auto records = ncae::detect_stream(model, settings.calibration, source, settings.t_win, stride);
    ncae::write_detections_csv(out, records, settings.calibration.theta);
    write_manifest(out + ".manifest", *app, 0);

    std::size_t flagged = 0;
    double latency = 0.0;
    for (const auto& r : records) {
      flagged += r.anomalous ? 1 : 0;
      latency += r.latency_seconds;
    }
    if (records.empty()) {
      std::cout << "no decisions (input shorter than one " << settings.t_win << "-frame window)\n";
    } else {
      std::printf("%zu decisions, anomalous fraction %.4f, mean latency %.3g s\n", records.size(),
                  static_cast<double>(flagged) / static_cast<double>(records.size()),
                  latency / static_cast<double>(records.size()));
    }
    return 0;
  }
};

struct SweepCmd {
  std::string data;
  std::uint64_t seed = 0;
  double minutes = 2.0;
  std::vector<std::string> models{"ncae", "baseline"};
  ncae::SweepOptions opt;
  double train_fraction = 0.75;
  std::string out;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("sweep", "Monte Carlo AUROC/timing sweep over kernel size and learning rate");
    app->add_option("--data", data, "Directory with dry.wav and wet.wav (default: synthesize)");
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--minutes", minutes, "Synthetic minutes per condition when --data is absent")
        ->capture_default_str();
    app->add_option("--models", models, "Model families")
        ->delimiter(',')
        ->check(CLI::IsMember({"ncae", "baseline"}))
        ->capture_default_str();
    app->add_option("--trials", opt.grid.trials, "Trials per grid cell")->capture_default_str();
    app->add_option("--kernels", opt.grid.kernel_sizes, "NCAE kernel sizes")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--lrs", opt.grid.learning_rates, "Learning rates")->delimiter(',')->capture_default_str();
    app->add_option("--hidden", opt.hidden_width, "Hidden width")->capture_default_str();
    app->add_option("--epochs", opt.train.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch", opt.train.batch_size, "Minibatch size")->capture_default_str();
    app->add_option("--t-win", opt.train.t_win, "Window length (frames)")->capture_default_str();
    app->add_option("--stride", opt.train.stride, "Window stride (frames)")->capture_default_str();
    app->add_option("--train-fraction", train_fraction, "Dry fraction used for training")
        ->capture_default_str();
    app->add_option("--threads", opt.threads, "Worker threads")->capture_default_str();
    app->add_option("--timing-reps", opt.timing_repetitions, "Timing repetitions per window")
        ->capture_default_str();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--config", "key=value file; command-line flags take precedence");
  }

  int run() {
    if (opt.grid.trials < 1) throw UsageError("--trials must be >= 1");
    if (opt.grid.kernel_sizes.empty() || opt.grid.learning_rates.empty())
      throw UsageError("--kernels and --lrs must be nonempty");
    for (auto k : opt.grid.kernel_sizes)
      if (k % 2 == 0) throw UsageError("--kernels: kernel sizes must be odd, got " + std::to_string(k));
    for (double lr : opt.grid.learning_rates)
      if (!(lr > 0.0)) throw UsageError("--lrs: learning rates must be positive");
    if (opt.threads < 1 || opt.timing_repetitions < 1)
      throw UsageError("--threads and --timing-reps must be >= 1");
    if (!(minutes > 0.0)) throw UsageError("--minutes must be positive");
    if (opt.hidden_width < 13) throw UsageError("--hidden must be >= 13 (input width)");

    opt.master_seed = seed;
    ncae::DatasetOptions dopt;
    dopt.train_fraction = train_fraction;
    dopt.t_win = opt.train.t_win;
    dopt.stride = opt.train.stride;
    ncae::DatasetBundle bundle;
    if (data.empty()) {
      ncae::SynthConfig sc;
      sc.seed = seed;
      sc.duration_seconds = minutes * 60.0;
      bundle = ncae::make_dataset(sc, dopt);
    } else {
      bundle = ncae::make_dataset_from_clips(load_canonical((fs::path(data) / "dry.wav").string()),
                                             load_canonical((fs::path(data) / "wet.wav").string()), dopt);
    }
    std::cout << "dataset: " << bundle.train_normal.size() << " train, " << bundle.test_normal.size()
              << " test-normal, " << bundle.test_abnormal.size() << " test-abnormal windows\n";

    ensure_dir(out);
    std::vector<ncae::SweepSummary> summaries;
    for (const auto& name : models) {
      const auto family = name == "ncae" ? ncae::ModelFamily::ncae : ncae::ModelFamily::baseline;
      const auto surface = ncae::monte_carlo_sweep(family, opt, bundle);
      ncae::export_surface_csv(surface, (fs::path(out) / (name + "_surface.csv")).string());
      summaries.push_back(ncae::summarize(surface));
      std::cout << name << ": " << surface.points.size() << " points\n";
    }
    std::ostringstream text;
    ncae::write_summary_text(text, summaries);
    std::cout << '\n' << text.str();
    {
      std::ofstream f(fs::path(out) / "summary.txt");
      f << text.str();
      std::ofstream c(fs::path(out) / "summary.csv");
      ncae::write_summary_csv(c, summaries);
      if (!f || !c) throw ncae::IoError("cannot write summary files in " + out);
    }
    if (summaries.size() == 2 && summaries[0].best && summaries[1].best) {
      const auto& a = summaries[0].cells[*summaries[0].best];
      const auto& b = summaries[1].cells[*summaries[1].best];
      if (a.infer_seconds.mean > 0.0)
        std::printf("inference time ratio %s/%s (best cells): %.3f\n", models[1].c_str(), models[0].c_str(),
                    b.infer_seconds.mean / a.infer_seconds.mean);
    }
    write_manifest((fs::path(out) / "manifest").string(), *app, seed);
    return 0;
  }
};

struct GradCheckCmd {
  std::vector<std::size_t> kernels{3, 5, 7};
  std::vector<std::string> models{"ncae", "baseline"};
  std::size_t hidden = 64;
  std::size_t steps = 32;
  std::size_t channels = 13;
  double h = 1e-6;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool fault_inject = false;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("grad-check", "Compare backprop gradients with central finite differences");
    app->add_option("--kernels", kernels, "NCAE kernel sizes")->delimiter(',')->capture_default_str();
    app->add_option("--models", models, "Model families")
        ->delimiter(',')
        ->check(CLI::IsMember({"ncae", "baseline"}))
        ->capture_default_str();
    app->add_option("--hidden", hidden, "Hidden width")->capture_default_str();
    app->add_option("--steps", steps, "Input time steps")->capture_default_str();
    app->add_option("--channels", channels, "Input channels")->capture_default_str();
    app->add_option("--fd-step", h, "Finite-difference step")->capture_default_str();
    app->add_option("--tolerance", tolerance, "Maximum allowed relative error")->capture_default_str();
    app->add_option("--seed", seed, "Seed for weights and input")->capture_default_str();
    app->add_flag("--fault-inject", fault_inject, "Scale analytic gradients by 1.1 (must fail)");
    app->add_option("--config", "key=value file; command-line flags take precedence");
  }

  int run() {
    if (!(h > 0.0)) throw UsageError("--fd-step must be positive");
    if (steps < 1 || channels < 1) throw UsageError("--steps and --channels must be >= 1");
    for (auto k : kernels)
      if (k % 2 == 0) throw UsageError("--kernels: kernel sizes must be odd, got " + std::to_string(k));
    if (hidden < channels) throw UsageError("--hidden must be >= --channels");

    ncae::Rng rng(ncae::derive_seed(seed, 7));
    ncae::Tensor2D x(steps, channels);
    for (auto& v : x.data()) v = ncae::standard_normal(rng);

    std::vector<std::pair<std::string, ncae::ModelSpec>> specs;
    for (const auto& m : models) {
      if (m == "ncae") {
        for (auto k : kernels) specs.emplace_back("ncae k=" + std::to_string(k), ncae::NcaeSpec{k, hidden, channels});
      } else {
        specs.emplace_back("baseline", ncae::BaselineSpec{hidden, channels});
      }
    }
    double worst = 0.0;
    for (const auto& [label, spec] : specs) {
      const auto model = ncae::build_model(spec, seed);
      const auto report = ncae::grad_check_model(model, x, h, fault_inject ? 1.1 : 1.0);
      std::printf("%s (%zu parameters): max rel err %.3e\n", label.c_str(),
                  model.params().parameter_count(), report.max_rel_error);
      for (const auto& e : report.per_param)
        std::printf("  %-24s %7zu  max rel err %.3e\n", e.name.c_str(), e.count, e.max_rel_error);
      worst = std::max(worst, report.max_rel_error);
    }
    const bool pass = worst < tolerance;
    std::printf("%s: max rel err %.3e %s %.0e\n", pass ? "PASS" : "FAIL", worst, pass ? "<" : ">=", tolerance);
    return pass ? 0 : kExitRuntime;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NCAE road-surface anomaly detection toolkit"};
  app.set_version_flag("--version", NCAE_VERSION);
  app.require_subcommand(1);
  GenDataCmd gen;
  TrainCmd train;
  DetectCmd detect;
  SweepCmd sweep;
  GradCheckCmd grad;
  gen.add(app);
  train.add(app);
  detect.add(app);
  sweep.add(app);
  grad.add(app);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = merge_config(app, std::move(args));
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    try {
      app.parse(std::move(rest));
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return kExitUsage;
    }
    if (*gen.app) return gen.run();
    if (*train.app) return train.run();
    if (*detect.app) return detect.run();
    if (*sweep.app) return sweep.run();
    if (*grad.app) return grad.run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
