#pragma once

// AUROC, inference timing and seeded Monte Carlo hyperparameter sweeps.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/models.hpp"
#include "ncae/pipeline.hpp"
#include "ncae/rng.hpp"
#include "ncae/synthgen.hpp"

namespace ncae {

/// Probability that a random abnormal score exceeds a random normal one, ties
/// counting one half (the Mann-Whitney U statistic over n * m). Pairs are
/// counted exactly in integers, so the result equals brute-force enumeration.
inline double auroc(std::span<const double> normal_scores, std::span<const double> abnormal_scores) {
  if (normal_scores.empty() || abnormal_scores.empty())
    throw InvalidArgument("auroc: both score lists must be nonempty");
  std::vector<double> sorted(normal_scores.begin(), normal_scores.end());
  for (double s : sorted)
    if (std::isnan(s)) throw InvalidArgument("auroc: NaN score");
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t twice_wins = 0;
  for (double a : abnormal_scores) {
    if (std::isnan(a)) throw InvalidArgument("auroc: NaN score");
    const auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), a);
    twice_wins += 2 * static_cast<std::uint64_t>(lo - sorted.begin()) +
                  static_cast<std::uint64_t>(hi - lo);
  }
  const double pairs = static_cast<double>(sorted.size()) * static_cast<double>(abnormal_scores.size());
  return static_cast<double>(twice_wins) / (2.0 * pairs);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) r.mean += x;
  r.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / n);
  return r;
}

/// Wall-clock seconds per single-window forward pass, over `repetitions`
/// passes through `windows`. One untimed warm-up pass runs first.
inline MeanStd time_inference(const Model& model, std::span<const Tensor2D> windows,
                              std::size_t repetitions) {
  if (windows.empty()) throw InvalidArgument("time_inference: no windows");
  if (repetitions == 0) throw InvalidArgument("time_inference: repetitions must be >= 1");
  using Clock = std::chrono::steady_clock;
  volatile double sink = model.forward(windows.front()).data().front();
  std::vector<double> samples;
  samples.reserve(windows.size() * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (const auto& w : windows) {
      const auto t0 = Clock::now();
      const auto out = model.forward(w);
      const auto t1 = Clock::now();
      sink = out.data().front();
      samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
  }
  (void)sink;
  return mean_std(samples);
}

enum class ModelFamily { ncae, baseline };

inline const char* family_name(ModelFamily f) { return f == ModelFamily::ncae ? "ncae" : "baseline"; }

struct SweepGrid {
  std::vector<std::size_t> kernel_sizes{3, 5, 7};
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4};
  std::size_t trials = 10;
};

struct SweepOptions {
  SweepGrid grid;
  TrainConfig train;  // learning_rate and seed are overridden per point
  std::size_t hidden_width = 64;
  std::uint64_t master_seed = 0;
  std::size_t timing_repetitions = 1;
  std::size_t threads = 1;
};

struct SweepPoint {
  std::size_t kernel_size = 0;  // 0 for the baseline, which has no kernel axis
  double learning_rate = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double auroc = std::numeric_limits<double>::quiet_NaN();  // NaN when the trial diverged
  double train_seconds = 0.0;
  double infer_seconds_per_window = 0.0;

  bool valid() const noexcept { return std::isfinite(auroc); }
};

struct SweepSurface {
  ModelFamily family = ModelFamily::ncae;
  std::vector<SweepPoint> points;
};

/// Seed of trial `trial`; independent of the grid cell so every cell (and both
/// families) start from the same set of seeds.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial) {
  return derive_seed(master_seed, 1000 + trial);
}

/// One Monte Carlo point: fresh seeded init, train on normal windows,
/// calibrate, score held-out normal and abnormal windows.
inline SweepPoint run_sweep_point(ModelFamily family, std::size_t kernel, double lr, std::size_t trial,
                                  const SweepOptions& opt, const DatasetBundle& data) {
  using Clock = std::chrono::steady_clock;
  SweepPoint p;
  p.kernel_size = family == ModelFamily::ncae ? kernel : 0;
  p.learning_rate = lr;
  p.trial = trial;
  p.seed = trial_seed(opt.master_seed, trial);

  const std::size_t channels = data.train_normal.front().cols();
  const ModelSpec spec = family == ModelFamily::ncae
                             ? ModelSpec(NcaeSpec{kernel, opt.hidden_width, channels})
                             : ModelSpec(BaselineSpec{opt.hidden_width, channels});
  TrainConfig tc = opt.train;
  tc.learning_rate = lr;
  tc.seed = derive_seed(p.seed, 1);

  const auto t0 = Clock::now();
  std::optional<TrainResult> trained;
  try {
    trained.emplace(train(build_model(spec, p.seed), data.train_normal, tc));
  } catch (const TrainingDiverged&) {
    p.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return p;
  }
  p.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  const Model& model = trained->model;
  const auto normal = score_windows(model, data.test_normal);
  const auto abnormal = score_windows(model, data.test_abnormal);
  const auto all_finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (all_finite(normal) && all_finite(abnormal)) p.auroc = auroc(normal, abnormal);
  p.infer_seconds_per_window = time_inference(model, data.test_normal, opt.timing_repetitions).mean;
  return p;
}

/// Runs every (kernel, learning rate, trial) point. Points are returned in
/// (kernel, lr, trial) order whatever the thread count; all seeds derive from
/// opt.master_seed. Diverged trials stay in the surface with auroc = NaN.
inline SweepSurface monte_carlo_sweep(ModelFamily family, const SweepOptions& opt,
                                      const DatasetBundle& data) {
  if (opt.grid.trials < 1) throw InvalidArgument("sweep: trials must be >= 1");
  if (opt.grid.learning_rates.empty()) throw InvalidArgument("sweep: empty learning-rate grid");
  for (double lr : opt.grid.learning_rates)
    if (!(lr > 0.0)) throw InvalidArgument("sweep: learning rates must be positive");
  if (data.train_normal.empty() || data.test_normal.empty() || data.test_abnormal.empty())
    throw InvalidArgument("sweep: dataset needs train, test-normal and test-abnormal windows");

  std::vector<std::size_t> kernels{0};
  if (family == ModelFamily::ncae) {
    if (opt.grid.kernel_sizes.empty()) throw InvalidArgument("sweep: empty kernel grid");
    for (auto k : opt.grid.kernel_sizes)
      if (k % 2 == 0) throw InvalidArgument("sweep: kernel sizes must be odd");
    kernels = opt.grid.kernel_sizes;
  }

  struct Job {
    std::size_t kernel;
    double lr;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (auto k : kernels)
    for (double lr : opt.grid.learning_rates)
      for (std::size_t t = 0; t < opt.grid.trials; ++t) jobs.push_back({k, lr, t});

  SweepSurface surface{family, std::vector<SweepPoint>(jobs.size())};
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      surface.points[i] = run_sweep_point(family, jobs[i].kernel, jobs[i].lr, jobs[i].trial, opt, data);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opt.threads, jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return surface;
}

struct CellSummary {
  std::size_t kernel_size = 0;
  double learning_rate = 0.0;
  std::size_t points = 0;
  std::size_t valid_points = 0;
  MeanStd auroc;
  MeanStd train_seconds;
  MeanStd infer_seconds;

  bool all_invalid() const noexcept { return valid_points == 0; }
};

struct SweepSummary {
  ModelFamily family = ModelFamily::ncae;
  std::vector<CellSummary> cells;
  std::optional<std::size_t> best;  // index into cells
};

/// Per-cell mean and population std over valid points; best cell has the
/// highest mean AUROC, ties going to the lower mean inference time.
inline SweepSummary summarize(const SweepSurface& surface) {
  if (surface.points.empty()) throw InvalidArgument("summarize: empty surface");
  SweepSummary s{surface.family, {}, std::nullopt};
  for (const auto& p : surface.points) {
    auto it = std::find_if(s.cells.begin(), s.cells.end(), [&](const CellSummary& c) {
      return c.kernel_size == p.kernel_size && c.learning_rate == p.learning_rate;
    });
    if (it == s.cells.end()) {
      CellSummary c;
      c.kernel_size = p.kernel_size;
      c.learning_rate = p.learning_rate;
      s.cells.push_back(c);
    }
  }
  for (auto& c : s.cells) {
    std::vector<double> auc, tr, inf;
    for (const auto& p : surface.points) {
      if (p.kernel_size != c.kernel_size || p.learning_rate != c.learning_rate) continue;
      ++c.points;
      tr.push_back(p.train_seconds);
      if (!p.valid()) continue;
      ++c.valid_points;
      auc.push_back(p.auroc);
      inf.push_back(p.infer_seconds_per_window);
    }
    c.auroc = mean_std(auc);
    c.train_seconds = mean_std(tr);
    c.infer_seconds = mean_std(inf);
    if (c.all_invalid()) c.auroc.mean = c.auroc.std = std::numeric_limits<double>::quiet_NaN();
  }
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    const auto& c = s.cells[i];
    if (c.all_invalid()) continue;
    if (!s.best) {
      s.best = i;
      continue;
    }
    const auto& b = s.cells[*s.best];
    if (c.auroc.mean > b.auroc.mean ||
        (c.auroc.mean == b.auroc.mean && c.infer_seconds.mean < b.infer_seconds.mean))
      s.best = i;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Export

inline constexpr const char* kSurfaceCsvHeader =
    "kernel_size,learning_rate,trial,seed,auroc,train_seconds,infer_seconds_per_window";

inline void write_surface_csv(std::ostream& out, const SweepSurface& surface) {
  out << kSurfaceCsvHeader << '\n';
  for (const auto& p : surface.points)
    out << p.kernel_size << ',' << format_double(p.learning_rate) << ',' << p.trial << ',' << p.seed
        << ',' << format_double(p.auroc) << ',' << format_double(p.train_seconds) << ','
        << format_double(p.infer_seconds_per_window) << '\n';
}

inline void export_surface_csv(const SweepSurface& surface, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_surface_csv(out, surface);
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<SweepPoint> read_surface_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSurfaceCsvHeader)
    throw IoError(path + ": missing or unexpected surface header");
  std::vector<SweepPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw IoError(path + ": expected 7 columns in '" + line + "'");
    SweepPoint p;
    p.kernel_size = std::stoul(f[0]);
    p.learning_rate = std::strtod(f[1].c_str(), nullptr);
    p.trial = std::stoul(f[2]);
    p.seed = std::stoull(f[3]);
    p.auroc = std::strtod(f[4].c_str(), nullptr);
    p.train_seconds = std::strtod(f[5].c_str(), nullptr);
    p.infer_seconds_per_window = std::strtod(f[6].c_str(), nullptr);
    points.push_back(p);
  }
  return points;
}

inline void write_summary_csv(std::ostream& out, std::span<const SweepSummary> summaries) {
  out << "model,kernel_size,learning_rate,points,valid_points,auroc_mean,auroc_std,"
         "train_seconds_mean,train_seconds_std,infer_seconds_mean,infer_seconds_std,best\n";
  for (const auto& s : summaries) {
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
      const auto& c = s.cells[i];
      out << family_name(s.family) << ',' << c.kernel_size << ',' << format_double(c.learning_rate)
          << ',' << c.points << ',' << c.valid_points << ',' << format_double(c.auroc.mean) << ','
          << format_double(c.auroc.std) << ',' << format_double(c.train_seconds.mean) << ','
          << format_double(c.train_seconds.std) << ',' << format_double(c.infer_seconds.mean) << ','
          << format_double(c.infer_seconds.std) << ',' << (s.best == i ? 1 : 0) << '\n';
    }
  }
}

/// Aligned plain-text table in "mean +- std" form, one block per family.
inline void write_summary_text(std::ostream& out, std::span<const SweepSummary> summaries) {
  for (const auto& s : summaries) {
    out << "model: " << family_name(s.family) << '\n';
    out << std::left << std::setw(8) << "kernel" << std::setw(12) << "lr" << std::setw(8) << "valid"
        << std::setw(26) << "auroc" << std::setw(28) << "infer_s/window" << "train_s" << '\n';
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
      const auto& c = s.cells[i];
      std::ostringstream auc, inf, tr, lr;
      auc << std::fixed << std::setprecision(5) << c.auroc.mean << " +- " << c.auroc.std;
      inf << std::scientific << std::setprecision(3) << c.infer_seconds.mean << " +- " << c.infer_seconds.std;
      tr << std::fixed << std::setprecision(2) << c.train_seconds.mean;
      lr << std::defaultfloat << c.learning_rate;
      out << std::left << std::setw(8) << (c.kernel_size ? std::to_string(c.kernel_size) : "-")
          << std::setw(12) << lr.str() << std::setw(8)
          << (std::to_string(c.valid_points) + "/" + std::to_string(c.points)) << std::setw(26)
          << (c.all_invalid() ? std::string("ALL DIVERGED") : auc.str()) << std::setw(28) << inf.str()
          << tr.str() << (s.best == i ? "  <- best" : "") << '\n';
    }
    out << '\n';
  }
}

}  // namespace ncae
