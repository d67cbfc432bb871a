#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bethe/detect.hpp"
#include "bethe/model.hpp"
#include "bethe/types.hpp"

namespace bethe {

enum class ExperimentKind { Figure1, Counts, Recovery, Theory, Sweep };

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Counts;
  ModelParams model;  // unused by sweep (models derived per point)
  bool has_model = false;
  std::vector<std::uint64_t> seeds;
  double epsilon = -1.0;
  double solver_tol = 1e-8;
  int threads = 0;  // 0 = all hardware threads
  int kmeans_restarts = 20;
  std::string out_dir;

  double accuracy_floor = 0.9;   // counts/figure1 pass threshold
  double overlap_floor = 0.75;   // recovery pass threshold (median)

  // sweep: two-block symmetric models with mu2 = factor * sqrt(d)
  double sweep_d = 6.0;
  Index sweep_n = 4000;
  std::vector<double> sweep_factors = {1.3, 1.1, 1.0, 0.9, 0.7};
  double sweep_hi_factor = 1.3, sweep_lo_factor = 0.7;
  double sweep_hi_accuracy = 0.9, sweep_lo_accuracy = 0.2;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentSummary {
  bool pass = false;
  int trials = 0;
  int failed = 0;
  std::string summary_json;
};

/// Runs the configured trials (parallel across seeds), writes trials.csv and
/// summary.json into out_dir, and reports the aggregate verdict.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct SpectrumHistogram {
  std::vector<double> edges;                 // bins + 1
  std::vector<Index> counts;                 // per bin [e_i, e_{i+1})
  double lo = 0.0, hi = 0.0;
  std::string method;                        // windowed-inertia | dense
  std::vector<double> negative_eigenvalues;  // all eigenvalues below 0, exact
};

/// Exact per-bin eigenvalue counts of H(t) from inertia differences at the
/// bin edges. Pass lo >= hi to auto-select the Gershgorin window.
SpectrumHistogram spectrum_histogram(const SparseGraph& g, double t, double lo, double hi,
                                     Index bins, bool dense = false);

void save_histogram_csv(const SpectrumHistogram& hist, const std::string& path);
std::string histogram_to_json(const SpectrumHistogram& hist);

// Atomic text write: temp file then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace bethe
