#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "longfuse/fusion.hpp"
#include "longfuse/phantom.hpp"

namespace longfuse::cli {

struct ExperimentOptions {
  PhantomSpec base;                ///< seed field is replaced per run
  std::vector<FusionMode> modes{FusionMode::jlf, FusionMode::jlf_multi, FusionMode::fourd_jlf};
  FusionConfig fusion;             ///< mode field is ignored
  int seeds = 10;
  std::uint64_t first_seed = 1;
  bool reproducibility = true;
  bool robustness = true;
  double outlier_scale = 0.8;
};

/// Per-seed, per-mode measurements.
struct SeedOutcome {
  std::uint64_t seed = 0;
  std::map<FusionMode, double> repro;       ///< mean pairwise longitudinal Dice
  std::map<FusionMode, double> dice_truth;  ///< mean Dice vs truth over time points
  std::map<FusionMode, double> robust_dice; ///< mean Dice vs truth on dummy pairs
};

struct ComparisonStat {
  std::string metric; ///< "repro", "dice_truth" or "robust_dice"
  FusionMode mode{};
  FusionMode baseline{};
  int n = 0;
  double mean_mode = 0.0;
  double mean_baseline = 0.0;
  std::optional<double> wilcoxon_p; ///< absent below five seeds
  std::optional<double> cohens_d;   ///< absent when the pooled deviation is zero
};

struct ExperimentReport {
  std::vector<SeedOutcome> seeds;
  std::vector<ComparisonStat> stats; ///< empty for single-mode runs
};

/// Foreground labels painted by a spec.
std::set<int> spec_labels(const PhantomSpec &spec);

/// Fuses a phantom in `mode`; returns (mean pairwise Dice, mean Dice vs truth).
std::pair<double, double> measure_reproducibility(const Phantom &ph, const std::set<int> &labels, FusionConfig cfg);

/// Dummy-pair robustness: mean over t of Dice vs truth[t] for the first time
/// point of the fused pair (T_t, outlier).
double measure_robustness(const Phantom &ph, const Phantom &outlier, const std::set<int> &labels, FusionConfig cfg);

using Progress = std::function<void(const std::string &)>;

ExperimentReport run_experiment(const ExperimentOptions &opts, const Progress &progress = {});

/// Stats of each mode against the baseline (jlf if listed, else the first mode).
std::vector<ComparisonStat> compare_modes(const std::vector<SeedOutcome> &seeds, const std::vector<FusionMode> &modes);

/// Deterministic human-readable report; contains no timings.
std::string render_report(const ExperimentOptions &opts, const ExperimentReport &report);
std::string summary_csv(const ExperimentReport &report);
std::string stats_csv(const ExperimentReport &report);

} // namespace longfuse::cli
