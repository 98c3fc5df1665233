#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "longfuse/volume.hpp"

namespace longfuse {

/// 2|A∩B| / (|A|+|B|) over voxels carrying `label`; 1 when both are empty.
double dice(const Volume &a, const Volume &b, int label);

struct DiceReport {
  std::map<int, double> per_label;
  double mean = 0.0;
  std::map<int, std::pair<std::size_t, std::size_t>> counts; ///< voxels per label in (a, b)
};

DiceReport dice_report(const Volume &a, const Volume &b, const std::set<int> &labels);

struct ReproducibilityMatrix {
  int k = 0;
  std::vector<double> values; ///< row-major k*k

  double at(int s, int t) const { return values[static_cast<std::size_t>(s * k + t)]; }
  /// Mean of the strictly upper triangle.
  double mean_off_diagonal() const;
};

/// Entry (s,t) is the mean Dice over `labels` between segmentations s and t.
ReproducibilityMatrix reproducibility(std::span<const Volume> segs, const std::set<int> &labels);

struct VolumeTrajectory {
  std::map<int, std::vector<double>> per_label;           ///< mm³ per time point
  std::map<std::string, std::vector<double>> per_group;   ///< sum over the group's labels
  std::vector<double> total;                              ///< whole grid volume per time point
};

/// Volumes in mm³. Every label present in any segmentation is reported, plus
/// those listed in `labels` even when absent.
VolumeTrajectory volume_trajectory(std::span<const Volume> segs, const std::set<int> &labels, const Spacing &spacing,
                                   const std::map<std::string, std::set<int>> &groups = {});

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  double p = 1.0;
  double w_plus = 0.0;     ///< sum of ranks of positive differences x - y
  int n_used = 0;          ///< pairs left after dropping zero differences
  WilcoxonMethod method = WilcoxonMethod::exact;
};

/// Two-sided signed-rank test on paired samples. Zero differences are
/// dropped and tied magnitudes receive midranks. `automatic` uses the exact
/// null distribution for up to 25 pairs and the tie-corrected normal
/// approximation (with continuity correction) above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

/// Thrown when the pooled standard deviation is zero.
class UndefinedEffectSizeError : public Error {
public:
  using Error::Error;
};

/// (mean(x) - mean(y)) / pooled sd with n-1 denominators.
double cohens_d(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> x);

} // namespace longfuse
