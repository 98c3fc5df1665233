#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "longfuse/volume.hpp"

namespace longfuse {

/// An axis-aligned ellipsoid painted with `label`. Radii are in voxels and
/// are multiplied by scales[t] at time point t.
struct Structure {
  int label = 1;
  std::array<double, 3> center{}; ///< voxel coordinates
  std::array<double, 3> radii{};
  std::vector<double> scales;     ///< one per time point; empty = all 1
};

struct IntensityModel {
  std::map<int, double> means; ///< per label; missing labels use 0
  double sigma = 0.05;
  /// Fraction of noise variance shared by all time points of the subject
  /// (a fixed tissue texture); the remainder is drawn per scan.
  double shared_noise_fraction = 0.0;
};

struct PhantomSpec {
  Dims dims{32, 32, 32};
  Spacing spacing{};
  int k = 3;
  int n = 4;
  std::vector<Structure> structures; ///< painted in order; later ones overwrite
  IntensityModel intensity;
  double atlas_label_error_rate = 0.3;
  double atlas_intensity_sigma = 0.05;
  /// Probability that an atlas reuses, at every time point, the same
  /// boundary-flip decision it made at the first one.
  double atlas_error_persistence = 0.0;
  std::vector<double> time_offsets; ///< additive target intensity offset per time point; empty = none
  std::uint64_t seed = 1;

  double scale(std::size_t structure, int t) const;
  /// Throws GeometryError when a structure leaves the volume, Error on other bad fields.
  void validate() const;

  /// Concentric ellipsoids with four nested labels, centred in the volume.
  static PhantomSpec concentric(Dims dims, int k, int n, std::uint64_t seed);
};

void to_json(nlohmann::json &j, const PhantomSpec &spec);
void from_json(const nlohmann::json &j, PhantomSpec &spec);

struct Phantom {
  LongitudinalSeries series;
  std::vector<Volume> truth; ///< ground-truth label map per time point
  AtlasBank bank;
};

/// Deterministic for a fixed spec (including seed).
Phantom generate_phantom(const PhantomSpec &spec);

/// Ground-truth labels at time t, without noise.
Volume phantom_truth(const PhantomSpec &spec, int t);

/// Same anatomy family with different structure scales and an independent
/// seed: the unrelated scan used in the dummy-pair robustness test.
PhantomSpec outlier_spec(const PhantomSpec &base, double scale = 0.8);

/// One two-time-point series (T_t, outlier) per target.
std::vector<LongitudinalSeries> make_dummy_pairs(const LongitudinalSeries &targets, const Volume &outlier);

/// Atlas bank for dummy pair t: the subject's block t followed by block 0 of
/// the outlier's bank.
AtlasBank make_dummy_bank(const AtlasBank &subject, int t, const AtlasBank &outlier);

} // namespace longfuse
