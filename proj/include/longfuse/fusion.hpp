#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "longfuse/dependency.hpp"
#include "longfuse/volume.hpp"

namespace longfuse {

enum class MaskPolicy { union_nonzero, explicit_mask, full };

const char *to_string(MaskPolicy policy);

struct FusionConfig {
  FusionMode mode = FusionMode::fourd_jlf;
  PatchSpec patch{};
  double alpha = 0.1;
  double beta = 100.0;
  double epsilon = 1e-6;
  bool consensus_shortcut = true;
  MaskPolicy mask_policy = MaskPolicy::union_nonzero;
  std::optional<Volume> mask; ///< required for MaskPolicy::explicit_mask; nonzero = inside
  int workers = 1;
  bool emit_posteriors = false;

  TemporalParams temporal() const { return {beta, epsilon}; }
  void validate() const;
};

/// Fusion failure at a specific voxel; the message names the voxel and time point.
class FusionError : public Error {
public:
  using Error::Error;
};

struct FusionStats {
  std::size_t masked_out = 0;
  std::size_t shortcut_voxels = 0;
  std::size_t solved_voxels = 0;
  std::size_t solver_fallbacks = 0;
};

struct TimePointResult {
  Volume segmentation;
  std::map<int, Volume> posteriors; ///< per label, only with emit_posteriors
  FusionStats stats;
};

struct FusionResult {
  std::vector<TimePointResult> time_points;
};

struct VoteResult {
  int label = 0;
  std::vector<std::pair<int, double>> scores; ///< ascending label
};

/// Per-label score v_l = sum of weights of atlases voting l; argmax with
/// ties going to the smallest label.
VoteResult weighted_vote(std::span<const int> labels, std::span<const double> weights);

struct VoxelBlock {
  std::size_t begin = 0;
  std::size_t end = 0; ///< exclusive
  std::size_t size() const { return end - begin; }
};

/// `workers` contiguous, disjoint blocks covering [0, count), sizes differing by at most one.
std::vector<VoxelBlock> plan_voxel_partition(std::size_t count, int workers);
inline std::vector<VoxelBlock> plan_voxel_partition(const Dims &dims, int workers) {
  return plan_voxel_partition(dims.count(), workers);
}

/// Processing mask for a bank under a policy.
std::vector<std::uint8_t> processing_mask(const AtlasBank &bank, const FusionConfig &cfg);

/// Fuses every time point of the series, each independently. Voxels outside
/// the mask get label 0. Parallel over voxel blocks; the output does not
/// depend on cfg.workers.
FusionResult fuse(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg);

namespace reference {

/// Serial fusion with exhaustive per-voxel correspondence search. Kept as the
/// oracle for fuse(); ignores cfg.workers.
FusionResult fuse(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg);

} // namespace reference

} // namespace longfuse
