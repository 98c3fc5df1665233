#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "longfuse/patch.hpp"
#include "longfuse/volume.hpp"

namespace longfuse {

/// Which dependency matrix drives the weights.
enum class FusionMode {
  jlf,                ///< n x n, atlases registered to the current target only
  jlf_multi,          ///< m x m, all atlases, residuals against the current target
  fourd_jlf,          ///< m x m, own-time residuals scaled by temporal penalties
  jlf_multi_own_time, ///< m x m, own-time residuals, no penalties (fourd_jlf at beta = 0)
};

const char *to_string(FusionMode mode);
std::optional<FusionMode> parse_fusion_mode(std::string_view name);

/// Which target a residual is measured against.
enum class ResidualReference { target_time, own_time };

/// Correspondence maps keyed by (reference time, atlas).
class CorrespondenceSet {
public:
  CorrespondenceSet() = default;
  CorrespondenceSet(int k, int m) : k_(k), m_(m), maps_(static_cast<std::size_t>(k) * static_cast<std::size_t>(m)) {}

  void set(int ref_time, int atlas, CorrespondenceMap map) { maps_.at(slot(ref_time, atlas)) = std::move(map); }
  bool has(int ref_time, int atlas) const { return maps_.at(slot(ref_time, atlas)).has_value(); }
  const CorrespondenceMap &get(int ref_time, int atlas) const;

private:
  std::size_t slot(int t, int i) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i);
  }
  int k_ = 0;
  int m_ = 0;
  std::vector<std::optional<CorrespondenceMap>> maps_;
};

/// Read-only view of everything the per-voxel builders need.
struct FusionContext {
  const LongitudinalSeries &series;
  const AtlasBank &bank;
  const CorrespondenceSet &maps;
  PatchSpec spec;
};

struct TemporalParams {
  double beta = 100.0;
  double epsilon = 1e-6;
};

/// Exponent cap applied before exp(); keeps products of two penalties finite.
inline constexpr double kPenaltyExponentCap = 150.0;

/// Per-voxel dependency matrix; `atlases[r]` is the bank index of row r.
struct DependencyMatrix {
  Eigen::MatrixXd values;
  std::vector<int> atlases;
  int time = 0;
  VoxelIndex voxel{};
};

/// Scratch buffers reused across voxels by one worker.
struct BuildWorkspace {
  std::vector<double> residuals;   // rows of patch_size values
  std::vector<double> penalties;
  std::vector<float> target_patches; // one patch per time point
  std::vector<int> atlases;
  Eigen::MatrixXd gram;
};

/// |R(y) - I(N(y))| over the patch around x, where N applies displacement d
/// to the centre and R is `reference`.
void residual_vector(const Volume &reference, const Volume &atlas_image, VoxelIndex x, Displacement d,
                     int patch_radius, std::span<double> out);

/// Residuals of atlas i at x against T_t or against the target it was registered to.
std::vector<double> residual_vector(const FusionContext &ctx, int t, int i, VoxelIndex x, ResidualReference against);

/// Upper triangle sum of products, mirrored: out(i,j) = sum_y rows[i][y] * rows[j][y].
void gram_matrix(std::span<const double> rows, int count, int length, Eigen::MatrixXd &out);

/// exp(min(E, cap)) with E = beta * sum_y |T_q(y) - T_t(y)| / max(a_i(y), epsilon),
/// where q is atlas i's time point and a_i are its own-time residuals.
double temporal_penalty(const FusionContext &ctx, int t, int i, VoxelIndex x, const TemporalParams &params);
double temporal_penalty_from(std::span<const float> own_target_patch, std::span<const float> current_target_patch,
                             std::span<const double> own_residuals, const TemporalParams &params);

/// Atlases whose votes count at time t for `mode`.
std::vector<int> participating_atlases(const AtlasBank &bank, FusionMode mode, int t);

/// Builds the mode's matrix into ws.gram (rows ordered as ws.atlases). The
/// single code path behind every public builder and the fusion driver.
void build_matrix_into(const FusionContext &ctx, FusionMode mode, int t, VoxelIndex x, const TemporalParams &params,
                       BuildWorkspace &ws);

DependencyMatrix build_jlf_matrix(const FusionContext &ctx, int t, VoxelIndex x);
DependencyMatrix build_jlfmulti_matrix(const FusionContext &ctx, int t, VoxelIndex x);
/// Own-time residual Gram matrix over all m atlases.
DependencyMatrix build_gamma_matrix(const FusionContext &ctx, VoxelIndex x);
DependencyMatrix build_4djlf_matrix(const FusionContext &ctx, int t, VoxelIndex x, const TemporalParams &params);

/// The n x n block of `gamma` for atlases of time blocks q and r (0-based).
Eigen::MatrixXd phi_block(const Eigen::MatrixXd &gamma, int n, int k, int q, int r);

} // namespace longfuse
