#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "longfuse/volume.hpp"

namespace longfuse {

/// Half-widths of the patch cube and of the search cube.
///
/// A radius r spans (2r+1) voxels per axis, so the defaults are a 5x5x5
/// patch and a 7x7x7 search window.
struct PatchSpec {
  int patch_radius = 2;
  int search_radius = 3;
  static constexpr int kMaxSearchRadius = 19; ///< best-index buffers are 16-bit

  int patch_width() const { return 2 * patch_radius + 1; }
  int patch_size() const { return patch_width() * patch_width() * patch_width(); }
  void validate() const;
};

/// Offset from a voxel to its best-matching atlas location; each component in [-rs, rs].
struct Displacement {
  std::int8_t x = 0;
  std::int8_t y = 0;
  std::int8_t z = 0;
  bool operator==(const Displacement &) const = default;
};

/// Every displacement of the search cube, in tie-break order: ascending
/// squared length, then ascending (z, y, x).
std::vector<Displacement> search_order(int search_radius);

/// The (2rp+1)^3 values around `center`, z-major then y then x, with
/// replication padding at the borders.
std::vector<float> extract_patch(const Volume &v, VoxelIndex center, int patch_radius);

/// Sum of absolute differences. Throws Error on a length mismatch.
double patch_dissimilarity(std::span<const float> a, std::span<const float> b);

/// Dissimilarity between the target patch at x and the atlas patch at
/// clamp(x + d), accumulated per row, then per plane, in single precision.
/// This is the exact expression the search kernels minimise.
float search_cost(const Volume &target, const Volume &atlas, VoxelIndex x, Displacement d, int patch_radius);

/// Exhaustive search over the cube for the displacement of minimum search_cost.
Displacement search_correspondence(const Volume &target, const Volume &atlas, VoxelIndex x, const PatchSpec &spec);

/// Atlas location actually used for displacement d at x (the displaced centre is clamped).
inline VoxelIndex displaced_center(const Volume &v, VoxelIndex x, Displacement d) {
  auto clampi = [](int a, int hi) { return a < 0 ? 0 : (a > hi ? hi : a); };
  return {clampi(x.x + d.x, v.dims().x - 1), clampi(x.y + d.y, v.dims().y - 1), clampi(x.z + d.z, v.dims().z - 1)};
}

/// Per-voxel displacements of one atlas against one reference image.
/// Entries outside the requested voxel set are left at zero.
class CorrespondenceMap {
public:
  CorrespondenceMap() = default;
  explicit CorrespondenceMap(Dims dims) : dims_(dims), d_(dims.count()) {}

  const Dims &dims() const { return dims_; }
  Displacement operator[](std::size_t linear) const { return d_[linear]; }
  Displacement &operator[](std::size_t linear) { return d_[linear]; }
  bool operator==(const CorrespondenceMap &) const = default;

private:
  Dims dims_{};
  std::vector<Displacement> d_;
};

/// Computes displacements for every voxel with need[v] != 0 (all voxels when
/// `need` is empty). Interior voxels go through a separable box-sum kernel
/// parallelised over z slabs; voxels whose search touches the border fall
/// back to search_correspondence. Output is independent of `workers`.
CorrespondenceMap compute_correspondence_map(const Volume &reference, const Volume &atlas, const PatchSpec &spec,
                                             std::span<const std::uint8_t> need, int workers);

namespace reference {

/// Serial per-voxel exhaustive search; the oracle for compute_correspondence_map.
CorrespondenceMap compute_correspondence_map(const Volume &reference, const Volume &atlas, const PatchSpec &spec,
                                             std::span<const std::uint8_t> need);

} // namespace reference

} // namespace longfuse
