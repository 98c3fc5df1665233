#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace longfuse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inputs whose grids disagree (dims, spacing, length).
class GeometryError : public Error {
public:
  using Error::Error;
};

struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  bool operator==(const Dims &) const = default;
};

struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  double voxel_volume() const { return x * y * z; }
  bool operator==(const Spacing &) const = default;
};

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  bool operator==(const VoxelIndex &) const = default;
};

std::string to_string(const VoxelIndex &v);
std::string to_string(const Dims &d);

enum class VolumeKind { intensity, label };

/// A 3D scalar grid stored x-fastest. Label volumes hold non-negative
/// integers; they are stored as float, which is exact up to 2^24.
class Volume {
public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing, VolumeKind kind, std::vector<float> data);

  static Volume filled(Dims dims, Spacing spacing, VolumeKind kind, float value = 0.0f);

  const Dims &dims() const { return dims_; }
  const Spacing &spacing() const { return spacing_; }
  VolumeKind kind() const { return kind_; }
  bool is_label() const { return kind_ == VolumeKind::label; }
  std::size_t size() const { return data_.size(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_.y) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(dims_.x) +
           static_cast<std::size_t>(x);
  }
  std::size_t index(const VoxelIndex &v) const { return index(v.x, v.y, v.z); }
  VoxelIndex coord(std::size_t linear) const;

  bool contains(const VoxelIndex &v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims_.x && v.y < dims_.y && v.z < dims_.z;
  }

  float at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  float at(const VoxelIndex &v) const { return data_[index(v)]; }
  float &at(int x, int y, int z) { return data_[index(x, y, z)]; }

  /// Replication padding: coordinates are clamped into the grid.
  float at_clamped(int x, int y, int z) const;

  int label(std::size_t linear) const { return static_cast<int>(data_[linear]); }

  /// Same grid, different interpretation. Converting to label validates contents.
  Volume with_kind(VolumeKind kind) const;

  bool same_grid(const Volume &other) const {
    return dims_ == other.dims_ && spacing_ == other.spacing_;
  }

  /// NIfTI sform rows (3x4, row major). Carried through I/O; fusion ignores it.
  const std::array<float, 12> &affine() const { return affine_; }
  void set_affine(const std::array<float, 12> &a) { affine_ = a; }

private:
  void validate() const;

  Dims dims_{};
  Spacing spacing_{};
  VolumeKind kind_ = VolumeKind::intensity;
  std::vector<float> data_;
  std::array<float, 12> affine_{};
};

/// k intensity targets of one subject, ascending in time, on one grid.
struct LongitudinalSeries {
  std::vector<Volume> targets;
  std::string subject_id;

  int k() const { return static_cast<int>(targets.size()); }
  const Volume &target(int t) const { return targets.at(static_cast<std::size_t>(t)); }
  void validate() const;
};

struct AtlasPair {
  Volume image;
  Volume labels;
};

/// The m = n*k registered atlases, concatenated block by block: atlases
/// [t*n, (t+1)*n) were registered to target t. All indices are 0-based.
class AtlasBank {
public:
  AtlasBank() = default;
  AtlasBank(int n, int k, std::vector<AtlasPair> pairs);

  /// Replicates n unregistered atlases into k blocks (inputs already on the target grid).
  static AtlasBank replicate(std::vector<AtlasPair> atlases, int k);

  int n() const { return n_; }
  int k() const { return k_; }
  int m() const { return n_ * k_; }

  /// Time point that atlas i was registered to.
  int time_of(int i) const { return i / n_; }
  int block_begin(int t) const { return t * n_; }
  int block_end(int t) const { return (t + 1) * n_; }

  const AtlasPair &pair(int i) const { return pairs_.at(static_cast<std::size_t>(i)); }
  const Volume &image(int i) const { return pair(i).image; }
  const Volume &labels(int i) const { return pair(i).labels; }
  const std::vector<AtlasPair> &pairs() const { return pairs_; }

  /// Throws GeometryError unless every pair sits on the series' grid.
  void check_against(const LongitudinalSeries &series) const;

private:
  int n_ = 0;
  int k_ = 0;
  std::vector<AtlasPair> pairs_;
};

} // namespace longfuse
