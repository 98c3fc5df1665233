#include "longfuse/volume.hpp"

#include <algorithm>
#include <cmath>

namespace longfuse {

std::string to_string(const VoxelIndex &v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + "," + std::to_string(v.z) + ")";
}

std::string to_string(const Dims &d) {
  return std::to_string(d.x) + "x" + std::to_string(d.y) + "x" + std::to_string(d.z);
}

Volume::Volume(Dims dims, Spacing spacing, VolumeKind kind, std::vector<float> data)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
  affine_ = {static_cast<float>(spacing.x), 0, 0, 0, 0, static_cast<float>(spacing.y), 0, 0,
             0, 0, static_cast<float>(spacing.z), 0};
  validate();
}

Volume Volume::filled(Dims dims, Spacing spacing, VolumeKind kind, float value) {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw GeometryError("volume dims must be positive, got " + to_string(dims));
  return Volume(dims, spacing, kind, std::vector<float>(dims.count(), value));
}

void Volume::validate() const {
  if (dims_.x <= 0 || dims_.y <= 0 || dims_.z <= 0)
    throw GeometryError("volume dims must be positive, got " + to_string(dims_));
  if (!(spacing_.x > 0) || !(spacing_.y > 0) || !(spacing_.z > 0))
    throw GeometryError("voxel spacing must be strictly positive");
  if (data_.size() != dims_.count())
    throw GeometryError("volume data length " + std::to_string(data_.size()) + " does not match dims " +
                        to_string(dims_));
  if (kind_ == VolumeKind::label) {
    for (float v : data_) {
      if (!(v >= 0.0f) || v != std::floor(v))
        throw GeometryError("label volume contains a value that is not a non-negative integer: " +
                            std::to_string(v));
    }
  }
}

VoxelIndex Volume::coord(std::size_t linear) const {
  const auto nx = static_cast<std::size_t>(dims_.x);
  const auto ny = static_cast<std::size_t>(dims_.y);
  return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny),
          static_cast<int>(linear / (nx * ny))};
}

float Volume::at_clamped(int x, int y, int z) const {
  x = std::clamp(x, 0, dims_.x - 1);
  y = std::clamp(y, 0, dims_.y - 1);
  z = std::clamp(z, 0, dims_.z - 1);
  return data_[index(x, y, z)];
}

Volume Volume::with_kind(VolumeKind kind) const {
  Volume out(dims_, spacing_, kind, data_);
  out.affine_ = affine_;
  return out;
}

void LongitudinalSeries::validate() const {
  if (targets.empty())
    throw GeometryError("longitudinal series '" + subject_id + "' has no time points");
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t].kind() != VolumeKind::intensity)
      throw GeometryError("target " + std::to_string(t) + " is not an intensity volume");
    if (!targets[t].same_grid(targets.front()))
      throw GeometryError("target " + std::to_string(t) + " grid " + to_string(targets[t].dims()) +
                          " differs from target 0 grid " + to_string(targets.front().dims()));
  }
}

AtlasBank::AtlasBank(int n, int k, std::vector<AtlasPair> pairs) : n_(n), k_(k), pairs_(std::move(pairs)) {
  if (n <= 0 || k <= 0)
    throw GeometryError("atlas bank needs n >= 1 and k >= 1");
  if (pairs_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(k))
    throw GeometryError("atlas bank holds " + std::to_string(pairs_.size()) + " pairs, expected n*k = " +
                        std::to_string(n * k));
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto &p = pairs_[i];
    if (p.image.kind() != VolumeKind::intensity || p.labels.kind() != VolumeKind::label)
      throw GeometryError("atlas " + std::to_string(i) + " must pair an intensity image with a label map");
    if (!p.image.same_grid(p.labels))
      throw GeometryError("atlas " + std::to_string(i) + " image and label map are on different grids");
    if (!p.image.same_grid(pairs_.front().image))
      throw GeometryError("atlas " + std::to_string(i) + " grid differs from atlas 0");
  }
}

AtlasBank AtlasBank::replicate(std::vector<AtlasPair> atlases, int k) {
  const int n = static_cast<int>(atlases.size());
  std::vector<AtlasPair> pairs;
  pairs.reserve(atlases.size() * static_cast<std::size_t>(std::max(k, 0)));
  for (int t = 0; t < k; ++t)
    for (const auto &a : atlases)
      pairs.push_back(a);
  return AtlasBank(n, k, std::move(pairs));
}

void AtlasBank::check_against(const LongitudinalSeries &series) const {
  series.validate();
  if (series.k() != k_)
    throw GeometryError("atlas bank has " + std::to_string(k_) + " time blocks but the series has " +
                        std::to_string(series.k()) + " targets");
  const Volume &ref = series.targets.front();
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!pairs_[i].image.same_grid(ref))
      throw GeometryError("atlas " + std::to_string(i) + " grid " + to_string(pairs_[i].image.dims()) +
                          " does not match target grid " + to_string(ref.dims()));
  }
}

} // namespace longfuse
