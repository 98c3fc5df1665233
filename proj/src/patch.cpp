#include "longfuse/patch.hpp"

#include "patch_detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace longfuse {

void PatchSpec::validate() const {
  if (patch_radius < 0 || search_radius < 0)
    throw Error("patch and search radii must be non-negative");
  if (search_radius > kMaxSearchRadius)
    throw Error("search radius above " + std::to_string(kMaxSearchRadius) + " is not supported");
}

std::vector<Displacement> search_order(int rs) {
  std::vector<Displacement> out;
  out.reserve(static_cast<std::size_t>((2 * rs + 1) * (2 * rs + 1) * (2 * rs + 1)));
  for (int z = -rs; z <= rs; ++z)
    for (int y = -rs; y <= rs; ++y)
      for (int x = -rs; x <= rs; ++x)
        out.push_back({static_cast<std::int8_t>(x), static_cast<std::int8_t>(y), static_cast<std::int8_t>(z)});
  std::stable_sort(out.begin(), out.end(), [](const Displacement &a, const Displacement &b) {
    const int la = a.x * a.x + a.y * a.y + a.z * a.z;
    const int lb = b.x * b.x + b.y * b.y + b.z * b.z;
    return std::tie(la, a.z, a.y, a.x) < std::tie(lb, b.z, b.y, b.x);
  });
  return out;
}

std::vector<float> extract_patch(const Volume &v, VoxelIndex c, int rp) {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>((2 * rp + 1) * (2 * rp + 1) * (2 * rp + 1)));
  for (int oz = -rp; oz <= rp; ++oz)
    for (int oy = -rp; oy <= rp; ++oy)
      for (int ox = -rp; ox <= rp; ++ox)
        out.push_back(v.at_clamped(c.x + ox, c.y + oy, c.z + oz));
  return out;
}

double patch_dissimilarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw Error("patch_dissimilarity: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return s;
}

float search_cost(const Volume &target, const Volume &atlas, VoxelIndex x, Displacement d, int rp) {
  const VoxelIndex c = displaced_center(atlas, x, d);
  float total = 0.0f;
  for (int oz = -rp; oz <= rp; ++oz) {
    float plane = 0.0f;
    for (int oy = -rp; oy <= rp; ++oy) {
      float row = 0.0f;
      for (int ox = -rp; ox <= rp; ++ox)
        row += std::abs(target.at_clamped(x.x + ox, x.y + oy, x.z + oz) - atlas.at_clamped(c.x + ox, c.y + oy, c.z + oz));
      plane += row;
    }
    total += plane;
  }
  return total;
}

Displacement detail::search_over(const Volume &target, const Volume &atlas, VoxelIndex x,
                                 std::span<const Displacement> order, int rp) {
  Displacement best{};
  float best_cost = std::numeric_limits<float>::infinity();
  for (const auto &d : order) {
    const float c = search_cost(target, atlas, x, d, rp);
    if (c < best_cost) {
      best_cost = c;
      best = d;
    }
  }
  return best;
}

Displacement search_correspondence(const Volume &target, const Volume &atlas, VoxelIndex x, const PatchSpec &spec) {
  const auto order = search_order(spec.search_radius);
  return detail::search_over(target, atlas, x, order, spec.patch_radius);
}

} // namespace longfuse
