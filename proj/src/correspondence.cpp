#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "longfuse/patch.hpp"
#include "patch_detail.hpp"

namespace longfuse {
namespace {

struct Box {
  int x0, x1, y0, y1, z0, z1; // inclusive
  bool empty() const { return x0 > x1 || y0 > y1 || z0 > z1; }
};

void check_inputs(const Volume &reference, const Volume &atlas, const PatchSpec &spec,
                  std::span<const std::uint8_t> need) {
  spec.validate();
  if (!reference.same_grid(atlas))
    throw GeometryError("correspondence search: atlas grid " + to_string(atlas.dims()) +
                        " differs from reference grid " + to_string(reference.dims()));
  if (!need.empty() && need.size() != reference.size())
    throw GeometryError("correspondence search: voxel mask length does not match the volume");
}

bool needed(std::span<const std::uint8_t> need, std::size_t v) { return need.empty() || need[v] != 0; }

// Box-sum search for output planes [z0, z1] of the interior box. Every
// voxel's cost is accumulated row, plane, volume in the same order as
// search_cost, so results match the per-voxel search bit for bit.
void search_slab(const Volume &ref, const Volume &atlas, const Box &box, int z0, int z1, int rp,
                 std::span<const Displacement> order, std::span<const std::uint8_t> need, CorrespondenceMap &out) {
  const int W = box.x1 - box.x0 + 1;
  const int H = box.y1 - box.y0 + 1;
  const int D = z1 - z0 + 1;
  const int w = 2 * rp + 1;
  const int rowlen = W + 2 * rp;
  const std::size_t plane = static_cast<std::size_t>(W) * static_cast<std::size_t>(H);

  std::vector<float> diff(static_cast<std::size_t>(rowlen));
  std::vector<float> sx(static_cast<std::size_t>(H + 2 * rp) * static_cast<std::size_t>(W));
  std::vector<float> sy(static_cast<std::size_t>(D + 2 * rp) * plane);
  std::vector<float> total(plane);
  std::vector<float> best(static_cast<std::size_t>(D) * plane, std::numeric_limits<float>::infinity());
  std::vector<std::uint16_t> best_idx(best.size(), 0);

  const float *R = ref.data().data();
  const float *I = atlas.data().data();

  for (std::size_t di = 0; di < order.size(); ++di) {
    const Displacement d = order[di];
    for (int pzi = 0; pzi < D + 2 * rp; ++pzi) {
      const int pz = z0 - rp + pzi;
      for (int ryi = 0; ryi < H + 2 * rp; ++ryi) {
        const int ry = box.y0 - rp + ryi;
        const float *r = R + ref.index(box.x0 - rp, ry, pz);
        const float *a = I + atlas.index(box.x0 - rp + d.x, ry + d.y, pz + d.z);
        for (int c = 0; c < rowlen; ++c)
          diff[static_cast<std::size_t>(c)] = std::abs(r[c] - a[c]);
        float *srow = sx.data() + static_cast<std::size_t>(ryi) * static_cast<std::size_t>(W);
        std::fill(srow, srow + W, 0.0f);
        for (int ox = 0; ox < w; ++ox) {
          const float *dp = diff.data() + ox;
          for (int xi = 0; xi < W; ++xi)
            srow[xi] += dp[xi];
        }
      }
      float *splane = sy.data() + static_cast<std::size_t>(pzi) * plane;
      for (int yi = 0; yi < H; ++yi) {
        float *dst = splane + static_cast<std::size_t>(yi) * static_cast<std::size_t>(W);
        std::fill(dst, dst + W, 0.0f);
        for (int oy = 0; oy < w; ++oy) {
          const float *src = sx.data() + static_cast<std::size_t>(yi + oy) * static_cast<std::size_t>(W);
          for (int xi = 0; xi < W; ++xi)
            dst[xi] += src[xi];
        }
      }
    }
    for (int zi = 0; zi < D; ++zi) {
      std::fill(total.begin(), total.end(), 0.0f);
      for (int oz = 0; oz < w; ++oz) {
        const float *src = sy.data() + static_cast<std::size_t>(zi + oz) * plane;
        for (std::size_t p = 0; p < plane; ++p)
          total[p] += src[p];
      }
      float *b = best.data() + static_cast<std::size_t>(zi) * plane;
      std::uint16_t *bi = best_idx.data() + static_cast<std::size_t>(zi) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        if (total[p] < b[p]) {
          b[p] = total[p];
          bi[p] = static_cast<std::uint16_t>(di);
        }
      }
    }
  }

  for (int zi = 0; zi < D; ++zi)
    for (int yi = 0; yi < H; ++yi)
      for (int xi = 0; xi < W; ++xi) {
        const std::size_t v = ref.index(box.x0 + xi, box.y0 + yi, z0 + zi);
        if (needed(need, v))
          out[v] = order[best_idx[static_cast<std::size_t>(zi) * plane + static_cast<std::size_t>(yi) * W + xi]];
      }
}

} // namespace

CorrespondenceMap compute_correspondence_map(const Volume &reference, const Volume &atlas, const PatchSpec &spec,
                                             std::span<const std::uint8_t> need, int workers) {
  check_inputs(reference, atlas, spec, need);
  workers = std::max(workers, 1);
  const Dims dims = reference.dims();
  const int rp = spec.patch_radius;
  const int margin = spec.patch_radius + spec.search_radius;
  const auto order = search_order(spec.search_radius);
  CorrespondenceMap out(dims);

  Box box{margin, dims.x - 1 - margin, margin, dims.y - 1 - margin, margin, dims.z - 1 - margin};
  auto interior = [&](const VoxelIndex &v) {
    return !box.empty() && v.x >= box.x0 && v.x <= box.x1 && v.y >= box.y0 && v.y <= box.y1 && v.z >= box.z0 &&
           v.z <= box.z1;
  };

  std::vector<std::size_t> border;
  int zfirst = std::numeric_limits<int>::max();
  int zlast = std::numeric_limits<int>::min();
  for (std::size_t v = 0; v < reference.size(); ++v) {
    if (!needed(need, v))
      continue;
    const VoxelIndex c = reference.coord(v);
    if (interior(c)) {
      zfirst = std::min(zfirst, c.z);
      zlast = std::max(zlast, c.z);
    } else {
      border.push_back(v);
    }
  }

  const auto nborder = static_cast<std::ptrdiff_t>(border.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 64)
  for (std::ptrdiff_t b = 0; b < nborder; ++b) {
    const std::size_t v = border[static_cast<std::size_t>(b)];
    out[v] = detail::search_over(reference, atlas, reference.coord(v), order, rp);
  }

  if (zfirst <= zlast) {
    const int planes = zlast - zfirst + 1;
    const int nslabs = workers == 1 ? 1 : std::min(planes, 2 * workers);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (int s = 0; s < nslabs; ++s) {
      const int z0 = zfirst + static_cast<int>(static_cast<long>(planes) * s / nslabs);
      const int z1 = zfirst + static_cast<int>(static_cast<long>(planes) * (s + 1) / nslabs) - 1;
      if (z0 <= z1)
        search_slab(reference, atlas, box, z0, z1, rp, order, need, out);
    }
  }
  return out;
}

CorrespondenceMap reference::compute_correspondence_map(const Volume &reference, const Volume &atlas,
                                                        const PatchSpec &spec, std::span<const std::uint8_t> need) {
  check_inputs(reference, atlas, spec, need);
  const auto order = search_order(spec.search_radius);
  CorrespondenceMap out(reference.dims());
  for (std::size_t v = 0; v < reference.size(); ++v) {
    if (needed(need, v))
      out[v] = detail::search_over(reference, atlas, reference.coord(v), order, spec.patch_radius);
  }
  return out;
}

} // namespace longfuse
