#pragma once

#include <span>

#include "longfuse/patch.hpp"

namespace longfuse::detail {

/// search_correspondence with a precomputed search_order().
Displacement search_over(const Volume &target, const Volume &atlas, VoxelIndex x,
                         std::span<const Displacement> order, int patch_radius);

} // namespace longfuse::detail
