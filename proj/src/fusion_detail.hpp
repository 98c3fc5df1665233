#pragma once

#include "longfuse/fusion.hpp"

namespace longfuse::detail {

/// The fusion driver. With serial_reference, correspondence maps come from
/// the exhaustive per-voxel search and voxels are visited in raster order on
/// one thread.
FusionResult run_fusion(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg,
                        bool serial_reference);

} // namespace longfuse::detail
