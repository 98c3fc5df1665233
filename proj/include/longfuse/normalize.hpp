#pragma once

#include "longfuse/volume.hpp"

namespace longfuse {

/// Percentile of the voxel values, linearly interpolated between order statistics.
double percentile(std::span<const float> values, double pct);

/// Maps the 1st percentile to 0 and the 99th to 1, then clamps to [0,1].
/// Constant volumes become all zeros.
Volume normalize_intensity(const Volume &v);

/// normalize_intensity applied to every target and every atlas image.
LongitudinalSeries normalize_series(const LongitudinalSeries &series);
AtlasBank normalize_bank(const AtlasBank &bank);

} // namespace longfuse
