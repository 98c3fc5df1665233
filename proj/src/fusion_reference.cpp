#include "fusion_detail.hpp"

namespace longfuse::reference {

FusionResult fuse(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg) {
  return detail::run_fusion(series, bank, cfg, true);
}

} // namespace longfuse::reference
