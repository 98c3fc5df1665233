#include "longfuse/normalize.hpp"

#include <algorithm>
#include <cmath>

namespace longfuse {

double percentile(std::span<const float> values, double pct) {
  if (values.empty())
    throw Error("percentile of an empty volume");
  std::vector<float> v(values.begin(), values.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  double b = a;
  if (hi != lo)
    b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

Volume normalize_intensity(const Volume &v) {
  if (v.kind() != VolumeKind::intensity)
    throw Error("normalize_intensity expects an intensity volume");
  const double lo = percentile(v.data(), 1.0);
  const double hi = percentile(v.data(), 99.0);
  std::vector<float> out(v.size(), 0.0f);
  if (hi > lo) {
    const double scale = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < v.size(); ++i)
      out[i] = static_cast<float>(std::clamp((v.data()[i] - lo) * scale, 0.0, 1.0));
  }
  Volume r(v.dims(), v.spacing(), VolumeKind::intensity, std::move(out));
  r.set_affine(v.affine());
  return r;
}

LongitudinalSeries normalize_series(const LongitudinalSeries &series) {
  LongitudinalSeries out;
  out.subject_id = series.subject_id;
  for (const auto &t : series.targets)
    out.targets.push_back(normalize_intensity(t));
  return out;
}

AtlasBank normalize_bank(const AtlasBank &bank) {
  std::vector<AtlasPair> pairs;
  pairs.reserve(bank.pairs().size());
  for (const auto &p : bank.pairs())
    pairs.push_back({normalize_intensity(p.image), p.labels});
  return AtlasBank(bank.n(), bank.k(), std::move(pairs));
}

} // namespace longfuse
