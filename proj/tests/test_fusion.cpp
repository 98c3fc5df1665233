#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>

#include "longfuse/fusion.hpp"
#include "longfuse/metrics.hpp"
#include "test_support.hpp"

using namespace longfuse;

namespace {

bool same_bits(const Volume &a, const Volume &b) {
  return a.size() == b.size() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

bool same_segmentations(const FusionResult &a, const FusionResult &b) {
  if (a.time_points.size() != b.time_points.size())
    return false;
  for (std::size_t t = 0; t < a.time_points.size(); ++t)
    if (!same_bits(a.time_points[t].segmentation, b.time_points[t].segmentation))
      return false;
  return true;
}

FusionConfig config(FusionMode mode) {
  FusionConfig c;
  c.mode = mode;
  c.patch = {1, 1};
  return c;
}

} // namespace

TEST_CASE("weighted vote examples") {
  auto r = weighted_vote(std::vector<int>{1, 2}, std::vector<double>{0.6, 0.4});
  CHECK(r.label == 1);
  REQUIRE(r.scores.size() == 2);
  CHECK(r.scores[0] == std::pair<int, double>{1, 0.6});
  CHECK(r.scores[1] == std::pair<int, double>{2, 0.4});

  r = weighted_vote(std::vector<int>{4, 4, 4}, std::vector<double>{2.0, -0.5, -0.5});
  CHECK(r.label == 4);
  CHECK(r.scores[0].second == 1.0);

  CHECK(weighted_vote(std::vector<int>{5, 3}, std::vector<double>{0.5, 0.5}).label == 3);
  CHECK_THROWS_AS(weighted_vote(std::vector<int>{1}, std::vector<double>{}), Error);
}

TEST_CASE("voxel partition examples") {
  CHECK(plan_voxel_partition(Dims{16, 16, 16}, 1).size() == 1);
  const auto blocks = plan_voxel_partition(Dims{16, 16, 16}, 4);
  REQUIRE(blocks.size() == 4);
  std::size_t lo = blocks[0].size(), hi = blocks[0].size();
  for (const auto &b : blocks) {
    lo = std::min(lo, b.size());
    hi = std::max(hi, b.size());
  }
  CHECK(hi <= 2 * lo);
}

TEST_CASE("property: voxel blocks are disjoint and cover every index") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t count = rng() % 5000;
    const int workers = 1 + static_cast<int>(rng() % 40);
    const auto blocks = plan_voxel_partition(count, workers);
    std::vector<int> hits(count, 0);
    std::size_t expect = 0;
    for (const auto &b : blocks) {
      CHECK(b.begin == expect);
      expect = b.end;
      for (std::size_t i = b.begin; i < b.end; ++i)
        ++hits[i];
    }
    CHECK(expect == count);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK(blocks.size() <= static_cast<std::size_t>(workers));
  }
}

TEST_CASE("perfect atlases reproduce the truth in every mode") {
  PhantomSpec s = test::small_spec(14, 2, 3, 3);
  s.atlas_label_error_rate = 0.0;
  s.intensity.sigma = 0.0;
  s.atlas_intensity_sigma = 0.0;
  const Phantom ph = generate_phantom(s);
  for (FusionMode mode : {FusionMode::jlf, FusionMode::jlf_multi, FusionMode::fourd_jlf}) {
    const auto r = fuse(ph.series, ph.bank, config(mode));
    for (int t = 0; t < 2; ++t)
      CHECK(same_bits(r.time_points[static_cast<std::size_t>(t)].segmentation, ph.truth[static_cast<std::size_t>(t)]));
  }
}

TEST_CASE("with one time point all modes agree voxel for voxel") {
  const Phantom ph = generate_phantom(test::small_spec(16, 1, 4, 4));
  const auto jlf = fuse(ph.series, ph.bank, config(FusionMode::jlf));
  CHECK(same_segmentations(jlf, fuse(ph.series, ph.bank, config(FusionMode::jlf_multi))));
  CHECK(same_segmentations(jlf, fuse(ph.series, ph.bank, config(FusionMode::fourd_jlf))));
}

TEST_CASE("an adversarial noise atlas is outvoted") {
  PhantomSpec s = test::small_spec(16, 1, 5, 5);
  s.atlas_label_error_rate = 0.2;
  Phantom ph = generate_phantom(s);
  // Replace atlas 0 with pure noise: random labels, random intensities.
  std::mt19937_64 rng(5);
  std::vector<AtlasPair> pairs = ph.bank.pairs();
  std::vector<float> labels(ph.truth[0].size());
  for (auto &l : labels)
    l = static_cast<float>(rng() % 5);
  pairs[0] = {test::random_intensity(s.dims, rng), Volume(s.dims, s.spacing, VolumeKind::label, labels)};
  ph.bank = AtlasBank(s.n, 1, pairs);

  const std::set<int> fg{1, 2, 3, 4};
  const double adversary = dice_report(ph.bank.labels(0), ph.truth[0], fg).mean;
  // Majority vote baseline, ties to the smallest label.
  std::vector<float> mv(labels.size());
  for (std::size_t v = 0; v < mv.size(); ++v) {
    std::map<int, int> count;
    for (int i = 0; i < ph.bank.m(); ++i)
      ++count[ph.bank.labels(i).label(v)];
    int best = -1, votes = -1;
    for (const auto &[l, c] : count)
      if (c > votes) {
        best = l;
        votes = c;
      }
    mv[v] = static_cast<float>(best);
  }
  const double majority = dice_report(Volume(s.dims, s.spacing, VolumeKind::label, mv), ph.truth[0], fg).mean;

  for (FusionMode mode : {FusionMode::jlf, FusionMode::fourd_jlf}) {
    FusionConfig cfg = config(mode);
    cfg.patch = {2, 1};
    const auto r = fuse(ph.series, ph.bank, cfg);
    const double fused = dice_report(r.time_points[0].segmentation, ph.truth[0], fg).mean;
    MESSAGE("adversary " << adversary << ", majority " << majority << ", fused " << fused);
    CHECK(fused > adversary);
    CHECK(fused > majority);
  }
}

TEST_CASE("parallel fusion equals the serial exhaustive reference bit for bit") {
  const Phantom ph = generate_phantom(test::small_spec(14, 2, 3, 6));
  for (FusionMode mode : {FusionMode::jlf, FusionMode::jlf_multi, FusionMode::fourd_jlf}) {
    FusionConfig cfg = config(mode);
    cfg.workers = 3;
    CHECK(same_segmentations(fuse(ph.series, ph.bank, cfg), reference::fuse(ph.series, ph.bank, cfg)));
  }
}

TEST_CASE("worker count does not change the output") {
  const Phantom ph = generate_phantom(test::small_spec(16, 2, 3, 7));
  FusionConfig cfg = config(FusionMode::fourd_jlf);
  cfg.workers = 1;
  const auto one = fuse(ph.series, ph.bank, cfg);
  for (int w : {2, 5, 8}) {
    cfg.workers = w;
    CHECK(same_segmentations(one, fuse(ph.series, ph.bank, cfg)));
  }
}

TEST_CASE("the consensus shortcut never changes the output") {
  const Phantom ph = generate_phantom(test::small_spec(14, 2, 3, 8));
  for (FusionMode mode : {FusionMode::jlf, FusionMode::jlf_multi, FusionMode::fourd_jlf}) {
    FusionConfig on = config(mode), off = config(mode);
    off.consensus_shortcut = false;
    const auto a = fuse(ph.series, ph.bank, on);
    const auto b = fuse(ph.series, ph.bank, off);
    CHECK(same_segmentations(a, b));
    CHECK(a.time_points[0].stats.shortcut_voxels > 0);
    CHECK(b.time_points[0].stats.shortcut_voxels == 0);
  }
}

TEST_CASE("posteriors are probabilities whose argmax is the segmentation") {
  const Phantom ph = generate_phantom(test::small_spec(12, 2, 3, 9));
  FusionConfig cfg = config(FusionMode::fourd_jlf);
  cfg.emit_posteriors = true;
  cfg.mask_policy = MaskPolicy::full;
  const auto r = fuse(ph.series, ph.bank, cfg);
  for (const auto &tp : r.time_points) {
    REQUIRE(!tp.posteriors.empty());
    for (std::size_t v = 0; v < tp.segmentation.size(); ++v) {
      double sum = 0.0;
      int arg = -1;
      float best = -1.0f;
      for (const auto &[label, post] : tp.posteriors) {
        const float p = post.data()[v];
        CHECK(p >= 0.0f);
        sum += p;
        if (p > best) {
          best = p;
          arg = label;
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
      CHECK(arg == tp.segmentation.label(v));
    }
  }
}

TEST_CASE("output labels come from the atlases voting at that voxel") {
  const Phantom ph = generate_phantom(test::small_spec(12, 2, 3, 10));
  for (FusionMode mode : {FusionMode::jlf, FusionMode::fourd_jlf}) {
    const auto r = fuse(ph.series, ph.bank, config(mode));
    const auto mask = processing_mask(ph.bank, config(mode));
    for (int t = 0; t < 2; ++t) {
      const auto parts = participating_atlases(ph.bank, mode, t);
      const Volume &seg = r.time_points[static_cast<std::size_t>(t)].segmentation;
      for (std::size_t v = 0; v < seg.size(); ++v) {
        if (!mask[v]) {
          CHECK(seg.label(v) == 0);
          continue;
        }
        const bool found = std::any_of(parts.begin(), parts.end(),
                                       [&](int i) { return ph.bank.labels(i).label(v) == seg.label(v); });
        CHECK(found);
      }
    }
  }
}

TEST_CASE("mask policies") {
  const Phantom ph = generate_phantom(test::small_spec(12, 1, 3, 11));
  FusionConfig cfg = config(FusionMode::jlf);
  cfg.mask_policy = MaskPolicy::explicit_mask;
  CHECK_THROWS_AS(fuse(ph.series, ph.bank, cfg), Error);

  Volume mask = Volume::filled(ph.truth[0].dims(), {}, VolumeKind::label, 0.0f);
  for (int z = 4; z < 8; ++z)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x)
        mask.at(x, y, z) = 1.0f;
  cfg.mask = mask;
  const auto r = fuse(ph.series, ph.bank, cfg);
  const auto &seg = r.time_points[0].segmentation;
  for (std::size_t v = 0; v < seg.size(); ++v)
    if (mask.data()[v] == 0.0f)
      CHECK(seg.label(v) == 0);
  CHECK(r.time_points[0].stats.masked_out == 12 * 12 * 8);

  cfg.mask = Volume::filled({3, 3, 3}, {}, VolumeKind::label, 1.0f);
  CHECK_THROWS_AS(fuse(ph.series, ph.bank, cfg), GeometryError);

  // Union of nonzero atlas labels: everything outside is background.
  const auto um = processing_mask(ph.bank, config(FusionMode::jlf));
  for (std::size_t v = 0; v < um.size(); ++v) {
    bool any = false;
    for (int i = 0; i < ph.bank.m(); ++i)
      any = any || ph.bank.labels(i).label(v) != 0;
    CHECK(static_cast<bool>(um[v]) == any);
  }
}

TEST_CASE("solver failures name the voxel and time point") {
  const Dims d{3, 3, 3};
  LongitudinalSeries series;
  series.targets.push_back(Volume::filled(d, {}, VolumeKind::intensity, 0.5f));
  // Two perfect-intensity atlases that disagree everywhere: M = 0, alpha = 0.
  std::vector<AtlasPair> pairs{test::pair_filled(d, 0.5f, 1), test::pair_filled(d, 0.5f, 2)};
  const AtlasBank bank(2, 1, pairs);
  FusionConfig cfg = config(FusionMode::jlf);
  cfg.alpha = 0.0;
  for (int workers : {1, 2}) {
    cfg.workers = workers;
    CHECK_THROWS_WITH_AS(fuse(series, bank, cfg), doctest::Contains("voxel ("), FusionError);
    CHECK_THROWS_WITH_AS(fuse(series, bank, cfg), doctest::Contains("time 0"), FusionError);
  }
  CHECK_THROWS_AS(reference::fuse(series, bank, cfg), FusionError);
}

TEST_CASE("config validation") {
  const Phantom ph = generate_phantom(test::small_spec(12, 1, 2, 12));
  FusionConfig cfg;
  cfg.beta = -1.0;
  CHECK_THROWS_AS(fuse(ph.series, ph.bank, cfg), Error);
  cfg = FusionConfig{};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(fuse(ph.series, ph.bank, cfg), Error);
  cfg = FusionConfig{};
  cfg.workers = 0;
  CHECK_THROWS_AS(fuse(ph.series, ph.bank, cfg), Error);
}
