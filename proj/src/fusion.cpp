#include "longfuse/fusion.hpp"

#include <omp.h>

#include <algorithm>
#include <set>

#include "fusion_detail.hpp"
#include "longfuse/solver.hpp"

namespace longfuse {

const char *to_string(MaskPolicy policy) {
  switch (policy) {
  case MaskPolicy::union_nonzero: return "union_nonzero";
  case MaskPolicy::explicit_mask: return "explicit_mask";
  case MaskPolicy::full: return "full";
  }
  return "?";
}

void FusionConfig::validate() const {
  patch.validate();
  if (!(alpha >= 0.0))
    throw Error("alpha must be >= 0");
  if (!(beta >= 0.0))
    throw Error("beta must be >= 0");
  if (!(epsilon > 0.0))
    throw Error("epsilon must be > 0");
  if (workers < 1)
    throw Error("workers must be >= 1");
  if (mask_policy == MaskPolicy::explicit_mask && !mask)
    throw Error("mask policy explicit_mask needs a mask volume");
}

VoteResult weighted_vote(std::span<const int> labels, std::span<const double> weights) {
  if (labels.size() != weights.size())
    throw Error("weighted_vote: " + std::to_string(labels.size()) + " labels but " + std::to_string(weights.size()) +
                " weights");
  VoteResult out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find_if(out.scores.begin(), out.scores.end(), [&](const auto &s) { return s.first == labels[i]; });
    if (it == out.scores.end())
      out.scores.emplace_back(labels[i], weights[i]);
    else
      it->second += weights[i];
  }
  std::sort(out.scores.begin(), out.scores.end());
  bool first = true;
  double best = 0.0;
  for (const auto &[label, score] : out.scores) {
    if (first || score > best) {
      best = score;
      out.label = label;
      first = false;
    }
  }
  return out;
}

std::vector<VoxelBlock> plan_voxel_partition(std::size_t count, int workers) {
  const auto w = static_cast<std::size_t>(std::max(workers, 1));
  const std::size_t blocks = std::max<std::size_t>(1, std::min(w, count));
  std::vector<VoxelBlock> out;
  out.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b)
    out.push_back({count * b / blocks, count * (b + 1) / blocks});
  return out;
}

std::vector<std::uint8_t> processing_mask(const AtlasBank &bank, const FusionConfig &cfg) {
  const std::size_t N = bank.image(0).size();
  std::vector<std::uint8_t> mask(N, 0);
  switch (cfg.mask_policy) {
  case MaskPolicy::full:
    std::fill(mask.begin(), mask.end(), 1);
    break;
  case MaskPolicy::explicit_mask:
    if (!cfg.mask || !cfg.mask->same_grid(bank.image(0)))
      throw GeometryError("explicit mask is missing or not on the atlas grid");
    for (std::size_t v = 0; v < N; ++v)
      mask[v] = cfg.mask->data()[v] != 0.0f;
    break;
  case MaskPolicy::union_nonzero:
    for (int i = 0; i < bank.m(); ++i) {
      const auto lab = bank.labels(i).data();
      for (std::size_t v = 0; v < N; ++v)
        mask[v] |= lab[v] != 0.0f;
    }
    break;
  }
  return mask;
}

namespace detail {
namespace {

struct Job {
  const FusionContext &ctx;
  const FusionConfig &cfg;
  int t;
  std::span<const std::size_t> active;
  TimePointResult &out;
};

// Returns whether the solver fell back.
bool fuse_voxel(const Job &job, std::size_t v, BuildWorkspace &ws, std::vector<int> &votes) {
  const Volume &ref = job.ctx.series.target(job.t);
  const VoxelIndex x = ref.coord(v);
  build_matrix_into(job.ctx, job.cfg.mode, job.t, x, job.cfg.temporal(), ws);
  const WeightSolution sol = solve_weights(ws.gram, job.cfg.alpha);
  votes.resize(ws.atlases.size());
  for (std::size_t r = 0; r < ws.atlases.size(); ++r)
    votes[r] = job.ctx.bank.labels(ws.atlases[r]).label(v);
  const VoteResult vote =
      weighted_vote(votes, std::span<const double>(sol.weights.data(), static_cast<std::size_t>(sol.weights.size())));
  job.out.segmentation.data()[v] = static_cast<float>(vote.label);

  if (job.cfg.emit_posteriors) {
    double total = 0.0;
    for (const auto &s : vote.scores)
      total += std::max(s.second, 0.0);
    for (const auto &[label, score] : vote.scores) {
      auto it = job.out.posteriors.find(label);
      if (it != job.out.posteriors.end() && total > 0.0)
        it->second.data()[v] = static_cast<float>(std::max(score, 0.0) / total);
    }
  }
  return sol.used_fallback;
}

std::string voxel_error(const Job &job, std::size_t v, const std::exception &e) {
  return "fusion failed at voxel " + to_string(job.ctx.series.target(job.t).coord(v)) + ", time " +
         std::to_string(job.t) + ": " + e.what();
}

} // namespace

FusionResult run_fusion(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg,
                        bool serial_reference) {
  cfg.validate();
  bank.check_against(series);
  const Volume &grid = series.target(0);
  const std::size_t N = grid.size();
  const int k = series.k();
  const int workers = serial_reference ? 1 : cfg.workers;

  const std::vector<std::uint8_t> mask = processing_mask(bank, cfg);

  std::set<int> label_set{0};
  if (cfg.emit_posteriors) {
    for (int i = 0; i < bank.m(); ++i)
      for (float l : bank.labels(i).data())
        label_set.insert(static_cast<int>(l));
  }

  CorrespondenceSet maps(k, bank.m());
  const FusionContext ctx{series, bank, maps, cfg.patch};

  FusionResult result;
  for (int t = 0; t < k; ++t) {
    const std::vector<int> parts = participating_atlases(bank, cfg.mode, t);

    TimePointResult tp;
    tp.segmentation = Volume::filled(grid.dims(), grid.spacing(), VolumeKind::label, 0.0f);
    tp.segmentation.set_affine(grid.affine());
    if (cfg.emit_posteriors) {
      for (int l : label_set)
        tp.posteriors.emplace(l, Volume::filled(grid.dims(), grid.spacing(), VolumeKind::intensity, 0.0f));
    }

    // Masking and the consensus shortcut.
    std::vector<std::size_t> active;
    std::vector<std::uint8_t> need(N, 0);
    for (std::size_t v = 0; v < N; ++v) {
      if (!mask[v]) {
        ++tp.stats.masked_out;
        if (cfg.emit_posteriors)
          tp.posteriors.at(0).data()[v] = 1.0f;
        continue;
      }
      const int first = bank.labels(parts.front()).label(v);
      const bool unanimous = std::all_of(parts.begin(), parts.end(),
                                         [&](int i) { return bank.labels(i).label(v) == first; });
      if (cfg.consensus_shortcut && unanimous) {
        ++tp.stats.shortcut_voxels;
        tp.segmentation.data()[v] = static_cast<float>(first);
        if (cfg.emit_posteriors)
          tp.posteriors.at(first).data()[v] = 1.0f;
        continue;
      }
      active.push_back(v);
      need[v] = 1;
    }

    // Correspondence maps this time point reads. Own-time maps are shared by
    // all time points; their active set does not depend on t.
    const bool own_time = cfg.mode == FusionMode::fourd_jlf || cfg.mode == FusionMode::jlf_multi_own_time;
    for (int i : parts) {
      const int ref_time = own_time ? bank.time_of(i) : t;
      if (maps.has(ref_time, i))
        continue;
      const Volume &reference = series.target(ref_time);
      if (serial_reference)
        maps.set(ref_time, i, reference::compute_correspondence_map(reference, bank.image(i), cfg.patch, need));
      else
        maps.set(ref_time, i, compute_correspondence_map(reference, bank.image(i), cfg.patch, need, workers));
    }

    Job job{ctx, cfg, t, active, tp};
    if (serial_reference) {
      BuildWorkspace ws;
      std::vector<int> votes;
      for (std::size_t v : active) {
        try {
          tp.stats.solver_fallbacks += fuse_voxel(job, v, ws, votes) ? 1 : 0;
        } catch (const std::exception &e) {
          throw FusionError(voxel_error(job, v, e));
        }
      }
    } else {
      const auto blocks = plan_voxel_partition(active.size(), workers);
      std::vector<std::size_t> fallbacks(blocks.size(), 0);
      std::vector<std::string> errors(blocks.size());
      const auto nblocks = static_cast<std::ptrdiff_t>(blocks.size());
#pragma omp parallel for num_threads(workers) schedule(static, 1)
      for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        BuildWorkspace ws;
        std::vector<int> votes;
        const auto &blk = blocks[static_cast<std::size_t>(b)];
        for (std::size_t a = blk.begin; a < blk.end; ++a) {
          const std::size_t v = active[a];
          try {
            fallbacks[static_cast<std::size_t>(b)] += fuse_voxel(job, v, ws, votes) ? 1 : 0;
          } catch (const std::exception &e) {
            errors[static_cast<std::size_t>(b)] = voxel_error(job, v, e);
            break;
          }
        }
      }
      for (const auto &e : errors)
        if (!e.empty())
          throw FusionError(e);
      for (std::size_t f : fallbacks)
        tp.stats.solver_fallbacks += f;
    }
    tp.stats.solved_voxels = active.size();
    result.time_points.push_back(std::move(tp));
  }
  return result;
}

} // namespace detail

FusionResult fuse(const LongitudinalSeries &series, const AtlasBank &bank, const FusionConfig &cfg) {
  return detail::run_fusion(series, bank, cfg, false);
}

} // namespace longfuse
