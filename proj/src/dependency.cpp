#include "longfuse/dependency.hpp"

#include <algorithm>
#include <cmath>

namespace longfuse {

const char *to_string(FusionMode mode) {
  switch (mode) {
  case FusionMode::jlf: return "jlf";
  case FusionMode::jlf_multi: return "jlf-multi";
  case FusionMode::fourd_jlf: return "4djlf";
  case FusionMode::jlf_multi_own_time: return "jlf-multi-own-time";
  }
  return "?";
}

std::optional<FusionMode> parse_fusion_mode(std::string_view name) {
  if (name == "jlf")
    return FusionMode::jlf;
  if (name == "jlf-multi" || name == "jlf_multi")
    return FusionMode::jlf_multi;
  if (name == "4djlf" || name == "fourd_jlf")
    return FusionMode::fourd_jlf;
  if (name == "jlf-multi-own-time")
    return FusionMode::jlf_multi_own_time;
  return std::nullopt;
}

const CorrespondenceMap &CorrespondenceSet::get(int ref_time, int atlas) const {
  if (ref_time < 0 || ref_time >= k_ || atlas < 0 || atlas >= m_)
    throw Error("correspondence lookup out of range: time " + std::to_string(ref_time) + ", atlas " +
                std::to_string(atlas));
  const auto &m = maps_[slot(ref_time, atlas)];
  if (!m)
    throw Error("no correspondence map for atlas " + std::to_string(atlas) + " against time " +
                std::to_string(ref_time));
  return *m;
}

void residual_vector(const Volume &reference, const Volume &atlas_image, VoxelIndex x, Displacement d, int rp,
                     std::span<double> out) {
  const VoxelIndex c = displaced_center(atlas_image, x, d);
  std::size_t p = 0;
  for (int oz = -rp; oz <= rp; ++oz)
    for (int oy = -rp; oy <= rp; ++oy)
      for (int ox = -rp; ox <= rp; ++ox)
        out[p++] = std::abs(static_cast<double>(reference.at_clamped(x.x + ox, x.y + oy, x.z + oz)) -
                            static_cast<double>(atlas_image.at_clamped(c.x + ox, c.y + oy, c.z + oz)));
}

namespace {

void residual_into(const FusionContext &ctx, int t, int i, VoxelIndex x, ResidualReference against,
                   std::span<double> out) {
  const int ref_time = against == ResidualReference::target_time ? t : ctx.bank.time_of(i);
  const Volume &reference = ctx.series.target(ref_time);
  const Displacement d = ctx.maps.get(ref_time, i)[reference.index(x)];
  residual_vector(reference, ctx.bank.image(i), x, d, ctx.spec.patch_radius, out);
}

void patch_into(const Volume &v, VoxelIndex c, int rp, float *out) {
  for (int oz = -rp; oz <= rp; ++oz)
    for (int oy = -rp; oy <= rp; ++oy)
      for (int ox = -rp; ox <= rp; ++ox)
        *out++ = v.at_clamped(c.x + ox, c.y + oy, c.z + oz);
}

} // namespace

std::vector<double> residual_vector(const FusionContext &ctx, int t, int i, VoxelIndex x, ResidualReference against) {
  std::vector<double> out(static_cast<std::size_t>(ctx.spec.patch_size()));
  residual_into(ctx, t, i, x, against, out);
  return out;
}

void gram_matrix(std::span<const double> rows, int count, int length, Eigen::MatrixXd &out) {
  out.resize(count, count);
  const auto len = static_cast<std::size_t>(length);
  for (int i = 0; i < count; ++i) {
    const double *a = rows.data() + static_cast<std::size_t>(i) * len;
    for (int j = i; j < count; ++j) {
      const double *b = rows.data() + static_cast<std::size_t>(j) * len;
      double s = 0.0;
      for (std::size_t y = 0; y < len; ++y)
        s += a[y] * b[y];
      out(i, j) = s;
      out(j, i) = s;
    }
  }
}

double temporal_penalty_from(std::span<const float> own_target_patch, std::span<const float> current_target_patch,
                             std::span<const double> own_residuals, const TemporalParams &params) {
  double ratio_sum = 0.0;
  for (std::size_t y = 0; y < own_residuals.size(); ++y) {
    const double num =
        std::abs(static_cast<double>(own_target_patch[y]) - static_cast<double>(current_target_patch[y]));
    ratio_sum += num / std::max(own_residuals[y], params.epsilon);
  }
  return std::exp(std::min(params.beta * ratio_sum, kPenaltyExponentCap));
}

double temporal_penalty(const FusionContext &ctx, int t, int i, VoxelIndex x, const TemporalParams &params) {
  const int rp = ctx.spec.patch_radius;
  const int q = ctx.bank.time_of(i);
  const auto own = residual_vector(ctx, t, i, x, ResidualReference::own_time);
  const auto own_patch = extract_patch(ctx.series.target(q), x, rp);
  const auto cur_patch = extract_patch(ctx.series.target(t), x, rp);
  return temporal_penalty_from(own_patch, cur_patch, own, params);
}

std::vector<int> participating_atlases(const AtlasBank &bank, FusionMode mode, int t) {
  std::vector<int> out;
  const int begin = mode == FusionMode::jlf ? bank.block_begin(t) : 0;
  const int end = mode == FusionMode::jlf ? bank.block_end(t) : bank.m();
  for (int i = begin; i < end; ++i)
    out.push_back(i);
  return out;
}

void build_matrix_into(const FusionContext &ctx, FusionMode mode, int t, VoxelIndex x, const TemporalParams &params,
                       BuildWorkspace &ws) {
  const AtlasBank &bank = ctx.bank;
  const int rp = ctx.spec.patch_radius;
  const int P = ctx.spec.patch_size();
  const auto len = static_cast<std::size_t>(P);

  ws.atlases.clear();
  const int begin = mode == FusionMode::jlf ? bank.block_begin(t) : 0;
  const int end = mode == FusionMode::jlf ? bank.block_end(t) : bank.m();
  for (int i = begin; i < end; ++i)
    ws.atlases.push_back(i);
  const int count = static_cast<int>(ws.atlases.size());
  ws.residuals.resize(static_cast<std::size_t>(count) * len);

  const ResidualReference against = (mode == FusionMode::jlf || mode == FusionMode::jlf_multi)
                                         ? ResidualReference::target_time
                                         : ResidualReference::own_time;
  for (int r = 0; r < count; ++r)
    residual_into(ctx, t, ws.atlases[static_cast<std::size_t>(r)], x, against,
                  std::span<double>(ws.residuals.data() + static_cast<std::size_t>(r) * len, len));

  gram_matrix(ws.residuals, count, P, ws.gram);
  if (mode != FusionMode::fourd_jlf)
    return;

  const int k = ctx.series.k();
  ws.target_patches.resize(static_cast<std::size_t>(k) * len);
  for (int q = 0; q < k; ++q)
    patch_into(ctx.series.target(q), x, rp, ws.target_patches.data() + static_cast<std::size_t>(q) * len);

  const std::span<const float> current(ws.target_patches.data() + static_cast<std::size_t>(t) * len, len);
  ws.penalties.resize(static_cast<std::size_t>(count));
  for (int r = 0; r < count; ++r) {
    const int q = bank.time_of(ws.atlases[static_cast<std::size_t>(r)]);
    const std::span<const float> own(ws.target_patches.data() + static_cast<std::size_t>(q) * len, len);
    const std::span<const double> res(ws.residuals.data() + static_cast<std::size_t>(r) * len, len);
    ws.penalties[static_cast<std::size_t>(r)] = temporal_penalty_from(own, current, res, params);
  }
  for (int i = 0; i < count; ++i)
    for (int j = i; j < count; ++j) {
      const double v = (ws.penalties[static_cast<std::size_t>(i)] * ws.penalties[static_cast<std::size_t>(j)]) *
                       ws.gram(i, j);
      ws.gram(i, j) = v;
      ws.gram(j, i) = v;
    }
}

namespace {

DependencyMatrix build(const FusionContext &ctx, FusionMode mode, int t, VoxelIndex x, const TemporalParams &params) {
  BuildWorkspace ws;
  build_matrix_into(ctx, mode, t, x, params, ws);
  return {std::move(ws.gram), std::move(ws.atlases), t, x};
}

} // namespace

DependencyMatrix build_jlf_matrix(const FusionContext &ctx, int t, VoxelIndex x) {
  return build(ctx, FusionMode::jlf, t, x, {});
}

DependencyMatrix build_jlfmulti_matrix(const FusionContext &ctx, int t, VoxelIndex x) {
  return build(ctx, FusionMode::jlf_multi, t, x, {});
}

DependencyMatrix build_gamma_matrix(const FusionContext &ctx, VoxelIndex x) {
  return build(ctx, FusionMode::jlf_multi_own_time, 0, x, {});
}

DependencyMatrix build_4djlf_matrix(const FusionContext &ctx, int t, VoxelIndex x, const TemporalParams &params) {
  return build(ctx, FusionMode::fourd_jlf, t, x, params);
}

Eigen::MatrixXd phi_block(const Eigen::MatrixXd &gamma, int n, int k, int q, int r) {
  if (q < 0 || q >= k || r < 0 || r >= k)
    throw Error("phi_block: block index (" + std::to_string(q) + "," + std::to_string(r) + ") outside 0.." +
                std::to_string(k - 1));
  if (gamma.rows() != static_cast<Eigen::Index>(n) * k || gamma.cols() != gamma.rows())
    throw Error("phi_block: matrix is not (n*k) x (n*k)");
  return gamma.block(static_cast<Eigen::Index>(q) * n, static_cast<Eigen::Index>(r) * n, n, n);
}

} // namespace longfuse
