#include "longfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace longfuse {

double dice(const Volume &a, const Volume &b, int label) {
  if (!a.same_grid(b))
    throw GeometryError("dice: grids differ (" + to_string(a.dims()) + " vs " + to_string(b.dims()) + ")");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    const bool ia = a.label(v) == label, ib = b.label(v) == label;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

DiceReport dice_report(const Volume &a, const Volume &b, const std::set<int> &labels) {
  if (!a.same_grid(b))
    throw GeometryError("dice_report: grids differ");
  DiceReport r;
  for (int l : labels) {
    r.per_label[l] = dice(a, b, l);
    std::size_t na = 0, nb = 0;
    for (std::size_t v = 0; v < a.size(); ++v) {
      na += a.label(v) == l;
      nb += b.label(v) == l;
    }
    r.counts[l] = {na, nb};
  }
  double s = 0.0;
  for (const auto &[l, d] : r.per_label)
    s += d;
  r.mean = labels.empty() ? 1.0 : s / static_cast<double>(labels.size());
  return r;
}

double ReproducibilityMatrix::mean_off_diagonal() const {
  double s = 0.0;
  int c = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      s += at(i, j);
      ++c;
    }
  return c ? s / c : 1.0;
}

ReproducibilityMatrix reproducibility(std::span<const Volume> segs, const std::set<int> &labels) {
  if (segs.size() < 2)
    throw Error("reproducibility needs at least two segmentations, got " + std::to_string(segs.size()));
  ReproducibilityMatrix r;
  r.k = static_cast<int>(segs.size());
  r.values.assign(segs.size() * segs.size(), 1.0);
  for (int s = 0; s < r.k; ++s)
    for (int t = s + 1; t < r.k; ++t) {
      const double d = dice_report(segs[static_cast<std::size_t>(s)], segs[static_cast<std::size_t>(t)], labels).mean;
      r.values[static_cast<std::size_t>(s * r.k + t)] = d;
      r.values[static_cast<std::size_t>(t * r.k + s)] = d;
    }
  return r;
}

VolumeTrajectory volume_trajectory(std::span<const Volume> segs, const std::set<int> &labels, const Spacing &spacing,
                                   const std::map<std::string, std::set<int>> &groups) {
  const double vv = spacing.voxel_volume();
  const std::size_t k = segs.size();
  VolumeTrajectory out;
  for (int l : labels)
    out.per_label[l].assign(k, 0.0);
  out.total.assign(k, 0.0);
  for (std::size_t t = 0; t < k; ++t) {
    std::map<int, std::size_t> counts;
    for (std::size_t v = 0; v < segs[t].size(); ++v)
      ++counts[segs[t].label(v)];
    for (const auto &[l, c] : counts) {
      auto &row = out.per_label[l];
      row.resize(k, 0.0);
      row[t] = static_cast<double>(c) * vv;
    }
    out.total[t] = static_cast<double>(segs[t].size()) * vv;
  }
  for (const auto &[name, members] : groups) {
    auto &row = out.per_group[name];
    row.assign(k, 0.0);
    for (int l : members) {
      auto it = out.per_label.find(l);
      if (it == out.per_label.end())
        continue;
      for (std::size_t t = 0; t < k; ++t)
        row[t] += it->second[t];
    }
  }
  return out;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, WilcoxonMethod method) {
  if (x.size() != y.size())
    throw Error("wilcoxon: samples differ in length (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  if (x.size() < 5)
    throw Error("wilcoxon: needs at least 5 pairs, got " + std::to_string(x.size()));

  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i])
      d.push_back(x[i] - y[i]);

  WilcoxonResult r;
  r.n_used = static_cast<int>(d.size());
  r.method = method == WilcoxonMethod::automatic ? (d.size() <= 25 ? WilcoxonMethod::exact : WilcoxonMethod::normal)
                                                 : method;
  if (d.empty())
    return r;

  // Doubled midranks keep every rank an integer.
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<int> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
      ++j;
    const int r2 = static_cast<int>(i + 1 + j + 1);
    for (std::size_t a = i; a <= j; ++a)
      rank2[order[a]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  int w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0)
      w2 += rank2[i];
  r.w_plus = w2 / 2.0;

  if (r.method == WilcoxonMethod::exact) {
    const int total2 = std::accumulate(rank2.begin(), rank2.end(), 0);
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int rk : rank2) {
      for (int s = reach; s >= 0; --s)
        count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
      reach += rk;
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total2; ++s) {
      if (s <= w2)
        lower += count[static_cast<std::size_t>(s)];
      if (s >= w2)
        upper += count[static_cast<std::size_t>(s)];
    }
    r.p = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) {
    r.p = 1.0;
    return r;
  }
  const double sd = std::sqrt(var);
  const double lower = normal_cdf((r.w_plus - mu + 0.5) / sd);
  const double upper = 1.0 - normal_cdf((r.w_plus - mu - 0.5) / sd);
  r.p = std::min(1.0, 2.0 * std::min(lower, upper));
  return r;
}

double mean(std::span<const double> x) {
  if (x.empty())
    throw Error("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double cohens_d(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2)
    throw Error("cohens_d: each sample needs at least 2 values");
  const double mx = mean(x), my = mean(y);
  double sx = 0.0, sy = 0.0;
  for (double v : x)
    sx += (v - mx) * (v - mx);
  for (double v : y)
    sy += (v - my) * (v - my);
  const double pooled = (sx + sy) / static_cast<double>(x.size() + y.size() - 2);
  if (!(pooled > 0.0))
    throw UndefinedEffectSizeError("cohens_d: pooled standard deviation is zero");
  return (mx - my) / std::sqrt(pooled);
}

} // namespace longfuse
