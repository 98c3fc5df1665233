#include "cli/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "longfuse/metrics.hpp"

namespace longfuse::cli {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double> &v) { return v ? fmt(*v) : "NA"; }

const char *const kMetrics[] = {"repro", "dice_truth", "robust_dice"};

const std::map<FusionMode, double> &column(const SeedOutcome &s, const std::string &metric) {
  if (metric == "repro")
    return s.repro;
  if (metric == "dice_truth")
    return s.dice_truth;
  return s.robust_dice;
}

} // namespace

std::set<int> spec_labels(const PhantomSpec &spec) {
  std::set<int> out;
  for (const auto &s : spec.structures)
    if (s.label != 0)
      out.insert(s.label);
  return out;
}

std::pair<double, double> measure_reproducibility(const Phantom &ph, const std::set<int> &labels, FusionConfig cfg) {
  const FusionResult r = fuse(ph.series, ph.bank, cfg);
  std::vector<Volume> segs;
  double truth = 0.0;
  for (std::size_t t = 0; t < r.time_points.size(); ++t) {
    segs.push_back(r.time_points[t].segmentation);
    truth += dice_report(segs.back(), ph.truth[t], labels).mean;
  }
  truth /= static_cast<double>(segs.size());
  const double repro = segs.size() >= 2 ? reproducibility(segs, labels).mean_off_diagonal() : 1.0;
  return {repro, truth};
}

double measure_robustness(const Phantom &ph, const Phantom &outlier, const std::set<int> &labels, FusionConfig cfg) {
  const auto pairs = make_dummy_pairs(ph.series, outlier.series.target(0));
  double sum = 0.0;
  for (int t = 0; t < ph.series.k(); ++t) {
    const AtlasBank bank = make_dummy_bank(ph.bank, t, outlier.bank);
    const FusionResult r = fuse(pairs[static_cast<std::size_t>(t)], bank, cfg);
    sum += dice_report(r.time_points[0].segmentation, ph.truth[static_cast<std::size_t>(t)], labels).mean;
  }
  return sum / ph.series.k();
}

std::vector<ComparisonStat> compare_modes(const std::vector<SeedOutcome> &seeds, const std::vector<FusionMode> &modes) {
  std::vector<ComparisonStat> out;
  if (modes.size() < 2 || seeds.empty())
    return out;
  const FusionMode base =
      std::find(modes.begin(), modes.end(), FusionMode::jlf) != modes.end() ? FusionMode::jlf : modes.front();
  for (const std::string metric : kMetrics) {
    if (column(seeds.front(), metric).empty())
      continue;
    for (FusionMode mode : modes) {
      if (mode == base)
        continue;
      std::vector<double> a, b;
      for (const auto &s : seeds) {
        a.push_back(column(s, metric).at(mode));
        b.push_back(column(s, metric).at(base));
      }
      ComparisonStat c;
      c.metric = metric;
      c.mode = mode;
      c.baseline = base;
      c.n = static_cast<int>(a.size());
      c.mean_mode = mean(a);
      c.mean_baseline = mean(b);
      if (a.size() >= 5)
        c.wilcoxon_p = wilcoxon_signed_rank(a, b).p;
      if (a.size() >= 2) {
        try {
          c.cohens_d = cohens_d(a, b);
        } catch (const UndefinedEffectSizeError &) {
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentOptions &opts, const Progress &progress) {
  if (opts.modes.empty())
    throw Error("experiment needs at least one mode");
  if (opts.seeds < 1)
    throw Error("experiment needs at least one seed");
  opts.base.validate();
  const std::set<int> labels = spec_labels(opts.base);

  ExperimentReport report;
  for (int s = 0; s < opts.seeds; ++s) {
    PhantomSpec spec = opts.base;
    spec.seed = opts.first_seed + static_cast<std::uint64_t>(s);
    const Phantom ph = generate_phantom(spec);
    std::optional<Phantom> outlier;
    if (opts.robustness)
      outlier = generate_phantom(outlier_spec(spec, opts.outlier_scale));

    SeedOutcome o;
    o.seed = spec.seed;
    for (FusionMode mode : opts.modes) {
      FusionConfig cfg = opts.fusion;
      cfg.mode = mode;
      if (opts.reproducibility) {
        const auto [repro, truth] = measure_reproducibility(ph, labels, cfg);
        o.repro[mode] = repro;
        o.dice_truth[mode] = truth;
      }
      if (opts.robustness)
        o.robust_dice[mode] = measure_robustness(ph, *outlier, labels, cfg);
      if (progress)
        progress("seed " + std::to_string(spec.seed) + " mode " + to_string(mode) + " done");
    }
    report.seeds.push_back(std::move(o));
  }
  report.stats = compare_modes(report.seeds, opts.modes);
  return report;
}

std::string summary_csv(const ExperimentReport &report) {
  std::ostringstream out;
  out << "seed,mode,metric,value\n";
  for (const auto &s : report.seeds)
    for (const std::string metric : kMetrics)
      for (const auto &[mode, v] : column(s, metric))
        out << s.seed << ',' << to_string(mode) << ',' << metric << ',' << fmt(v) << '\n';
  return out.str();
}

std::string stats_csv(const ExperimentReport &report) {
  std::ostringstream out;
  out << "metric,mode,baseline,n,mean_mode,mean_baseline,wilcoxon_p,cohens_d\n";
  for (const auto &c : report.stats)
    out << c.metric << ',' << to_string(c.mode) << ',' << to_string(c.baseline) << ',' << c.n << ','
        << fmt(c.mean_mode) << ',' << fmt(c.mean_baseline) << ',' << fmt(c.wilcoxon_p) << ',' << fmt(c.cohens_d)
        << '\n';
  return out.str();
}

std::string render_report(const ExperimentOptions &opts, const ExperimentReport &report) {
  std::ostringstream out;
  const auto &b = opts.base;
  out << "longfuse phantom experiment\n";
  out << "phantom: " << b.dims.x << 'x' << b.dims.y << 'x' << b.dims.z << ", k=" << b.k << ", n=" << b.n
      << ", flip rate " << fmt(b.atlas_label_error_rate) << ", sigma " << fmt(b.intensity.sigma) << "\n";
  out << "seeds: " << opts.first_seed << ".." << opts.first_seed + static_cast<std::uint64_t>(opts.seeds) - 1
      << "\nmodes:";
  for (FusionMode m : opts.modes)
    out << ' ' << to_string(m);
  out << "\nfusion: patch radius " << opts.fusion.patch.patch_radius << ", search radius "
      << opts.fusion.patch.search_radius << ", alpha " << fmt(opts.fusion.alpha) << ", beta " << fmt(opts.fusion.beta)
      << "\n";

  auto table = [&](const std::string &title, const std::string &metric) {
    if (report.seeds.empty() || column(report.seeds.front(), metric).empty())
      return;
    out << "\n" << title << "\n";
    out << "seed";
    for (FusionMode m : opts.modes)
      out << '\t' << to_string(m);
    out << '\n';
    for (const auto &s : report.seeds) {
      out << s.seed;
      for (FusionMode m : opts.modes)
        out << '\t' << fmt(column(s, metric).at(m));
      out << '\n';
    }
    for (const auto &c : report.stats)
      if (c.metric == metric)
        out << to_string(c.mode) << " vs " << to_string(c.baseline) << ": mean " << fmt(c.mean_mode) << " vs "
            << fmt(c.mean_baseline) << ", wilcoxon p " << fmt(c.wilcoxon_p) << ", cohen's d " << fmt(c.cohens_d)
            << '\n';
  };
  table("Longitudinal reproducibility (mean pairwise Dice)", "repro");
  table("Accuracy (mean Dice vs truth)", "dice_truth");
  table("Dummy-pair robustness (Dice vs truth)", "robust_dice");
  if (report.stats.empty())
    out << "\nsingle mode: no comparisons\n";
  return out.str();
}

} // namespace longfuse::cli
