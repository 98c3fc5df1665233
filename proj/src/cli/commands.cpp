#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "cli/experiment.hpp"
#include "cli/manifest.hpp"
#include "longfuse/metrics.hpp"
#include "longfuse/nifti.hpp"
#include "longfuse/normalize.hpp"
#include "longfuse/phantom.hpp"

namespace fs = std::filesystem;

namespace longfuse::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void ensure_dir(const fs::path &dir) {
  if (dir.empty())
    return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

Volume load(const std::string &path, const std::string &flag, VolumeKind kind) {
  try {
    return read_volume(path).with_kind(kind);
  } catch (const std::exception &e) {
    throw InputError(flag + " " + path + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Phantom flags shared by `phantom` and `experiment`.
struct SpecFlags {
  std::string spec_path;
  std::vector<int> dims;
  std::optional<int> k, n;
  std::optional<std::uint64_t> seed;
  std::optional<double> error_rate, sigma, atlas_sigma, shared_noise, persistence;

  void add_to(CLI::App &app) {
    app.add_option("--spec", spec_path, "Phantom spec JSON (a phantom manifest also works)");
    app.add_option("--dims", dims, "Grid size x y z")->expected(3);
    app.add_option("--k", k, "Time points");
    app.add_option("--n", n, "Atlases per time point");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--error-rate", error_rate, "Atlas boundary-flip probability");
    app.add_option("--sigma", sigma, "Target intensity noise sigma");
    app.add_option("--atlas-sigma", atlas_sigma, "Atlas intensity noise sigma");
    app.add_option("--shared-noise", shared_noise, "Fraction of noise variance shared across time points");
    app.add_option("--persistence", persistence, "Probability that atlas errors repeat across time points");
  }

  PhantomSpec resolve(PhantomSpec defaults) const {
    PhantomSpec spec = defaults;
    if (!spec_path.empty()) {
      const auto doc = read_json_file(spec_path);
      try {
        spec = doc.contains("spec") ? doc.at("spec").get<PhantomSpec>() : doc.get<PhantomSpec>();
      } catch (const nlohmann::json::exception &e) {
        throw InputError("--spec " + spec_path + ": " + e.what());
      } catch (const Error &e) {
        throw InputError("--spec " + spec_path + ": " + e.what());
      }
    }
    if (!dims.empty()) {
      // Re-centre the default anatomy on the new grid unless a spec gave structures.
      const Dims d{dims[0], dims[1], dims[2]};
      if (spec_path.empty()) {
        const PhantomSpec c = PhantomSpec::concentric(d, spec.k, spec.n, spec.seed);
        spec.structures = c.structures;
      }
      spec.dims = d;
    }
    if (k) {
      spec.k = *k;
      for (auto &s : spec.structures)
        if (!s.scales.empty() && static_cast<int>(s.scales.size()) != *k)
          throw InputError("--k " + std::to_string(*k) + " conflicts with per-time scales in the phantom spec");
    }
    if (n)
      spec.n = *n;
    if (seed)
      spec.seed = *seed;
    if (error_rate)
      spec.atlas_label_error_rate = *error_rate;
    if (sigma)
      spec.intensity.sigma = *sigma;
    if (atlas_sigma)
      spec.atlas_intensity_sigma = *atlas_sigma;
    if (shared_noise)
      spec.intensity.shared_noise_fraction = *shared_noise;
    if (persistence)
      spec.atlas_error_persistence = *persistence;
    try {
      spec.validate();
    } catch (const Error &e) {
      throw InputError(std::string("invalid phantom spec: ") + e.what());
    }
    return spec;
  }
};

// ---------------------------------------------------------------- fuse

struct FuseArgs {
  FuseSettings flags;
  FuseInputs inputs;
  std::string config_path;
  std::string out_prefix;
  bool no_shortcut = false;
  bool no_normalize = false;
  bool posteriors = false;
};

void add_fuse(CLI::App &app, FuseArgs &a) {
  app.add_option("--mode", a.flags.mode, "jlf, jlf-multi or 4djlf");
  app.add_option("--targets", a.inputs.targets, "Target images, time-ascending");
  app.add_option("--atlas-images", a.inputs.atlas_images, "Registered atlas intensity images");
  app.add_option("--atlas-labels", a.inputs.atlas_labels, "Registered atlas label maps, same order");
  app.add_flag("--per-time-atlases", a.inputs.per_time_atlases,
               "Atlas lists hold n*k entries, block t registered to target t");
  app.add_option("--patch-radius", a.flags.patch_radius);
  app.add_option("--search-radius", a.flags.search_radius);
  app.add_option("--alpha", a.flags.alpha);
  app.add_option("--beta", a.flags.beta);
  app.add_option("--epsilon", a.flags.epsilon);
  app.add_option("--mask", a.flags.mask, "union_nonzero, full, or a mask image path");
  app.add_option("--workers", a.flags.workers);
  app.add_option("--out-prefix", a.out_prefix, "Output prefix; writes <prefix>_t<idx>.nii.gz")->required();
  app.add_option("--config", a.config_path, "JSON config or a previous run manifest");
  app.add_flag("--no-shortcut", a.no_shortcut, "Solve every masked voxel, even unanimous ones");
  app.add_flag("--no-normalize", a.no_normalize, "Skip percentile intensity normalization");
  app.add_flag("--posteriors", a.posteriors, "Also write per-label posterior maps");
}

int cmd_fuse(FuseArgs &a, std::ostream &out, std::ostream &err) {
  const auto t_start = Clock::now();
  FuseSettings config;
  FuseInputs inputs = a.inputs;
  if (!a.config_path.empty()) {
    const auto doc = read_json_file(a.config_path);
    config = settings_from_json(doc);
    if (const auto from = inputs_from_json(doc)) {
      if (inputs.targets.empty())
        inputs.targets = from->targets;
      if (inputs.atlas_images.empty())
        inputs.atlas_images = from->atlas_images;
      if (inputs.atlas_labels.empty())
        inputs.atlas_labels = from->atlas_labels;
      inputs.per_time_atlases = inputs.per_time_atlases || from->per_time_atlases;
    }
  }
  if (a.no_shortcut)
    a.flags.consensus_shortcut = false;
  if (a.no_normalize)
    a.flags.normalize = false;
  if (a.posteriors)
    a.flags.posteriors = true;

  if (inputs.targets.empty())
    throw UsageError("--targets is required");
  if (inputs.atlas_images.empty())
    throw UsageError("--atlas-images is required");
  if (inputs.atlas_labels.empty())
    throw UsageError("--atlas-labels is required");

  ResolvedFuse rs = resolve_settings(a.flags, config);
  FusionConfig &cfg = rs.fusion;

  if (inputs.atlas_images.size() != inputs.atlas_labels.size())
    throw InputError("--atlas-images has " + std::to_string(inputs.atlas_images.size()) + " entries but --atlas-labels has " +
                     std::to_string(inputs.atlas_labels.size()));

  LongitudinalSeries series;
  series.subject_id = fs::path(a.out_prefix).filename().string();
  for (const auto &p : inputs.targets)
    series.targets.push_back(load(p, "--targets", VolumeKind::intensity));
  const int k = series.k();

  std::vector<AtlasPair> pairs;
  for (std::size_t i = 0; i < inputs.atlas_images.size(); ++i)
    pairs.push_back({load(inputs.atlas_images[i], "--atlas-images", VolumeKind::intensity),
                     load(inputs.atlas_labels[i], "--atlas-labels", VolumeKind::label)});

  AtlasBank bank;
  try {
    series.validate();
    if (inputs.per_time_atlases) {
      if (pairs.size() % static_cast<std::size_t>(k) != 0)
        throw InputError("--per-time-atlases: " + std::to_string(pairs.size()) + " atlases do not split into " +
                         std::to_string(k) + " time blocks");
      const int n = static_cast<int>(pairs.size()) / k;
      bank = AtlasBank(n, k, std::move(pairs));
    } else {
      bank = AtlasBank::replicate(std::move(pairs), k);
    }
    bank.check_against(series);
  } catch (const InputError &) {
    throw;
  } catch (const std::exception &e) {
    throw InputError(e.what());
  }

  if (cfg.mask_policy == MaskPolicy::explicit_mask) {
    cfg.mask = load(rs.mask_spec, "--mask", VolumeKind::label);
    if (!cfg.mask->same_grid(series.target(0)))
      throw InputError("--mask " + rs.mask_spec + ": grid " + to_string(cfg.mask->dims()) + " differs from targets " +
                       to_string(series.target(0).dims()));
  }
  if (rs.normalize) {
    series = normalize_series(series);
    bank = normalize_bank(bank);
  }
  if (k == 1 && cfg.mode != FusionMode::jlf)
    err << "longfuse: notice: a single time point; " << to_string(cfg.mode) << " reduces to jlf\n";
  const double load_s = seconds_since(t_start);

  const auto t_fuse = Clock::now();
  const FusionResult result = fuse(series, bank, cfg);
  const double fuse_s = seconds_since(t_fuse);

  const auto t_write = Clock::now();
  ensure_dir(fs::path(a.out_prefix).parent_path());
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json stats = nlohmann::json::array();
  for (int t = 0; t < k; ++t) {
    const auto &tp = result.time_points[static_cast<std::size_t>(t)];
    const std::string path = a.out_prefix + "_t" + std::to_string(t) + ".nii.gz";
    write_volume(tp.segmentation, path);
    outputs.push_back(file_entry(path));
    for (const auto &[label, post] : tp.posteriors) {
      const std::string pp = a.out_prefix + "_t" + std::to_string(t) + "_label" + std::to_string(label) + ".nii.gz";
      write_volume(post, pp);
      outputs.push_back(file_entry(pp));
    }
    stats.push_back({{"time", t},
                     {"masked_out", tp.stats.masked_out},
                     {"shortcut_voxels", tp.stats.shortcut_voxels},
                     {"solved_voxels", tp.stats.solved_voxels},
                     {"solver_fallbacks", tp.stats.solver_fallbacks}});
    out << path << "\n";
  }

  nlohmann::json manifest = manifest_header("fuse");
  manifest["config"] = settings_to_json(rs);
  nlohmann::json in = {{"targets", nlohmann::json::array()},
                       {"atlas_images", nlohmann::json::array()},
                       {"atlas_labels", nlohmann::json::array()},
                       {"per_time_atlases", inputs.per_time_atlases}};
  for (const auto &p : inputs.targets)
    in["targets"].push_back(file_entry(p));
  for (const auto &p : inputs.atlas_images)
    in["atlas_images"].push_back(file_entry(p));
  for (const auto &p : inputs.atlas_labels)
    in["atlas_labels"].push_back(file_entry(p));
  if (cfg.mask_policy == MaskPolicy::explicit_mask)
    in["mask"] = file_entry(rs.mask_spec);
  manifest["inputs"] = in;
  manifest["outputs"] = outputs;
  manifest["stats"] = stats;
  manifest["timings"] = {{"load_s", load_s}, {"fuse_s", fuse_s}, {"write_s", seconds_since(t_write)}};
  write_json_atomic(a.out_prefix + "_manifest.json", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
  SpecFlags spec;
  std::string out_dir;
};

int cmd_phantom(const PhantomArgs &a, std::ostream &out) {
  const PhantomSpec spec = a.spec.resolve(PhantomSpec::concentric({32, 32, 32}, 3, 4, 1));
  const Phantom ph = generate_phantom(spec);
  const fs::path dir(a.out_dir);
  ensure_dir(dir);

  nlohmann::json targets = nlohmann::json::array(), truth = nlohmann::json::array(), bank = nlohmann::json::array();
  for (int t = 0; t < spec.k; ++t) {
    const auto tp = (dir / ("target_t" + std::to_string(t) + ".nii.gz")).string();
    const auto gp = (dir / ("truth_t" + std::to_string(t) + ".nii.gz")).string();
    write_volume(ph.series.target(t), tp);
    write_volume(ph.truth[static_cast<std::size_t>(t)], gp);
    targets.push_back(file_entry(tp));
    truth.push_back(file_entry(gp));
  }
  for (int i = 0; i < ph.bank.m(); ++i) {
    const int q = ph.bank.time_of(i);
    const int j = i - ph.bank.block_begin(q);
    const std::string stem = "atlas_i" + std::to_string(i) + "_t" + std::to_string(q) + "_j" + std::to_string(j);
    const auto ip = (dir / (stem + "_image.nii.gz")).string();
    const auto lp = (dir / (stem + "_labels.nii.gz")).string();
    write_volume(ph.bank.image(i), ip);
    write_volume(ph.bank.labels(i), lp);
    bank.push_back({{"index", i}, {"time", q}, {"atlas", j}, {"image", file_entry(ip)}, {"labels", file_entry(lp)}});
  }
  nlohmann::json manifest = manifest_header("phantom");
  manifest["spec"] = spec;
  manifest["n"] = spec.n;
  manifest["k"] = spec.k;
  manifest["targets"] = targets;
  manifest["truth"] = truth;
  manifest["bank"] = bank;
  write_json_atomic((dir / "phantom_manifest.json").string(), manifest);
  out << "wrote phantom with " << spec.k << " time points and " << ph.bank.m() << " atlases to " << dir.string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string input;
  std::string out_dir;
};

struct EvalSubject {
  std::string id;
  std::vector<Volume> truth;
  std::map<FusionMode, std::vector<Volume>> modes;
};

int cmd_eval(const EvalArgs &a, std::ostream &out) {
  const auto doc = read_json_file(a.input);
  const fs::path base = fs::path(a.input).parent_path();
  auto resolve_path = [&](const std::string &p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };

  std::vector<EvalSubject> subjects;
  std::vector<FusionMode> modes;
  std::set<int> labels;
  std::map<std::string, std::set<int>> groups;
  try {
    if (doc.contains("labels"))
      for (int l : doc.at("labels").get<std::vector<int>>())
        labels.insert(l);
    if (doc.contains("groups"))
      for (const auto &[name, members] : doc.at("groups").items())
        for (int l : members.get<std::vector<int>>())
          groups[name].insert(l);
    if (!doc.contains("subjects") || doc.at("subjects").empty())
      throw InputError(a.input + ": no subjects listed");
    for (const auto &js : doc.at("subjects")) {
      EvalSubject s;
      s.id = js.at("id").get<std::string>();
      if (js.contains("truth"))
        for (const auto &p : js.at("truth").get<std::vector<std::string>>())
          s.truth.push_back(load(resolve_path(p), "truth of " + s.id, VolumeKind::label));
      for (const auto &[name, paths] : js.at("modes").items()) {
        const auto mode = parse_fusion_mode(name);
        if (!mode)
          throw InputError(a.input + ": subject " + s.id + " has unknown mode \"" + name + "\"");
        auto &segs = s.modes[*mode];
        for (const auto &p : paths.get<std::vector<std::string>>())
          segs.push_back(load(resolve_path(p), s.id + "/" + name, VolumeKind::label));
      }
      subjects.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception &e) {
    throw InputError(a.input + ": " + e.what());
  }

  // Every subject must list the same modes, with consistent time-point counts.
  for (const auto &[m, segs] : subjects.front().modes)
    modes.push_back(m);
  for (const auto &s : subjects) {
    std::vector<FusionMode> these;
    for (const auto &[m, segs] : s.modes)
      these.push_back(m);
    if (these != modes)
      throw InputError("subject " + s.id + " lists a different set of modes than " + subjects.front().id);
    const std::size_t k = s.modes.begin()->second.size();
    for (const auto &[m, segs] : s.modes) {
      if (segs.size() != k || k == 0)
        throw InputError("subject " + s.id + ": mode " + to_string(m) + " has " + std::to_string(segs.size()) +
                         " time points, expected " + std::to_string(k));
      for (const auto &v : segs)
        if (!v.same_grid(segs.front()))
          throw InputError("subject " + s.id + ": mode " + to_string(m) + " mixes grids");
    }
    if (!s.truth.empty() && s.truth.size() != k)
      throw InputError("subject " + s.id + ": " + std::to_string(s.truth.size()) + " truth volumes for " +
                       std::to_string(k) + " time points");
    if (!s.truth.empty() && !s.truth.front().same_grid(s.modes.begin()->second.front()))
      throw InputError("subject " + s.id + ": truth grid differs from segmentations");
  }
  if (labels.empty()) {
    for (const auto &s : subjects)
      for (const auto &[m, segs] : s.modes)
        for (const auto &v : segs)
          for (float l : v.data())
            if (l != 0.0f)
              labels.insert(static_cast<int>(l));
  }

  std::ostringstream dice_csv, repro_csv, vol_csv;
  dice_csv << "subject,mode,time,metric,value\n";
  repro_csv << "subject,mode,time_pair,metric,value\n";
  vol_csv << "subject,mode,time,metric,value\n";
  std::vector<SeedOutcome> outcomes;
  for (const auto &s : subjects) {
    SeedOutcome o;
    for (const auto &[mode, segs] : s.modes) {
      const std::string m = to_string(mode);
      if (!s.truth.empty()) {
        double sum = 0.0;
        for (std::size_t t = 0; t < segs.size(); ++t) {
          const DiceReport r = dice_report(segs[t], s.truth[t], labels);
          for (const auto &[l, d] : r.per_label)
            dice_csv << s.id << ',' << m << ',' << t << ",dice_label_" << l << ',' << fmt(d) << '\n';
          dice_csv << s.id << ',' << m << ',' << t << ",dice_mean," << fmt(r.mean) << '\n';
          sum += r.mean;
        }
        o.dice_truth[mode] = sum / static_cast<double>(segs.size());
      }
      if (segs.size() >= 2) {
        const ReproducibilityMatrix r = reproducibility(segs, labels);
        for (int i = 0; i < r.k; ++i)
          for (int j = i + 1; j < r.k; ++j)
            repro_csv << s.id << ',' << m << ',' << i << '-' << j << ",mean_dice," << fmt(r.at(i, j)) << '\n';
        repro_csv << s.id << ',' << m << ",all,mean_dice," << fmt(r.mean_off_diagonal()) << '\n';
        o.repro[mode] = r.mean_off_diagonal();
      }
      const VolumeTrajectory vt = volume_trajectory(segs, labels, segs.front().spacing(), groups);
      for (std::size_t t = 0; t < segs.size(); ++t) {
        for (const auto &[l, v] : vt.per_label)
          vol_csv << s.id << ',' << m << ',' << t << ",volume_label_" << l << ',' << fmt(v[t]) << '\n';
        for (const auto &[g, v] : vt.per_group)
          vol_csv << s.id << ',' << m << ',' << t << ",volume_group_" << g << ',' << fmt(v[t]) << '\n';
        vol_csv << s.id << ',' << m << ',' << t << ",volume_total," << fmt(vt.total[t]) << '\n';
      }
    }
    outcomes.push_back(std::move(o));
  }
  ExperimentReport report;
  report.stats = compare_modes(outcomes, modes);

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  write_text_atomic((dir / "dice_vs_truth.csv").string(), dice_csv.str());
  write_text_atomic((dir / "reproducibility.csv").string(), repro_csv.str());
  write_text_atomic((dir / "volumes.csv").string(), vol_csv.str());
  write_text_atomic((dir / "stats.csv").string(), stats_csv(report));

  nlohmann::json manifest = manifest_header("eval");
  manifest["inputs"] = {file_entry(a.input)};
  manifest["outputs"] = nlohmann::json::array();
  for (const char *f : {"dice_vs_truth.csv", "reproducibility.csv", "volumes.csv", "stats.csv"})
    manifest["outputs"].push_back(file_entry((dir / f).string()));
  write_json_atomic((dir / "eval_manifest.json").string(), manifest);
  out << "evaluated " << subjects.size() << " subject(s), " << modes.size() << " mode(s)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  SpecFlags spec;
  std::vector<std::string> modes{"jlf", "jlf-multi", "4djlf"};
  int seeds = 10;
  std::uint64_t first_seed = 1;
  FuseSettings fusion;
  bool skip_repro = false;
  bool skip_robust = false;
  double outlier_scale = 0.8;
  std::string out_dir;
};

int cmd_experiment(const ExperimentArgs &a, std::ostream &out, std::ostream &err) {
  const auto t0 = Clock::now();
  ExperimentOptions opts;
  opts.base = a.spec.resolve(PhantomSpec::concentric({32, 32, 32}, 3, 4, 1));
  opts.modes.clear();
  for (const auto &name : a.modes) {
    const auto m = parse_fusion_mode(name);
    if (!m)
      throw InputError("--modes: unknown fusion mode \"" + name + "\"");
    if (std::find(opts.modes.begin(), opts.modes.end(), *m) == opts.modes.end())
      opts.modes.push_back(*m);
  }
  if (opts.modes.empty())
    throw UsageError("--modes needs at least one mode");
  if (a.seeds < 1)
    throw InputError("--seeds must be >= 1");
  if (!(a.outlier_scale > 0.0))
    throw InputError("--outlier-scale must be > 0");
  FuseSettings fusion = a.fusion;
  fusion.normalize = false;
  opts.fusion = resolve_settings(fusion, {}).fusion;
  if (opts.fusion.mask_policy == MaskPolicy::explicit_mask)
    throw InputError("--mask: experiments take a policy name, not a path");
  opts.seeds = a.seeds;
  opts.first_seed = a.first_seed;
  opts.reproducibility = !a.skip_repro;
  opts.robustness = !a.skip_robust;
  opts.outlier_scale = a.outlier_scale;
  if (opts.robustness && opts.base.k < 1)
    throw InputError("robustness experiment needs k >= 1");

  const ExperimentReport report = run_experiment(opts, [&](const std::string &msg) { err << "longfuse: " << msg << "\n"; });
  const std::string text = render_report(opts, report);

  const fs::path dir(a.out_dir);
  ensure_dir(dir);
  write_text_atomic((dir / "report.txt").string(), text);
  write_text_atomic((dir / "summary.csv").string(), summary_csv(report));
  write_text_atomic((dir / "stats.csv").string(), stats_csv(report));
  nlohmann::json manifest = manifest_header("experiment");
  manifest["spec"] = opts.base;
  manifest["modes"] = a.modes;
  manifest["seeds"] = a.seeds;
  manifest["first_seed"] = a.first_seed;
  manifest["config"] = settings_to_json(ResolvedFuse{opts.fusion, to_string(opts.fusion.mask_policy), false});
  manifest["outputs"] = nlohmann::json::array();
  for (const char *f : {"report.txt", "summary.csv", "stats.csv"})
    manifest["outputs"].push_back(file_entry((dir / f).string()));
  manifest["timings"] = {{"total_s", seconds_since(t0)}};
  write_json_atomic((dir / "experiment_manifest.json").string(), manifest);
  out << text;
  return kExitOk;
}

const CLI::App *selected(const CLI::App &app) {
  for (const CLI::App *sub : app.get_subcommands())
    return sub;
  return &app;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Longitudinal multi-atlas label fusion (JLF, JLF-Multi, 4DJLF) with a phantom lab", "longfuse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  FuseArgs fuse_args;
  add_fuse(*app.add_subcommand("fuse", "Fuse registered atlases onto a longitudinal series"), fuse_args);

  PhantomArgs phantom_args;
  auto *phantom = app.add_subcommand("phantom", "Generate a synthetic longitudinal phantom and atlas bank");
  phantom_args.spec.add_to(*phantom);
  phantom->add_option("--out-dir", phantom_args.out_dir)->required();

  EvalArgs eval_args;
  auto *eval = app.add_subcommand("eval", "Dice, reproducibility, volumes and mode statistics");
  eval->add_option("--input", eval_args.input, "Evaluation JSON listing segmentations per subject and mode")
      ->required();
  eval->add_option("--out-dir", eval_args.out_dir)->required();

  ExperimentArgs exp_args;
  auto *exp = app.add_subcommand("experiment", "Run reproducibility and dummy-pair experiments on phantoms");
  exp_args.spec.add_to(*exp);
  exp->add_option("--modes", exp_args.modes, "Fusion modes")->delimiter(',');
  exp->add_option("--seeds", exp_args.seeds, "Number of phantom seeds");
  exp->add_option("--first-seed", exp_args.first_seed, "First seed");
  exp->add_option("--patch-radius", exp_args.fusion.patch_radius);
  exp->add_option("--search-radius", exp_args.fusion.search_radius);
  exp->add_option("--alpha", exp_args.fusion.alpha);
  exp->add_option("--beta", exp_args.fusion.beta);
  exp->add_option("--epsilon", exp_args.fusion.epsilon);
  exp->add_option("--mask", exp_args.fusion.mask, "union_nonzero or full");
  exp->add_option("--workers", exp_args.fusion.workers);
  exp->add_flag("--skip-reproducibility", exp_args.skip_repro);
  exp->add_flag("--skip-robustness", exp_args.skip_robust);
  exp->add_option("--outlier-scale", exp_args.outlier_scale, "Structure scale of the outlier phantom");
  exp->add_option("--out-dir", exp_args.out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError &e) {
    err << "longfuse: " << e.what() << "\n" << selected(app)->help();
    return kExitUsage;
  }

  try {
    if (*app.get_subcommand("fuse"))
      return cmd_fuse(fuse_args, out, err);
    if (*phantom)
      return cmd_phantom(phantom_args, out);
    if (*eval)
      return cmd_eval(eval_args, out);
    return cmd_experiment(exp_args, out, err);
  } catch (const UsageError &e) {
    err << "longfuse: " << e.what() << "\n" << selected(app)->help();
    return kExitUsage;
  } catch (const InputError &e) {
    err << "longfuse: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception &e) {
    err << "longfuse: " << e.what() << "\n";
    return kExitRuntime;
  }
}

} // namespace longfuse::cli
