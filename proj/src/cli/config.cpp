#include "cli/config.hpp"

#include <algorithm>
#include <fstream>

namespace longfuse::cli {
namespace {

template <typename T> void take(const nlohmann::json &doc, const char *key, std::optional<T> &out) {
  if (!doc.contains(key))
    return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw InputError(std::string("config key \"") + key + "\" has the wrong type");
  }
}

template <typename T> T pick(const std::optional<T> &flag, const std::optional<T> &config, T fallback) {
  if (flag)
    return *flag;
  if (config)
    return *config;
  return fallback;
}

const char *const kKnownKeys[] = {"mode",    "patch_radius",       "search_radius", "alpha",
                                  "beta",    "epsilon",            "mask",          "workers",
                                  "consensus_shortcut", "normalize", "posteriors"};

} // namespace

FuseSettings settings_from_json(const nlohmann::json &doc) {
  if (!doc.is_object())
    throw InputError("config document must be a JSON object");
  const nlohmann::json &cfg = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
  const bool manifest = &cfg != &doc;
  if (!manifest) {
    for (const auto &[key, value] : cfg.items()) {
      (void)value;
      if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys))
        throw InputError("unknown config key \"" + key + "\"");
    }
  }
  FuseSettings s;
  take(cfg, "mode", s.mode);
  take(cfg, "patch_radius", s.patch_radius);
  take(cfg, "search_radius", s.search_radius);
  take(cfg, "alpha", s.alpha);
  take(cfg, "beta", s.beta);
  take(cfg, "epsilon", s.epsilon);
  take(cfg, "mask", s.mask);
  take(cfg, "workers", s.workers);
  take(cfg, "consensus_shortcut", s.consensus_shortcut);
  take(cfg, "normalize", s.normalize);
  take(cfg, "posteriors", s.posteriors);
  return s;
}

nlohmann::json settings_to_json(const ResolvedFuse &r) {
  const FusionConfig &f = r.fusion;
  return {{"mode", to_string(f.mode)},
          {"patch_radius", f.patch.patch_radius},
          {"search_radius", f.patch.search_radius},
          {"alpha", f.alpha},
          {"beta", f.beta},
          {"epsilon", f.epsilon},
          {"mask", r.mask_spec},
          {"workers", f.workers},
          {"consensus_shortcut", f.consensus_shortcut},
          {"normalize", r.normalize},
          {"posteriors", f.emit_posteriors}};
}

ResolvedFuse resolve_settings(const FuseSettings &flags, const FuseSettings &config) {
  const FusionConfig defaults;
  ResolvedFuse r;
  FusionConfig &f = r.fusion;

  const std::string mode = pick(flags.mode, config.mode, std::string(to_string(defaults.mode)));
  const auto parsed = parse_fusion_mode(mode);
  if (!parsed)
    throw InputError("--mode: unknown fusion mode \"" + mode + "\" (expected jlf, jlf-multi or 4djlf)");
  f.mode = *parsed;

  f.patch.patch_radius = pick(flags.patch_radius, config.patch_radius, defaults.patch.patch_radius);
  f.patch.search_radius = pick(flags.search_radius, config.search_radius, defaults.patch.search_radius);
  f.alpha = pick(flags.alpha, config.alpha, defaults.alpha);
  f.beta = pick(flags.beta, config.beta, defaults.beta);
  f.epsilon = pick(flags.epsilon, config.epsilon, defaults.epsilon);
  f.workers = pick(flags.workers, config.workers, defaults.workers);
  f.consensus_shortcut = pick(flags.consensus_shortcut, config.consensus_shortcut, defaults.consensus_shortcut);
  f.emit_posteriors = pick(flags.posteriors, config.posteriors, defaults.emit_posteriors);
  r.normalize = pick(flags.normalize, config.normalize, true);

  r.mask_spec = pick(flags.mask, config.mask, std::string(to_string(defaults.mask_policy)));
  if (r.mask_spec == "union_nonzero")
    f.mask_policy = MaskPolicy::union_nonzero;
  else if (r.mask_spec == "full")
    f.mask_policy = MaskPolicy::full;
  else if (r.mask_spec.empty())
    throw InputError("--mask: empty value");
  else
    f.mask_policy = MaskPolicy::explicit_mask;

  if (f.patch.patch_radius < 0)
    throw InputError("--patch-radius must be >= 0");
  if (f.patch.search_radius < 0 || f.patch.search_radius > PatchSpec::kMaxSearchRadius)
    throw InputError("--search-radius must lie in 0.." + std::to_string(PatchSpec::kMaxSearchRadius));
  if (!(f.alpha >= 0.0))
    throw InputError("--alpha must be >= 0");
  if (!(f.beta >= 0.0))
    throw InputError("--beta must be >= 0");
  if (!(f.epsilon > 0.0))
    throw InputError("--epsilon must be > 0");
  if (f.workers < 1)
    throw InputError("--workers must be >= 1");
  return r;
}

std::optional<FuseInputs> inputs_from_json(const nlohmann::json &doc) {
  if (!doc.is_object() || !doc.contains("inputs"))
    return std::nullopt;
  const auto &in = doc.at("inputs");
  auto paths = [&](const char *key) {
    std::vector<std::string> out;
    if (in.contains(key))
      for (const auto &e : in.at(key))
        out.push_back(e.is_object() ? e.at("path").get<std::string>() : e.get<std::string>());
    return out;
  };
  FuseInputs r;
  r.targets = paths("targets");
  r.atlas_images = paths("atlas_images");
  r.atlas_labels = paths("atlas_labels");
  r.per_time_atlases = in.value("per_time_atlases", false);
  return r;
}

nlohmann::json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
}

} // namespace longfuse::cli
