#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "longfuse/fusion.hpp"

namespace longfuse::cli {

/// Malformed command line (exit 1).
class UsageError : public Error {
public:
  using Error::Error;
};

/// Bad or unreadable input (exit 2).
class InputError : public Error {
public:
  using Error::Error;
};

/// Fusion tunables as they can appear on the command line or in a config
/// document. Unset fields fall through to the next source.
struct FuseSettings {
  std::optional<std::string> mode;
  std::optional<int> patch_radius;
  std::optional<int> search_radius;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::optional<std::string> mask; ///< policy name or path
  std::optional<int> workers;
  std::optional<bool> consensus_shortcut;
  std::optional<bool> normalize;
  std::optional<bool> posteriors;
};

/// Fully resolved settings, ready to run.
struct ResolvedFuse {
  FusionConfig fusion;
  std::string mask_spec = "union_nonzero";
  bool normalize = true;
};

/// Reads the tunables of a config document. A run manifest is accepted too:
/// its "config" object is used. Unknown keys are rejected.
FuseSettings settings_from_json(const nlohmann::json &doc);
nlohmann::json settings_to_json(const ResolvedFuse &r);

/// flags > config > defaults. Throws InputError on invalid values. An
/// explicit mask path is recorded but not loaded here.
ResolvedFuse resolve_settings(const FuseSettings &flags, const FuseSettings &config);

/// Input paths of a fuse run, as given on the command line or in a manifest.
struct FuseInputs {
  std::vector<std::string> targets;
  std::vector<std::string> atlas_images;
  std::vector<std::string> atlas_labels;
  bool per_time_atlases = false;
};

/// Input paths stored in a manifest's "inputs" object, if any.
std::optional<FuseInputs> inputs_from_json(const nlohmann::json &doc);

nlohmann::json read_json_file(const std::string &path);

} // namespace longfuse::cli
