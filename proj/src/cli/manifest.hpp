#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace longfuse::cli {

inline constexpr const char *kToolName = "longfuse";
inline constexpr const char *kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);

/// SHA-256 of the file's raw bytes.
std::string sha256_file(const std::string &path);

/// SHA-256 of the decompressed content of a .nii or .nii.gz file, so hashes
/// do not depend on gzip metadata or compression level.
std::string sha256_nifti(const std::string &path);

/// {"path": ..., "sha256": ...} entry; NIfTI files use sha256_nifti.
nlohmann::json file_entry(const std::string &path);

/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::string &path, const std::string &text);
void write_json_atomic(const std::string &path, const nlohmann::json &doc);

/// Skeleton shared by every manifest: tool, version, command.
nlohmann::json manifest_header(const std::string &command);

} // namespace longfuse::cli
