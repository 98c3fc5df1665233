#pragma once

#include <filesystem>

#include "longfuse/volume.hpp"

namespace longfuse {

/// Malformed, truncated or unsupported image files, and failed reads/writes.
class IoError : public Error {
public:
  using Error::Error;
};

/// Reads a single-file NIfTI-1 image (.nii or .nii.gz).
///
/// Integer datatypes without intensity scaling and without negative values
/// come back as label volumes; everything else is intensity. Extra axes are
/// accepted only when they are singleton.
Volume read_volume(const std::filesystem::path &path);

/// Writes a NIfTI-1 single file; gzip-compressed when the path ends in ".gz".
/// Label volumes are stored as int16, intensity volumes as float32.
void write_volume(const Volume &v, const std::filesystem::path &path);

} // namespace longfuse
