#pragma once

#include <filesystem>
#include <string>

#include "vesselmark/volume.hpp"

namespace vm {

// Supported on-disk formats:
//   *.nii, *.nii.gz   NIfTI-1 single file. Orientation must be axis aligned;
//                     axes stored with negative direction are flipped on
//                     read so spacing is always positive.
//   *.rawh            Text sidecar (dims, spacing, origin, axis order,
//                     components) next to a little-endian float32 payload
//                     named in the sidecar.
enum class VolumeFormat { nifti, nifti_gz, raw };

VolumeFormat format_from_path(const std::filesystem::path& path);

ScalarVolume read_scalar_volume(const std::filesystem::path& path);
// Reads a 3-component displacement field (NIfTI dim[5] = 3, or a raw
// volume with components = 3).
VectorField read_vector_field(const std::filesystem::path& path);
MaskVolume read_mask(const std::filesystem::path& path);

// Writes are atomic: data goes to a temporary file that is then renamed.
void write_volume(const std::filesystem::path& path, const ScalarVolume& vol);
void write_volume(const std::filesystem::path& path, const VectorField& field);
void write_volume(const std::filesystem::path& path, const MaskVolume& mask);

// Atomically replaces `path` with `bytes`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace vm
