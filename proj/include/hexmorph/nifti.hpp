#pragma once

#include <filesystem>
#include <optional>

#include "hexmorph/volume.hpp"

namespace hexmorph {

// NIfTI-1 single-file reader/writer for the u8/i16/i32/f32 subset.
//
// Reading: gzip is detected from the stream, not the extension. Geometry
// comes from the sform when sform_code > 0, else the qform, else pixdim
// with identity direction. Big-endian files are recognised by dim[0].
// dim[0] = 5 with dim[4] = 1, dim[5] = 3 is a displacement field in mm.
//
// When expected_kind is given, intensity/label tags are reinterpreted to
// it; vector/non-vector mismatches raise a format error.
ImageVolume load_nifti(const std::filesystem::path& path,
                       std::optional<VolumeKind> expected_kind = std::nullopt);

// Little-endian, vox_offset 352, sform and qform both set (code 1).
// Paths ending in ".gz" are gzip-compressed.
void save_nifti(const ImageVolume& vol, const std::filesystem::path& path);

// Quaternion helpers shared with tests: (b, c, d) plus qfac from a
// rotation-or-reflection matrix, and the inverse mapping.
struct Quaternion {
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double qfac = 1.0;
};
Quaternion direction_to_quaternion(const Mat3& direction);
Mat3 quaternion_to_direction(const Quaternion& q);

}  // namespace hexmorph
