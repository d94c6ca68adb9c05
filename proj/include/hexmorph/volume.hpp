#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hexmorph/geometry.hpp"

namespace hexmorph {

enum class VoxelType : std::uint8_t { u8, i16, i32, f32 };
enum class VolumeKind : std::uint8_t { intensity, label, vector_field };

const char* to_string(VoxelType type);
const char* to_string(VolumeKind kind);

// Voxel grid geometry. World position of a continuous index ijk is
// origin + direction * (ijk .* spacing); the direction is orthonormal.
class Geometry {
 public:
  Geometry();
  Geometry(Dims3 dims, Vec3 spacing, Vec3 origin = Vec3::Zero(), Mat3 direction = Mat3::Identity());

  const Dims3& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Vec3& origin() const { return origin_; }
  const Mat3& direction() const { return direction_; }

  std::int64_t voxel_count() const { return dims_[0] * dims_[1] * dims_[2]; }
  std::int64_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i + dims_[0] * (j + dims_[1] * k);
  }

  Vec3 index_to_world(const Vec3& ijk) const { return origin_ + index_to_world_ * ijk; }
  Vec3 world_to_index(const Vec3& p) const { return world_to_index_ * (p - origin_); }
  Vec3 voxel_center(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return index_to_world(Vec3(double(i), double(j), double(k)));
  }

  // direction * diag(spacing) and its inverse.
  const Mat3& index_to_world_matrix() const { return index_to_world_; }
  const Mat3& world_to_index_matrix() const { return world_to_index_; }

  // World-space bounding box of the voxel-center lattice.
  Box3 center_bounds() const;

  bool matches(const Geometry& other, double tol = 1e-6) const;

 private:
  Dims3 dims_;
  Vec3 spacing_;
  Vec3 origin_;
  Mat3 direction_;
  Mat3 index_to_world_;
  Mat3 world_to_index_;
};

// Scalar, label, or 3-component displacement volume.
//
// Values are held as doubles but always quantized to the storage type on
// construction, so what is in memory is exactly what a NIfTI file holds.
// Vector fields are planar: component c of voxel n lives at c * N + n.
class ImageVolume {
 public:
  ImageVolume(Geometry geometry, VolumeKind kind, VoxelType type, std::vector<double> values);

  static ImageVolume filled(Geometry geometry, VolumeKind kind, VoxelType type, double value);

  const Geometry& geometry() const { return geometry_; }
  VolumeKind kind() const { return kind_; }
  VoxelType type() const { return type_; }
  int components() const { return kind_ == VolumeKind::vector_field ? 3 : 1; }

  std::span<const double> values() const { return values_; }

  double at(std::int64_t i, std::int64_t j, std::int64_t k, int component = 0) const {
    return values_[static_cast<std::size_t>(component * geometry_.voxel_count() +
                                            geometry_.linear_index(i, j, k))];
  }

  // Same geometry and data with a different kind tag (e.g. treating a u8
  // anatomical scan as intensity). Vector fields cannot be retagged.
  ImageVolume with_kind(VolumeKind kind) const;

 private:
  Geometry geometry_;
  VolumeKind kind_;
  VoxelType type_;
  std::vector<double> values_;
};

struct BinaryMask {
  Geometry geometry;
  std::vector<std::uint8_t> bits;

  bool test(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return bits[static_cast<std::size_t>(geometry.linear_index(i, j, k))] != 0;
  }
  std::int64_t count() const;
};

// Value with border clamp; vector fields use the 3-vector overload.
double sample_trilinear(const ImageVolume& vol, const Vec3& p);
Vec3 sample_trilinear_vector(const ImageVolume& vol, const Vec3& p);

// Trilinear value plus the exact world-space gradient of the interpolant.
// Axes clamped at the border contribute zero derivative.
double sample_trilinear_gradient(const ImageVolume& vol, const Vec3& p, Vec3& gradient);

// Label of the nearest voxel center; half-way ties go to the lower index.
std::int32_t sample_nearest(const ImageVolume& vol, const Vec3& p);

// Gaussian (sigma 1 voxel, radius 3, renormalized at borders) then keep
// every other voxel. Voxel (0,0,0) keeps its world position.
ImageVolume downsample2x(const ImageVolume& vol);

BinaryMask binary_mask(const ImageVolume& vol, std::int32_t label);
BinaryMask foreground_mask(const ImageVolume& vol);

std::map<std::int32_t, std::int64_t> label_histogram(const ImageVolume& vol);

// Centers of set voxels with at least one 6-neighbor unset or off-grid,
// x-fastest order.
std::vector<Vec3> surface_voxels(const BinaryMask& mask);

}  // namespace hexmorph
