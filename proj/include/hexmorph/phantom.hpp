#pragma once

#include <cstdint>
#include <optional>

#include "hexmorph/transforms.hpp"
#include "hexmorph/volume.hpp"

namespace hexmorph {

// Two-label test object: a soft-edged sphere (label 1) with an off-center
// core (label 2), plus an intensity-only blob so no rotation maps the image
// onto itself. Sizes scale with the grid so 64^3 at 1 mm is the reference.
struct PhantomShape {
  double scale = 1.0;
  double body_radius = 20.0;
  Vec3 core_center = Vec3(6.0, 3.0, 2.0);
  double core_radius = 8.0;
  Vec3 blob_center = Vec3(-8.0, -6.0, 5.0);
  double blob_sigma = 4.0;
  double blob_amplitude = 0.3;
  double edge_width = 1.0;  // logistic edge, mm

  double intensity(const Vec3& p) const;
  std::int32_t label(const Vec3& p) const;
};

// size^3 voxels at 1 mm, world origin at the grid center.
Geometry phantom_geometry(int size);
PhantomShape phantom_shape(int size);

// u(x) = amplitude * exp(-|x - center|^2 / (2 sigma^2)).
struct GaussianBump {
  Vec3 center = Vec3::Zero();
  Vec3 amplitude = Vec3::Zero();
  double sigma = 10.0;

  Vec3 displacement(const Vec3& x) const;
};

// The bump used throughout the synthetic tests: 4 mm peak pushing the
// sphere surface outward near +x.
GaussianBump phantom_bump(int size);

// x -> bump(affine(x)); either part may be absent.
struct SyntheticWarp {
  std::optional<AffineTransform> affine;
  std::optional<GaussianBump> bump;

  Vec3 apply(const Vec3& x) const;
  // Affine inverse after fixed-point inversion of the bump to 1e-12 mm.
  Vec3 inverse(const Vec3& y) const;
  // apply(x) - x at every voxel center.
  DenseDisplacementField dense(const Geometry& g) const;
};

struct PhantomImages {
  ImageVolume intensity;  // f32
  ImageVolume labels;     // u8
};

// Images of the phantom seen through `warp`: value at y is phantom(warp^-1(y)).
PhantomImages render_phantom(const PhantomShape& shape, const Geometry& g,
                             const std::optional<SyntheticWarp>& warp = std::nullopt);

}  // namespace hexmorph
