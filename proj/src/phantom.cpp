#include "hexmorph/phantom.hpp"

#include <cmath>

#include "hexmorph/errors.hpp"

namespace hexmorph {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double PhantomShape::intensity(const Vec3& p) const {
  const double body = logistic((scale * body_radius - p.norm()) / edge_width);
  const double core = logistic((scale * core_radius - (p - scale * core_center).norm()) / edge_width);
  const double s = scale * blob_sigma;
  const double blob = blob_amplitude * std::exp(-(p - scale * blob_center).squaredNorm() / (2.0 * s * s));
  return 0.5 * body + 0.5 * core + blob;
}

std::int32_t PhantomShape::label(const Vec3& p) const {
  if ((p - scale * core_center).norm() <= scale * core_radius) return 2;
  if (p.norm() <= scale * body_radius) return 1;
  return 0;
}

Geometry phantom_geometry(int size) {
  if (size < 8) throw Error(ErrorKind::config, "phantom size must be at least 8");
  const double half = 0.5 * double(size - 1);
  return Geometry({size, size, size}, Vec3::Ones(), Vec3::Constant(-half));
}

PhantomShape phantom_shape(int size) {
  PhantomShape s;
  s.scale = double(size) / 64.0;
  return s;
}

Vec3 GaussianBump::displacement(const Vec3& x) const {
  return amplitude * std::exp(-(x - center).squaredNorm() / (2.0 * sigma * sigma));
}

GaussianBump phantom_bump(int size) {
  const double s = double(size) / 64.0;
  GaussianBump b;
  b.center = s * Vec3(16.0, -4.0, 3.0);
  b.amplitude = Vec3(4.0, 0.0, 0.0);
  b.sigma = 10.0 * s;
  return b;
}

Vec3 SyntheticWarp::apply(const Vec3& x) const {
  Vec3 y = affine ? affine->apply(x) : x;
  if (bump) y += bump->displacement(y);
  return y;
}

Vec3 SyntheticWarp::inverse(const Vec3& y) const {
  Vec3 z = y;
  if (bump) {
    // z + u(z) = y; u is a contraction for the bumps used here.
    for (int it = 0; it < 200; ++it) {
      const Vec3 next = y - bump->displacement(z);
      const double change = (next - z).norm();
      z = next;
      if (change < 1e-12) break;
    }
  }
  if (affine) z = affine->matrix.inverse() * (z - affine->translation);
  return z;
}

DenseDisplacementField SyntheticWarp::dense(const Geometry& g) const {
  const std::int64_t n = g.voxel_count();
  std::vector<double> values(static_cast<std::size_t>(3 * n));
  const Dims3& d = g.dims();
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 x = g.voxel_center(i, j, k);
        const Vec3 u = apply(x) - x;
        const std::int64_t idx = g.linear_index(i, j, k);
        for (int c = 0; c < 3; ++c) values[static_cast<std::size_t>(c * n + idx)] = u[c];
      }
  return DenseDisplacementField(ImageVolume(g, VolumeKind::vector_field, VoxelType::f32, std::move(values)));
}

PhantomImages render_phantom(const PhantomShape& shape, const Geometry& g,
                             const std::optional<SyntheticWarp>& warp) {
  const std::int64_t n = g.voxel_count();
  std::vector<double> intensity(static_cast<std::size_t>(n));
  std::vector<double> labels(static_cast<std::size_t>(n));
  const Dims3& d = g.dims();
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        Vec3 p = g.voxel_center(i, j, k);
        if (warp) p = warp->inverse(p);
        const auto idx = static_cast<std::size_t>(g.linear_index(i, j, k));
        intensity[idx] = shape.intensity(p);
        labels[idx] = shape.label(p);
      }
  return {ImageVolume(g, VolumeKind::intensity, VoxelType::f32, std::move(intensity)),
          ImageVolume(g, VolumeKind::label, VoxelType::u8, std::move(labels))};
}

}  // namespace hexmorph
