#include "hexmorph/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hexmorph/errors.hpp"

namespace hexmorph {

const char* to_string(VoxelType type) {
  switch (type) {
    case VoxelType::u8: return "u8";
    case VoxelType::i16: return "i16";
    case VoxelType::i32: return "i32";
    case VoxelType::f32: return "f32";
  }
  return "?";
}

const char* to_string(VolumeKind kind) {
  switch (kind) {
    case VolumeKind::intensity: return "intensity";
    case VolumeKind::label: return "label";
    case VolumeKind::vector_field: return "vector-field";
  }
  return "?";
}

Geometry::Geometry() : Geometry({1, 1, 1}, Vec3::Ones()) {}

Geometry::Geometry(Dims3 dims, Vec3 spacing, Vec3 origin, Mat3 direction)
    : dims_(dims), spacing_(spacing), origin_(origin), direction_(direction) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] <= 0)
      throw Error(ErrorKind::degenerate_input, "volume dimension " + std::to_string(a) +
                                                   " must be positive, got " +
                                                   std::to_string(dims_[a]));
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
      throw Error(ErrorKind::data, "voxel spacing must be strictly positive");
  }
  if (!origin_.allFinite() || !direction_.allFinite())
    throw Error(ErrorKind::data, "non-finite volume geometry");
  if (std::abs(std::abs(direction_.determinant()) - 1.0) > 1e-6 ||
      !(direction_.transpose() * direction_).isApprox(Mat3::Identity(), 1e-6))
    throw Error(ErrorKind::data, "direction matrix is not orthonormal");
  index_to_world_ = direction_ * spacing_.asDiagonal();
  world_to_index_ = index_to_world_.inverse();
}

Box3 Geometry::center_bounds() const {
  Box3 box = Box3::empty_box();
  for (int c = 0; c < 8; ++c) {
    const Vec3 ijk((c & 1) ? double(dims_[0] - 1) : 0.0, (c & 2) ? double(dims_[1] - 1) : 0.0,
                   (c & 4) ? double(dims_[2] - 1) : 0.0);
    box.expand(index_to_world(ijk));
  }
  return box;
}

bool Geometry::matches(const Geometry& other, double tol) const {
  return dims_ == other.dims_ && (spacing_ - other.spacing_).cwiseAbs().maxCoeff() <= tol &&
         (origin_ - other.origin_).cwiseAbs().maxCoeff() <= tol &&
         (direction_ - other.direction_).cwiseAbs().maxCoeff() <= tol;
}

namespace {

double quantize(double v, VoxelType type) {
  if (type == VoxelType::f32) return static_cast<double>(static_cast<float>(v));
  if (!std::isfinite(v)) throw Error(ErrorKind::data, "non-finite value in integer volume");
  double lo = 0.0;
  double hi = 0.0;
  switch (type) {
    case VoxelType::u8: lo = 0; hi = 255; break;
    case VoxelType::i16: lo = -32768; hi = 32767; break;
    case VoxelType::i32: lo = -2147483648.0; hi = 2147483647.0; break;
    case VoxelType::f32: break;
  }
  return std::clamp(std::nearbyint(v), lo, hi);
}

}  // namespace

ImageVolume::ImageVolume(Geometry geometry, VolumeKind kind, VoxelType type,
                         std::vector<double> values)
    : geometry_(std::move(geometry)), kind_(kind), type_(type), values_(std::move(values)) {
  const auto expected = static_cast<std::size_t>(geometry_.voxel_count() * components());
  if (values_.size() != expected)
    throw Error(ErrorKind::data, "volume data length " + std::to_string(values_.size()) +
                                     " does not match geometry (" + std::to_string(expected) +
                                     ")");
  if (kind_ == VolumeKind::vector_field && type_ != VoxelType::f32)
    throw Error(ErrorKind::unsupported, "vector fields must be stored as f32");
  for (double& v : values_) v = quantize(v, type_);
}

ImageVolume ImageVolume::filled(Geometry geometry, VolumeKind kind, VoxelType type, double value) {
  const int comps = kind == VolumeKind::vector_field ? 3 : 1;
  std::vector<double> values(static_cast<std::size_t>(geometry.voxel_count() * comps), value);
  return ImageVolume(std::move(geometry), kind, type, std::move(values));
}

ImageVolume ImageVolume::with_kind(VolumeKind kind) const {
  if (kind == kind_) return *this;
  if (kind == VolumeKind::vector_field || kind_ == VolumeKind::vector_field)
    throw Error(ErrorKind::format, "cannot reinterpret a volume as/from a vector field");
  ImageVolume copy = *this;
  copy.kind_ = kind;
  return copy;
}

std::int64_t BinaryMask::count() const {
  return static_cast<std::int64_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

// Clamped 1-D interpolation stencil along one axis.
struct AxisStencil {
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  double f = 0.0;
  bool clamped = false;
};

AxisStencil axis_stencil(double x, std::int64_t n) {
  AxisStencil s;
  if (n == 1) {
    s.clamped = true;
    return s;
  }
  const double hi = static_cast<double>(n - 1);
  if (!(x > 0.0)) {  // also catches NaN
    s.i0 = 0;
    s.i1 = 1;
    s.f = 0.0;
    s.clamped = !(x == 0.0);
    return s;
  }
  if (x >= hi) {
    s.i0 = n - 2;
    s.i1 = n - 1;
    s.f = 1.0;
    s.clamped = x > hi;
    return s;
  }
  s.i0 = static_cast<std::int64_t>(std::floor(x));
  s.i1 = s.i0 + 1;
  s.f = x - static_cast<double>(s.i0);
  return s;
}

struct Stencil3 {
  AxisStencil ax[3];
  std::int64_t offsets[8];
  double weights[8];
};

Stencil3 make_stencil(const Geometry& g, const Vec3& p) {
  const Vec3 ijk = g.world_to_index(p);
  const Dims3& d = g.dims();
  Stencil3 s;
  for (int a = 0; a < 3; ++a) s.ax[a] = axis_stencil(ijk[a], d[a]);
  const double fx = s.ax[0].f, fy = s.ax[1].f, fz = s.ax[2].f;
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  const double wz[2] = {1.0 - fz, fz};
  const std::int64_t ix[2] = {s.ax[0].i0, s.ax[0].i1};
  const std::int64_t iy[2] = {s.ax[1].i0, s.ax[1].i1};
  const std::int64_t iz[2] = {s.ax[2].i0, s.ax[2].i1};
  for (int c = 0; c < 8; ++c) {
    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
    s.offsets[c] = g.linear_index(ix[bx], iy[by], iz[bz]);
    s.weights[c] = wx[bx] * wy[by] * wz[bz];
  }
  return s;
}

double apply_stencil(const Stencil3& s, const double* data) {
  double v = 0.0;
  for (int c = 0; c < 8; ++c)
    if (s.weights[c] != 0.0) v += s.weights[c] * data[s.offsets[c]];
  return v;
}

}  // namespace

double sample_trilinear(const ImageVolume& vol, const Vec3& p) {
  const Stencil3 s = make_stencil(vol.geometry(), p);
  return apply_stencil(s, vol.values().data());
}

Vec3 sample_trilinear_vector(const ImageVolume& vol, const Vec3& p) {
  if (vol.kind() != VolumeKind::vector_field)
    throw Error(ErrorKind::format, "vector sampling requires a vector-field volume");
  const Stencil3 s = make_stencil(vol.geometry(), p);
  const double* base = vol.values().data();
  const std::int64_t n = vol.geometry().voxel_count();
  return {apply_stencil(s, base), apply_stencil(s, base + n), apply_stencil(s, base + 2 * n)};
}

double sample_trilinear_gradient(const ImageVolume& vol, const Vec3& p, Vec3& gradient) {
  const Geometry& g = vol.geometry();
  const Stencil3 s = make_stencil(g, p);
  const double* data = vol.values().data();
  double v[8];
  for (int c = 0; c < 8; ++c) v[c] = data[s.offsets[c]];
  const double fx = s.ax[0].f, fy = s.ax[1].f, fz = s.ax[2].f;
  // Corner c = bx + 2 by + 4 bz.
  const double c00 = v[0] + fx * (v[1] - v[0]);
  const double c10 = v[2] + fx * (v[3] - v[2]);
  const double c01 = v[4] + fx * (v[5] - v[4]);
  const double c11 = v[6] + fx * (v[7] - v[6]);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);

  Vec3 d_index;
  const double dx00 = v[1] - v[0], dx10 = v[3] - v[2], dx01 = v[5] - v[4], dx11 = v[7] - v[6];
  const double dx0 = dx00 + fy * (dx10 - dx00);
  const double dx1 = dx01 + fy * (dx11 - dx01);
  d_index[0] = s.ax[0].clamped ? 0.0 : dx0 + fz * (dx1 - dx0);
  d_index[1] = s.ax[1].clamped ? 0.0 : (c10 - c00) + fz * ((c11 - c01) - (c10 - c00));
  d_index[2] = s.ax[2].clamped ? 0.0 : c1 - c0;
  gradient = g.world_to_index_matrix().transpose() * d_index;
  return apply_stencil(s, data);
}

std::int32_t sample_nearest(const ImageVolume& vol, const Vec3& p) {
  if (vol.kind() != VolumeKind::label)
    throw Error(ErrorKind::format, "nearest-neighbor sampling requires a label volume");
  const Geometry& g = vol.geometry();
  const Vec3 ijk = g.world_to_index(p);
  std::int64_t idx[3];
  for (int a = 0; a < 3; ++a) {
    // ceil(x - 1/2) rounds half-way cases down.
    double r = std::ceil(ijk[a] - 0.5);
    if (!(r >= 0.0)) r = 0.0;
    idx[a] = std::min<std::int64_t>(static_cast<std::int64_t>(std::min(r, 9.0e18)),
                                    g.dims()[a] - 1);
  }
  return static_cast<std::int32_t>(vol.at(idx[0], idx[1], idx[2]));
}

namespace {

constexpr int kGaussRadius = 3;

// Smooth along one axis and keep every other sample along it.
std::vector<double> smooth_decimate_axis(const std::vector<double>& in, const Dims3& dims,
                                         int axis, Dims3& out_dims) {
  double kernel[2 * kGaussRadius + 1];
  for (int t = -kGaussRadius; t <= kGaussRadius; ++t)
    kernel[t + kGaussRadius] = std::exp(-0.5 * double(t * t));

  out_dims = dims;
  out_dims[axis] = (dims[axis] + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(out_dims[0] * out_dims[1] * out_dims[2]));
  const std::int64_t n = dims[axis];
  const std::int64_t stride_in = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);

  for (std::int64_t k = 0; k < out_dims[2]; ++k)
    for (std::int64_t j = 0; j < out_dims[1]; ++j)
      for (std::int64_t i = 0; i < out_dims[0]; ++i) {
        std::int64_t src[3] = {i, j, k};
        const std::int64_t center = 2 * src[axis];
        src[axis] = 0;
        const std::int64_t base = src[0] + dims[0] * (src[1] + dims[1] * src[2]);
        double acc = 0.0;
        double wsum = 0.0;
        for (int t = -kGaussRadius; t <= kGaussRadius; ++t) {
          const std::int64_t pos = center + t;
          if (pos < 0 || pos >= n) continue;
          const double w = kernel[t + kGaussRadius];
          acc += w * in[static_cast<std::size_t>(base + pos * stride_in)];
          wsum += w;
        }
        out[static_cast<std::size_t>(i + out_dims[0] * (j + out_dims[1] * k))] = acc / wsum;
      }
  return out;
}

}  // namespace

ImageVolume downsample2x(const ImageVolume& vol) {
  const Geometry& g = vol.geometry();
  for (int a = 0; a < 3; ++a)
    if (g.dims()[a] < 2)
      throw Error(ErrorKind::degenerate_input, "downsample2x needs every dimension >= 2");
  if (vol.kind() == VolumeKind::label)
    throw Error(ErrorKind::unsupported, "label volumes cannot be smoothed");

  const std::int64_t n = g.voxel_count();
  Dims3 out_dims = g.dims();
  std::vector<double> out_values;
  for (int c = 0; c < vol.components(); ++c) {
    std::vector<double> work(vol.values().begin() + c * n, vol.values().begin() + (c + 1) * n);
    Dims3 dims = g.dims();
    for (int axis = 0; axis < 3; ++axis) {
      Dims3 next;
      work = smooth_decimate_axis(work, dims, axis, next);
      dims = next;
    }
    out_dims = dims;
    out_values.insert(out_values.end(), work.begin(), work.end());
  }
  Geometry out_geom(out_dims, 2.0 * g.spacing(), g.origin(), g.direction());
  return ImageVolume(std::move(out_geom), vol.kind(), VoxelType::f32, std::move(out_values));
}

BinaryMask binary_mask(const ImageVolume& vol, std::int32_t label) {
  if (vol.kind() == VolumeKind::vector_field)
    throw Error(ErrorKind::format, "cannot threshold a vector field");
  BinaryMask mask{vol.geometry(), {}};
  mask.bits.reserve(vol.values().size());
  const double target = static_cast<double>(label);
  for (double v : vol.values()) mask.bits.push_back(v == target ? 1 : 0);
  return mask;
}

BinaryMask foreground_mask(const ImageVolume& vol) {
  if (vol.kind() == VolumeKind::vector_field)
    throw Error(ErrorKind::format, "cannot threshold a vector field");
  BinaryMask mask{vol.geometry(), {}};
  mask.bits.reserve(vol.values().size());
  for (double v : vol.values()) mask.bits.push_back(v != 0.0 ? 1 : 0);
  return mask;
}

std::map<std::int32_t, std::int64_t> label_histogram(const ImageVolume& vol) {
  std::map<std::int32_t, std::int64_t> hist;
  for (double v : vol.values()) ++hist[static_cast<std::int32_t>(v)];
  return hist;
}

std::vector<Vec3> surface_voxels(const BinaryMask& mask) {
  const Geometry& g = mask.geometry;
  const Dims3& d = g.dims();
  std::vector<Vec3> out;
  auto set = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    if (i < 0 || j < 0 || k < 0 || i >= d[0] || j >= d[1] || k >= d[2]) return false;
    return mask.test(i, j, k);
  };
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        if (!mask.test(i, j, k)) continue;
        if (set(i - 1, j, k) && set(i + 1, j, k) && set(i, j - 1, k) && set(i, j + 1, k) &&
            set(i, j, k - 1) && set(i, j, k + 1))
          continue;
        out.push_back(g.voxel_center(i, j, k));
      }
  return out;
}

}  // namespace hexmorph
