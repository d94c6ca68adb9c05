#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "hexmorph/geometry.hpp"
#include "hexmorph/volume.hpp"

namespace hexmorph {

// Every transform maps atlas-space points to target-space points, in mm.

// What to do with points outside a transform's support.
enum class DomainPolicy { strict, permissive };

struct AffineTransform {
  Mat3 matrix = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static AffineTransform identity() { return {}; }
  static AffineTransform from_parameters(std::span<const double, 12> params);

  Vec3 apply(const Vec3& p) const { return matrix * p + translation; }

  // Row-major matrix, then translation.
  std::array<double, 12> parameters() const;

  // Throws when |det| <= 1e-12.
  void validate() const;
};

// Uniform cubic B-spline basis values for fraction t in [0, 1).
std::array<double, 4> bspline_weights(double t);

// Cubic B-spline free-form deformation over an axis-aligned control lattice.
// Control point (i,j,k) sits at grid_origin + (i,j,k) .* grid_spacing. The
// lattice evaluates points whose grid coordinates lie in [1, dims-2]; this
// leaves one control point of margin on every side.
class BSplineFFD {
 public:
  BSplineFFD(Vec3 grid_origin, Vec3 grid_spacing, Dims3 grid_dims,
             std::optional<AffineTransform> pre_affine = std::nullopt);

  // Smallest lattice with the given spacing whose evaluation domain covers
  // [lo, hi].
  static BSplineFFD covering(const Box3& domain, const Vec3& spacing,
                             std::optional<AffineTransform> pre_affine = std::nullopt);

  const Vec3& grid_origin() const { return origin_; }
  const Vec3& grid_spacing() const { return spacing_; }
  const Dims3& grid_dims() const { return dims_; }
  const std::optional<AffineTransform>& pre_affine() const { return pre_affine_; }

  std::size_t control_count() const { return coefficients_.size(); }
  std::size_t control_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k));
  }
  std::span<const Vec3> coefficients() const { return coefficients_; }
  std::span<Vec3> coefficients() { return coefficients_; }

  // Evaluation domain in the lattice's (post pre-affine) space.
  Box3 domain() const;

  // Control base index and per-axis weights for a lattice-space point.
  // Returns nullopt outside the domain in strict mode; clamps otherwise.
  struct Support {
    std::array<std::int64_t, 3> base{};
    std::array<std::array<double, 4>, 3> weights{};
  };
  std::optional<Support> support(const Vec3& q, DomainPolicy policy) const;

  Vec3 displacement(const Support& s) const;

  // pre_affine(p) + displacement; throws out_of_domain in strict mode.
  Vec3 apply(const Vec3& p, DomainPolicy policy) const;

  // Same deformation on a lattice with half the spacing (exact subdivision).
  BSplineFFD refined() const;

 private:
  Vec3 origin_;
  Vec3 spacing_;
  Dims3 dims_;
  std::optional<AffineTransform> pre_affine_;
  std::vector<Vec3> coefficients_;
};

// u(x) sampled on a grid; T(x) = x + u(x).
struct DenseDisplacementField {
  explicit DenseDisplacementField(ImageVolume field);
  ImageVolume field;
};

using Transform = std::variant<AffineTransform, BSplineFFD, DenseDisplacementField>;

const char* transform_name(const Transform& t);

// Dense fields are strict about the voxel-corner extent of their grid.
Vec3 apply_transform(const Transform& t, const Vec3& p,
                     DomainPolicy policy = DomainPolicy::permissive);

// Field on the reference grid holding apply_transform(t, x) - x.
DenseDisplacementField to_dense(const Transform& t, const Geometry& reference,
                                DomainPolicy policy = DomainPolicy::permissive);

struct InversionResult {
  DenseDisplacementField inverse;
  // max_x |u(x + v(x)) + v(x)| over grid voxels for the returned v.
  double residual_mm = 0.0;
  int iterations = 0;
  bool converged = false;
  // Largest per-voxel update of each iteration.
  std::vector<double> update_trace;
  // residual > 10 * tol; reported, not thrown.
  bool warning = false;
};

// Fixed-point inversion v <- -u(x + v), v0 = 0, on the field's own grid.
InversionResult invert_dense(const DenseDisplacementField& f, int max_iter = 50, double tol = 0.01);

// Reads a precomputed displacement field (e.g. a learned registration's
// output) and rejects non-vector volumes and non-finite components.
DenseDisplacementField load_external_field(const std::filesystem::path& path);

// JSON documents tagged "convention": "atlas-to-target, world-mm".
void save_transform_json(const AffineTransform& t, const std::filesystem::path& path);
void save_transform_json(const BSplineFFD& t, const std::filesystem::path& path);

// .json -> affine or FFD; .nii / .nii.gz -> dense field.
Transform load_transform(const std::filesystem::path& path);

}  // namespace hexmorph
