#include "hexmorph/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hexmorph/errors.hpp"
#include "hexmorph/nifti.hpp"

namespace hexmorph {

namespace {
constexpr const char* kConvention = "atlas-to-target, world-mm";

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

AffineTransform AffineTransform::from_parameters(std::span<const double, 12> params) {
  AffineTransform t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t.matrix(r, c) = params[static_cast<std::size_t>(3 * r + c)];
  t.translation = Vec3(params[9], params[10], params[11]);
  return t;
}

std::array<double, 12> AffineTransform::parameters() const {
  std::array<double, 12> p{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p[static_cast<std::size_t>(3 * r + c)] = matrix(r, c);
  p[9] = translation.x();
  p[10] = translation.y();
  p[11] = translation.z();
  return p;
}

void AffineTransform::validate() const {
  if (!matrix.allFinite() || !translation.allFinite())
    throw Error(ErrorKind::data, "affine transform has non-finite entries");
  if (!(std::abs(matrix.determinant()) > 1e-12))
    throw Error(ErrorKind::data, "affine matrix is singular");
}

std::array<double, 4> bspline_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double omt = 1.0 - t;
  return {omt * omt * omt / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
          (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

BSplineFFD::BSplineFFD(Vec3 grid_origin, Vec3 grid_spacing, Dims3 grid_dims,
                       std::optional<AffineTransform> pre_affine)
    : origin_(grid_origin), spacing_(grid_spacing), dims_(grid_dims), pre_affine_(pre_affine) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 4) throw Error(ErrorKind::degenerate_input, "FFD lattice needs >= 4 control points per axis");
    if (!(spacing_[a] > 0.0)) throw Error(ErrorKind::data, "FFD spacing must be positive");
  }
  if (pre_affine_) pre_affine_->validate();
  coefficients_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]), Vec3::Zero());
}

BSplineFFD BSplineFFD::covering(const Box3& domain, const Vec3& spacing,
                                std::optional<AffineTransform> pre_affine) {
  Dims3 dims{};
  for (int a = 0; a < 3; ++a) {
    const double extent = domain.hi[a] - domain.lo[a];
    const auto cells = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / spacing[a] - 1e-9)));
    dims[a] = cells + 3;
  }
  return BSplineFFD(domain.lo - spacing, spacing, dims, pre_affine);
}

Box3 BSplineFFD::domain() const {
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = origin_[a] + spacing_[a];
    b.hi[a] = origin_[a] + spacing_[a] * double(dims_[a] - 2);
  }
  return b;
}

std::optional<BSplineFFD::Support> BSplineFFD::support(const Vec3& q, DomainPolicy policy) const {
  Support s;
  for (int a = 0; a < 3; ++a) {
    double u = (q[a] - origin_[a]) / spacing_[a];
    const double hi = double(dims_[a] - 2);
    if (std::isnan(u)) {
      if (policy == DomainPolicy::strict) return std::nullopt;
      throw Error(ErrorKind::data, "NaN coordinate in FFD evaluation");
    }
    if (u < 1.0 || u > hi) {
      if (policy == DomainPolicy::strict) return std::nullopt;
      u = std::clamp(u, 1.0, hi);
    }
    double fl = std::floor(u);
    if (fl >= hi) fl = hi - 1.0;
    s.base[a] = static_cast<std::int64_t>(fl) - 1;
    s.weights[a] = bspline_weights(u - fl);
  }
  return s;
}

Vec3 BSplineFFD::displacement(const Support& s) const {
  Vec3 d = Vec3::Zero();
  for (int n = 0; n < 4; ++n) {
    Vec3 dz = Vec3::Zero();
    for (int m = 0; m < 4; ++m) {
      Vec3 dy = Vec3::Zero();
      const std::size_t row = control_index(s.base[0], s.base[1] + m, s.base[2] + n);
      for (int l = 0; l < 4; ++l) dy += s.weights[0][l] * coefficients_[row + l];
      dz += s.weights[1][m] * dy;
    }
    d += s.weights[2][n] * dz;
  }
  return d;
}

Vec3 BSplineFFD::apply(const Vec3& p, DomainPolicy policy) const {
  const Vec3 q = pre_affine_ ? pre_affine_->apply(p) : p;
  const auto s = support(q, policy);
  if (!s) throw Error(ErrorKind::out_of_domain, "point outside the FFD control lattice domain");
  return q + displacement(*s);
}

namespace {

// One-dimensional exact halving of a uniform cubic B-spline, along `axis`.
std::vector<Vec3> subdivide_axis(const std::vector<Vec3>& in, const Dims3& dims, int axis, Dims3& out_dims) {
  out_dims = dims;
  const std::int64_t g = dims[axis];
  out_dims[axis] = 2 * g - 1;
  std::vector<Vec3> out(static_cast<std::size_t>(out_dims[0] * out_dims[1] * out_dims[2]));
  const std::int64_t in_stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
  const std::int64_t out_stride = axis == 0 ? 1 : (axis == 1 ? out_dims[0] : out_dims[0] * out_dims[1]);

  Dims3 line_dims = dims;
  line_dims[axis] = 1;
  for (std::int64_t k = 0; k < line_dims[2]; ++k)
    for (std::int64_t j = 0; j < line_dims[1]; ++j)
      for (std::int64_t i = 0; i < line_dims[0]; ++i) {
        const std::int64_t in_base = i + dims[0] * (j + dims[1] * k);
        const std::int64_t out_base = i + out_dims[0] * (j + out_dims[1] * k);
        auto c = [&](std::int64_t m) -> Vec3 {
          // Linear extrapolation one step past either end.
          if (m < 0) return 2.0 * in[static_cast<std::size_t>(in_base)] - in[static_cast<std::size_t>(in_base + in_stride)];
          if (m >= g)
            return 2.0 * in[static_cast<std::size_t>(in_base + (g - 1) * in_stride)] -
                   in[static_cast<std::size_t>(in_base + (g - 2) * in_stride)];
          return in[static_cast<std::size_t>(in_base + m * in_stride)];
        };
        for (std::int64_t m = 0; m < g; ++m) {
          out[static_cast<std::size_t>(out_base + 2 * m * out_stride)] = (c(m - 1) + 6.0 * c(m) + c(m + 1)) / 8.0;
          if (m + 1 < g)
            out[static_cast<std::size_t>(out_base + (2 * m + 1) * out_stride)] = 0.5 * (c(m) + c(m + 1));
        }
      }
  return out;
}

}  // namespace

BSplineFFD BSplineFFD::refined() const {
  std::vector<Vec3> work = coefficients_;
  Dims3 dims = dims_;
  for (int axis = 0; axis < 3; ++axis) {
    Dims3 next;
    work = subdivide_axis(work, dims, axis, next);
    dims = next;
  }
  BSplineFFD out(origin_, 0.5 * spacing_, dims, pre_affine_);
  out.coefficients_ = std::move(work);
  return out;
}

DenseDisplacementField::DenseDisplacementField(ImageVolume f) : field(std::move(f)) {
  if (field.kind() != VolumeKind::vector_field)
    throw Error(ErrorKind::format, "dense displacement field must be a vector-field volume");
}

const char* transform_name(const Transform& t) {
  return std::visit(overloaded{[](const AffineTransform&) { return "affine"; },
                               [](const BSplineFFD&) { return "bspline"; },
                               [](const DenseDisplacementField&) { return "dense"; }},
                    t);
}

namespace {

bool inside_voxel_extent(const Geometry& g, const Vec3& p) {
  const Vec3 ijk = g.world_to_index(p);
  for (int a = 0; a < 3; ++a)
    if (!(ijk[a] >= -0.5 && ijk[a] <= double(g.dims()[a]) - 0.5)) return false;
  return true;
}

}  // namespace

Vec3 apply_transform(const Transform& t, const Vec3& p, DomainPolicy policy) {
  return std::visit(
      overloaded{[&](const AffineTransform& a) -> Vec3 { return a.apply(p); },
                 [&](const BSplineFFD& f) -> Vec3 { return f.apply(p, policy); },
                 [&](const DenseDisplacementField& d) -> Vec3 {
                   if (policy == DomainPolicy::strict && !inside_voxel_extent(d.field.geometry(), p))
                     throw Error(ErrorKind::out_of_domain, "point outside the displacement field grid");
                   return p + sample_trilinear_vector(d.field, p);
                 }},
      t);
}

DenseDisplacementField to_dense(const Transform& t, const Geometry& reference, DomainPolicy policy) {
  const std::int64_t n = reference.voxel_count();
  std::vector<double> values(static_cast<std::size_t>(3 * n));
  const Dims3& d = reference.dims();
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 x = reference.voxel_center(i, j, k);
        const Vec3 u = apply_transform(t, x, policy) - x;
        const auto idx = static_cast<std::size_t>(reference.linear_index(i, j, k));
        values[idx] = u.x();
        values[idx + static_cast<std::size_t>(n)] = u.y();
        values[idx + static_cast<std::size_t>(2 * n)] = u.z();
      }
  return DenseDisplacementField(ImageVolume(reference, VolumeKind::vector_field, VoxelType::f32, std::move(values)));
}

namespace {

double inversion_residual(const DenseDisplacementField& forward, const ImageVolume& inverse) {
  const Geometry& g = inverse.geometry();
  const Dims3& d = g.dims();
  double worst = 0.0;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 x = g.voxel_center(i, j, k);
        const Vec3 v(inverse.at(i, j, k, 0), inverse.at(i, j, k, 1), inverse.at(i, j, k, 2));
        const Vec3 r = sample_trilinear_vector(forward.field, x + v) + v;
        worst = std::max(worst, r.norm());
      }
  return worst;
}

}  // namespace

InversionResult invert_dense(const DenseDisplacementField& f, int max_iter, double tol) {
  if (max_iter < 1) throw Error(ErrorKind::config, "invert_dense needs max_iter >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::config, "invert_dense needs tol > 0");
  const Geometry& g = f.field.geometry();
  const Dims3& d = g.dims();
  const std::int64_t n = g.voxel_count();
  std::vector<Vec3> v(static_cast<std::size_t>(n), Vec3::Zero());

  InversionResult result{f, 0.0, 0, false, {}, false};
  for (int it = 0; it < max_iter; ++it) {
    double max_update = 0.0;
    std::vector<Vec3> next(v.size());
    for (std::int64_t k = 0; k < d[2]; ++k)
      for (std::int64_t j = 0; j < d[1]; ++j)
        for (std::int64_t i = 0; i < d[0]; ++i) {
          const auto idx = static_cast<std::size_t>(g.linear_index(i, j, k));
          const Vec3 x = g.voxel_center(i, j, k);
          next[idx] = -sample_trilinear_vector(f.field, x + v[idx]);
          max_update = std::max(max_update, (next[idx] - v[idx]).norm());
        }
    v.swap(next);
    result.iterations = it + 1;
    result.update_trace.push_back(max_update);
    if (max_update < tol) {
      result.converged = true;
      break;
    }
  }

  std::vector<double> values(static_cast<std::size_t>(3 * n));
  for (std::int64_t idx = 0; idx < n; ++idx)
    for (int c = 0; c < 3; ++c)
      values[static_cast<std::size_t>(c * n + idx)] = v[static_cast<std::size_t>(idx)][c];
  ImageVolume inverse(g, VolumeKind::vector_field, VoxelType::f32, std::move(values));
  result.residual_mm = inversion_residual(f, inverse);
  result.warning = result.residual_mm > 10.0 * tol;
  result.inverse = DenseDisplacementField(std::move(inverse));
  return result;
}

DenseDisplacementField load_external_field(const std::filesystem::path& path) {
  ImageVolume vol = load_nifti(path);
  if (vol.kind() != VolumeKind::vector_field)
    throw Error(ErrorKind::format, path.string() + ": not a displacement field (expected dim[0] = 5, dim[5] = 3)");
  const Geometry& g = vol.geometry();
  const Dims3& d = g.dims();
  for (int c = 0; c < 3; ++c)
    for (std::int64_t k = 0; k < d[2]; ++k)
      for (std::int64_t j = 0; j < d[1]; ++j)
        for (std::int64_t i = 0; i < d[0]; ++i)
          if (!std::isfinite(vol.at(i, j, k, c)))
            throw Error(ErrorKind::data,
                        path.string() + ": non-finite displacement at voxel (" + std::to_string(i) + ", " +
                            std::to_string(j) + ", " + std::to_string(k) + ") component " + std::to_string(c),
                        {i, j, k});
  return DenseDisplacementField(std::move(vol));
}

namespace {

nlohmann::json affine_json(const AffineTransform& t) {
  const auto p = t.parameters();
  return nlohmann::json{{"type", "affine"}, {"convention", kConvention}, {"parameters", p}};
}

AffineTransform affine_from_json(const nlohmann::json& j, const std::string& where) {
  const auto& params = j.at("parameters");
  if (!params.is_array() || params.size() != 12)
    throw Error(ErrorKind::format, where + ": affine needs 12 parameters");
  std::array<double, 12> p{};
  for (std::size_t i = 0; i < 12; ++i) p[i] = params[i].get<double>();
  AffineTransform t = AffineTransform::from_parameters(p);
  t.validate();
  return t;
}

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::format, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

bool is_nifti_path(const std::filesystem::path& path) {
  const std::string s = path.string();
  auto ends_with = [&](const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".nii") || ends_with(".nii.gz");
}

}  // namespace

void save_transform_json(const AffineTransform& t, const std::filesystem::path& path) {
  write_json(affine_json(t), path);
}

void save_transform_json(const BSplineFFD& t, const std::filesystem::path& path) {
  std::vector<double> coeffs;
  coeffs.reserve(3 * t.control_count());
  for (const Vec3& c : t.coefficients()) coeffs.insert(coeffs.end(), {c.x(), c.y(), c.z()});
  nlohmann::json j{{"type", "bspline_ffd"},
                   {"convention", kConvention},
                   {"grid_origin", {t.grid_origin().x(), t.grid_origin().y(), t.grid_origin().z()}},
                   {"grid_spacing", {t.grid_spacing().x(), t.grid_spacing().y(), t.grid_spacing().z()}},
                   {"grid_dims", t.grid_dims()},
                   {"coefficients", coeffs}};
  j["pre_affine"] = t.pre_affine() ? affine_json(*t.pre_affine()) : nlohmann::json(nullptr);
  write_json(j, path);
}

Transform load_transform(const std::filesystem::path& path) {
  if (is_nifti_path(path)) return load_external_field(path);
  if (path.extension() != ".json")
    throw Error(ErrorKind::format, path.string() + ": unrecognised transform file extension");
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.value("convention", std::string()) != kConvention)
      throw Error(ErrorKind::format, path.string() + ": missing or unknown \"convention\" tag");
    const std::string type = j.at("type").get<std::string>();
    if (type == "affine") return affine_from_json(j, path.string());
    if (type == "bspline_ffd") {
      std::optional<AffineTransform> pre;
      if (!j.at("pre_affine").is_null()) pre = affine_from_json(j.at("pre_affine"), path.string());
      const auto dims = j.at("grid_dims").get<std::array<std::int64_t, 3>>();
      BSplineFFD ffd(vec_from_json(j.at("grid_origin")), vec_from_json(j.at("grid_spacing")), dims, pre);
      const auto& coeffs = j.at("coefficients");
      if (!coeffs.is_array() || coeffs.size() != 3 * ffd.control_count())
        throw Error(ErrorKind::format, path.string() + ": coefficient count does not match grid_dims");
      auto out = ffd.coefficients();
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = Vec3(coeffs[3 * i].get<double>(), coeffs[3 * i + 1].get<double>(), coeffs[3 * i + 2].get<double>());
      return ffd;
    }
    throw Error(ErrorKind::format, path.string() + ": unknown transform type \"" + type + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
}

}  // namespace hexmorph
