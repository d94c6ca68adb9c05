#include "hexmorph/nifti.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <Eigen/SVD>
#include <zlib.h>

#include "hexmorph/errors.hpp"

namespace hexmorph {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

constexpr std::int16_t kDtU8 = 2;
constexpr std::int16_t kDtI16 = 4;
constexpr std::int16_t kDtI32 = 8;
constexpr std::int16_t kDtF32 = 16;

constexpr std::int16_t kIntentLabel = 1002;
constexpr std::int16_t kIntentVector = 1007;
// Written into intent_name for displacement fields.
constexpr const char* kFieldTag = "disp_world_mm";

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::array<std::uint8_t, 1 << 16> chunk{};
  for (;;) {
    const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int errnum = 0;
      const std::string msg = gzerror(f, &errnum);
      gzclose(f);
      throw Error(ErrorKind::io, "read failed for " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return bytes;
}

class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  bool swap_;
};

template <typename T>
void put(std::vector<std::uint8_t>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

int bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
    case kDtU8: return 1;
    case kDtI16: return 2;
    case kDtI32: return 4;
    case kDtF32: return 4;
    default: return 0;
  }
}

VoxelType voxel_type_for(std::int16_t datatype) {
  switch (datatype) {
    case kDtU8: return VoxelType::u8;
    case kDtI16: return VoxelType::i16;
    case kDtI32: return VoxelType::i32;
    default: return VoxelType::f32;
  }
}

std::int16_t datatype_for(VoxelType type) {
  switch (type) {
    case VoxelType::u8: return kDtU8;
    case VoxelType::i16: return kDtI16;
    case VoxelType::i32: return kDtI32;
    case VoxelType::f32: return kDtF32;
  }
  return 0;
}

// Orthonormalize a direction decoded from float-precision header fields.
Mat3 clean_direction(const Mat3& m) {
  const double det = m.determinant();
  if (std::abs(std::abs(det) - 1.0) <= 1e-6 &&
      (m.transpose() * m).isApprox(Mat3::Identity(), 1e-6))
    return m;
  if (std::abs(std::abs(det) - 1.0) > 1e-3)
    throw Error(ErrorKind::unsupported, "sheared or scaled voxel-to-world matrix");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

Quaternion direction_to_quaternion(const Mat3& direction) {
  Quaternion q;
  Mat3 r = direction;
  if (r.determinant() < 0.0) {
    q.qfac = -1.0;
    r.col(2) = -r.col(2);
  }
  const double r11 = r(0, 0), r12 = r(0, 1), r13 = r(0, 2);
  const double r21 = r(1, 0), r22 = r(1, 1), r23 = r(1, 2);
  const double r31 = r(2, 0), r32 = r(2, 1), r33 = r(2, 2);
  double a = r11 + r22 + r33 + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r32 - r23) / a;
    c = 0.25 * (r13 - r31) / a;
    d = 0.25 * (r21 - r12) / a;
  } else {
    const double xd = 1.0 + r11 - (r22 + r33);
    const double yd = 1.0 + r22 - (r11 + r33);
    const double zd = 1.0 + r33 - (r11 + r22);
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r12 + r21) / b;
      d = 0.25 * (r13 + r31) / b;
      a = 0.25 * (r32 - r23) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r12 + r21) / c;
      d = 0.25 * (r23 + r32) / c;
      a = 0.25 * (r13 - r31) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r13 + r31) / d;
      c = 0.25 * (r23 + r32) / d;
      a = 0.25 * (r21 - r12) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  q.b = b;
  q.c = c;
  q.d = d;
  return q;
}

Mat3 quaternion_to_direction(const Quaternion& q) {
  double b = q.b, c = q.c, d = q.d;
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  Mat3 r;
  r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  if (q.qfac < 0.0) r.col(2) = -r.col(2);
  return r;
}

ImageVolume load_nifti(const std::filesystem::path& path, std::optional<VolumeKind> expected_kind) {
  const std::vector<std::uint8_t> bytes = read_all(path);
  if (bytes.size() < kHeaderSize)
    throw Error(ErrorKind::format, path.string() + ": shorter than a NIfTI-1 header");
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0)
    throw Error(ErrorKind::format, path.string() + ": magic is not \"n+1\"");

  bool swap = false;
  {
    const HeaderReader probe(bytes, false);
    const auto dim0 = probe.get<std::int16_t>(40);
    if (dim0 < 1 || dim0 > 7) swap = true;
  }
  const HeaderReader h(bytes, swap);
  const auto dim0 = h.get<std::int16_t>(40);
  if (dim0 < 1 || dim0 > 7) throw Error(ErrorKind::format, path.string() + ": bad dim[0]");
  if (h.get<std::int32_t>(0) != kHeaderSize)
    throw Error(ErrorKind::format, path.string() + ": sizeof_hdr is not 348");

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[static_cast<std::size_t>(i)] = h.get<std::int16_t>(40 + 2 * i);
  for (int i = dim0 + 1; i < 8; ++i) dim[static_cast<std::size_t>(i)] = 1;

  bool vector_field = false;
  if (dim0 == 5) {
    if (dim[4] != 1 || dim[5] != 3)
      throw Error(ErrorKind::unsupported,
                  path.string() + ": 5-D volumes must have dim[4] = 1 and dim[5] = 3");
    vector_field = true;
  } else if (dim0 == 4) {
    if (dim[4] != 1)
      throw Error(ErrorKind::unsupported, path.string() + ": 4-D time series are not supported");
  } else if (dim0 != 3) {
    throw Error(ErrorKind::unsupported,
                path.string() + ": dim[0] = " + std::to_string(dim0) + " is not supported");
  }
  for (int a = 1; a <= 3; ++a)
    if (dim[static_cast<std::size_t>(a)] < 1)
      throw Error(ErrorKind::format, path.string() + ": non-positive spatial dimension");

  const auto datatype = h.get<std::int16_t>(70);
  const int bpv = bytes_per_voxel(datatype);
  if (bpv == 0)
    throw Error(ErrorKind::unsupported,
                path.string() + ": datatype " + std::to_string(datatype) + " is not supported");
  if (vector_field && datatype != kDtF32)
    throw Error(ErrorKind::unsupported, path.string() + ": vector fields must be float32");

  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[static_cast<std::size_t>(i)] = h.get<float>(76 + 4 * i);
  const auto vox_offset = static_cast<std::int64_t>(h.get<float>(108));
  if (vox_offset < kHeaderSize) throw Error(ErrorKind::format, path.string() + ": bad vox_offset");
  const float slope = h.get<float>(112);
  const float inter = h.get<float>(116);
  const auto intent = h.get<std::int16_t>(68);
  const auto qform_code = h.get<std::int16_t>(252);
  const auto sform_code = h.get<std::int16_t>(254);

  const Dims3 dims{dim[1], dim[2], dim[3]};
  Vec3 spacing;
  Vec3 origin = Vec3::Zero();
  Mat3 direction = Mat3::Identity();
  if (sform_code > 0) {
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) = h.get<float>(280 + 16 * r + 4 * c);
      origin[r] = h.get<float>(280 + 16 * r + 12);
    }
    for (int c = 0; c < 3; ++c) {
      spacing[c] = m.col(c).norm();
      if (!(spacing[c] > 0.0)) throw Error(ErrorKind::format, path.string() + ": singular sform");
      m.col(c) /= spacing[c];
    }
    direction = clean_direction(m);
  } else if (qform_code > 0) {
    Quaternion q;
    q.b = h.get<float>(256);
    q.c = h.get<float>(260);
    q.d = h.get<float>(264);
    q.qfac = pixdim[0] < 0.0f ? -1.0 : 1.0;
    origin = Vec3(h.get<float>(268), h.get<float>(272), h.get<float>(276));
    for (int a = 0; a < 3; ++a) spacing[a] = std::abs(pixdim[static_cast<std::size_t>(a + 1)]);
    direction = clean_direction(quaternion_to_direction(q));
  } else {
    for (int a = 0; a < 3; ++a) spacing[a] = std::abs(pixdim[static_cast<std::size_t>(a + 1)]);
  }

  Geometry geom(dims, spacing, origin, direction);
  const int comps = vector_field ? 3 : 1;
  const std::int64_t count = geom.voxel_count() * comps;
  const std::int64_t needed = vox_offset + count * bpv;
  if (static_cast<std::int64_t>(bytes.size()) < needed)
    throw Error(ErrorKind::io, path.string() + ": truncated data section (" +
                                   std::to_string(bytes.size()) + " of " +
                                   std::to_string(needed) + " bytes)");

  std::vector<double> values(static_cast<std::size_t>(count));
  const HeaderReader data(bytes, swap);
  for (std::int64_t n = 0; n < count; ++n) {
    const auto off = static_cast<std::size_t>(vox_offset + n * bpv);
    double v = 0.0;
    switch (datatype) {
      case kDtU8: v = bytes[off]; break;
      case kDtI16: v = data.get<std::int16_t>(off); break;
      case kDtI32: v = data.get<std::int32_t>(off); break;
      case kDtF32: v = data.get<float>(off); break;
      default: break;
    }
    values[static_cast<std::size_t>(n)] = v;
  }

  VoxelType type = voxel_type_for(datatype);
  const bool scaled = slope != 0.0f && !(slope == 1.0f && inter == 0.0f);
  if (scaled) {
    for (double& v : values) v = v * slope + inter;
    type = VoxelType::f32;
  }

  VolumeKind kind = VolumeKind::intensity;
  if (vector_field) {
    kind = VolumeKind::vector_field;
    char name[17] = {};
    std::memcpy(name, bytes.data() + 328, 16);
    if (std::string(name).find("vox") != std::string::npos)
      throw Error(ErrorKind::unsupported,
                  path.string() + ": displacement field tagged in voxel units (\"" +
                      std::string(name) + "\"); world-mm expected");
  } else if (intent == kIntentLabel) {
    kind = VolumeKind::label;
  }

  ImageVolume vol(std::move(geom), kind, type, std::move(values));
  if (expected_kind && *expected_kind != kind) {
    if (*expected_kind == VolumeKind::vector_field || kind == VolumeKind::vector_field)
      throw Error(ErrorKind::format, path.string() + ": expected a " +
                                         to_string(*expected_kind) + " volume, found " +
                                         to_string(kind));
    return vol.with_kind(*expected_kind);
  }
  return vol;
}

void save_nifti(const ImageVolume& vol, const std::filesystem::path& path) {
  const Geometry& g = vol.geometry();
  const bool vector_field = vol.kind() == VolumeKind::vector_field;
  const std::int16_t datatype = datatype_for(vol.type());
  const int bpv = bytes_per_voxel(datatype);
  const std::int64_t count = g.voxel_count() * vol.components();
  for (int a = 0; a < 3; ++a)
    if (g.dims()[a] > 32767)
      throw Error(ErrorKind::unsupported, "dimension too large for NIfTI-1");

  std::vector<std::uint8_t> buf(static_cast<std::size_t>(kVoxOffset + count * bpv), 0);
  put<std::int32_t>(buf, 0, kHeaderSize);
  put<char>(buf, 38, 'r');
  std::array<std::int16_t, 8> dim{};
  dim.fill(1);
  dim[0] = vector_field ? 5 : 3;
  for (int a = 0; a < 3; ++a) dim[static_cast<std::size_t>(a + 1)] = static_cast<std::int16_t>(g.dims()[a]);
  if (vector_field) dim[5] = 3;
  for (int i = 0; i < 8; ++i) put<std::int16_t>(buf, 40 + 2 * i, dim[static_cast<std::size_t>(i)]);

  std::int16_t intent = 0;
  if (vector_field) intent = kIntentVector;
  else if (vol.kind() == VolumeKind::label) intent = kIntentLabel;
  put<std::int16_t>(buf, 68, intent);
  put<std::int16_t>(buf, 70, datatype);
  put<std::int16_t>(buf, 72, static_cast<std::int16_t>(bpv * 8));

  const Quaternion q = direction_to_quaternion(g.direction());
  std::array<float, 8> pixdim{};
  pixdim.fill(1.0f);
  pixdim[0] = static_cast<float>(q.qfac);
  pixdim[4] = 0.0f;
  for (int a = 0; a < 3; ++a) pixdim[static_cast<std::size_t>(a + 1)] = static_cast<float>(g.spacing()[a]);
  for (int i = 0; i < 8; ++i) put<float>(buf, 76 + 4 * i, pixdim[static_cast<std::size_t>(i)]);
  put<float>(buf, 108, static_cast<float>(kVoxOffset));
  put<float>(buf, 112, 1.0f);
  put<float>(buf, 116, 0.0f);
  put<std::uint8_t>(buf, 123, 2);  // mm

  const char* descrip = vector_field ? "hexmorph displacement (atlas-to-target, world-mm)" : "hexmorph";
  std::memcpy(buf.data() + 148, descrip, std::min<std::size_t>(std::strlen(descrip), 79));

  put<std::int16_t>(buf, 252, 1);
  put<std::int16_t>(buf, 254, 1);
  put<float>(buf, 256, static_cast<float>(q.b));
  put<float>(buf, 260, static_cast<float>(q.c));
  put<float>(buf, 264, static_cast<float>(q.d));
  for (int a = 0; a < 3; ++a) put<float>(buf, 268 + 4 * a, static_cast<float>(g.origin()[a]));

  const Mat3& m = g.index_to_world_matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) put<float>(buf, 280 + 16 * r + 4 * c, static_cast<float>(m(r, c)));
    put<float>(buf, 280 + 16 * r + 12, static_cast<float>(g.origin()[r]));
  }
  if (vector_field) std::memcpy(buf.data() + 328, kFieldTag, std::strlen(kFieldTag));
  std::memcpy(buf.data() + 344, "n+1\0", 4);

  const auto values = vol.values();
  for (std::int64_t n = 0; n < count; ++n) {
    const auto off = static_cast<std::size_t>(kVoxOffset + n * bpv);
    const double v = values[static_cast<std::size_t>(n)];
    switch (vol.type()) {
      case VoxelType::u8: buf[off] = static_cast<std::uint8_t>(v); break;
      case VoxelType::i16: put<std::int16_t>(buf, off, static_cast<std::int16_t>(v)); break;
      case VoxelType::i32: put<std::int32_t>(buf, off, static_cast<std::int32_t>(v)); break;
      case VoxelType::f32: put<float>(buf, off, static_cast<float>(v)); break;
    }
  }

  const bool gz = path.extension() == ".gz";
  if (gz) {
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (f == nullptr) throw Error(ErrorKind::io, "cannot write " + path.string());
    const int n = gzwrite(f, buf.data(), static_cast<unsigned>(buf.size()));
    const int rc = gzclose(f);
    if (n != static_cast<int>(buf.size()) || rc != Z_OK)
      throw Error(ErrorKind::io, "write failed for " + path.string());
  } else {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw Error(ErrorKind::io, "cannot write " + path.string());
    const std::size_t n = std::fwrite(buf.data(), 1, buf.size(), f);
    const int rc = std::fclose(f);
    if (n != buf.size() || rc != 0) throw Error(ErrorKind::io, "write failed for " + path.string());
  }
}

}  // namespace hexmorph
