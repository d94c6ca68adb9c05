#include <doctest.h>

#include <cmath>
#include <random>

#include "hexmorph/errors.hpp"
#include "hexmorph/volume.hpp"
#include "test_support.hpp"

using namespace hexmorph;

namespace {

ImageVolume ramp_volume(const Geometry& g, const Vec3& slope, double offset) {
  std::vector<double> v(static_cast<std::size_t>(g.voxel_count()));
  const auto& d = g.dims();
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i)
        v[static_cast<std::size_t>(g.linear_index(i, j, k))] = offset + slope.dot(Vec3(double(i), double(j), double(k)));
  return ImageVolume(g, VolumeKind::intensity, VoxelType::f32, std::move(v));
}

}  // namespace

TEST_SUITE("volume") {
  TEST_CASE("index_to_world examples") {
    const Geometry unit({4, 4, 4}, Vec3::Ones());
    CHECK((unit.index_to_world(Vec3(2, 3, 4)) - Vec3(2, 3, 4)).norm() == 0.0);
    const Geometry g({4, 4, 4}, Vec3::Constant(0.5), Vec3(10, 0, 0));
    CHECK((g.index_to_world(Vec3(2, 0, 0)) - Vec3(11, 0, 0)).norm() < 1e-12);
  }

  TEST_CASE("world_to_index inverts index_to_world") {
    std::mt19937_64 rng(7);
    const Geometry g({10, 12, 14}, Vec3(0.7, 1.3, 2.1), Vec3(-5, 3, 11), testing::random_rotation(rng));
    for (int n = 0; n < 1000; ++n) {
      const Vec3 ijk = testing::random_point(rng, -20, 40);
      const Vec3 back = g.world_to_index(g.index_to_world(ijk));
      CHECK((back - ijk).norm() <= 1e-9 * std::max(1.0, ijk.norm()));
    }
  }

  TEST_CASE("geometry invariants are enforced") {
    CHECK_THROWS_AS(Geometry({0, 4, 4}, Vec3::Ones()), Error);
    CHECK_THROWS_AS(Geometry({4, 4, 4}, Vec3(1, 0, 1)), Error);
    Mat3 skewed = Mat3::Identity();
    skewed(0, 1) = 0.1;
    CHECK_THROWS_AS(Geometry({4, 4, 4}, Vec3::Ones(), Vec3::Zero(), skewed), Error);
    CHECK_THROWS_AS(ImageVolume(Geometry({2, 2, 2}, Vec3::Ones()), VolumeKind::intensity, VoxelType::f32, {1, 2}),
                    Error);
  }

  TEST_CASE("values are quantized to the storage type") {
    const Geometry g({2, 1, 1}, Vec3::Ones());
    const ImageVolume u8(g, VolumeKind::label, VoxelType::u8, {3.6, 300});
    CHECK(u8.at(0, 0, 0) == 4.0);
    CHECK(u8.at(1, 0, 0) == 255.0);
    const ImageVolume f32(g, VolumeKind::intensity, VoxelType::f32, {0.1, -2.5});
    CHECK(f32.at(0, 0, 0) == double(0.1f));
  }

  TEST_CASE("trilinear sampling") {
    const Geometry g({2, 1, 1}, Vec3::Ones());
    const ImageVolume v(g, VolumeKind::intensity, VoxelType::f32, {0.0, 1.0});
    CHECK(sample_trilinear(v, Vec3(0, 0, 0)) == 0.0);
    CHECK(sample_trilinear(v, Vec3(1, 0, 0)) == 1.0);
    CHECK(sample_trilinear(v, Vec3(0.5, 0, 0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sample_trilinear(v, Vec3(100, -40, 9)) == 1.0);
    CHECK(sample_trilinear(v, Vec3(-100, 3, 9)) == 0.0);

    std::mt19937_64 rng(3);
    const Geometry g2({6, 5, 4}, Vec3(1.5, 0.5, 2.0), Vec3(1, 2, 3), testing::random_rotation(rng));
    const ImageVolume r = testing::smooth_random_volume(g2, 11);
    for (std::int64_t k = 0; k < 4; ++k)
      for (std::int64_t j = 0; j < 5; ++j)
        for (std::int64_t i = 0; i < 6; ++i)
          CHECK(sample_trilinear(r, g2.voxel_center(i, j, k)) == doctest::Approx(r.at(i, j, k)).epsilon(1e-12));

    // An affine ramp in index space is reproduced exactly inside the grid.
    const ImageVolume ramp = ramp_volume(g2, Vec3(0.25, -0.5, 1.0), 3.0);
    for (int n = 0; n < 200; ++n) {
      const Vec3 ijk(testing::uniform(rng, 0, 5), testing::uniform(rng, 0, 4), testing::uniform(rng, 0, 3));
      const double expect = 3.0 + 0.25 * ijk.x() - 0.5 * ijk.y() + ijk.z();
      CHECK(sample_trilinear(ramp, g2.index_to_world(ijk)) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("trilinear gradient matches finite differences of the interpolant") {
    std::mt19937_64 rng(5);
    const Geometry g({7, 6, 5}, Vec3(1.0, 0.8, 1.3), Vec3(-2, 0, 1), testing::random_rotation(rng));
    const ImageVolume v = testing::smooth_random_volume(g, 21);
    const double h = 1e-6;
    for (int n = 0; n < 200; ++n) {
      const Vec3 ijk(testing::uniform(rng, 0.05, 5.95), testing::uniform(rng, 0.05, 4.95),
                     testing::uniform(rng, 0.05, 3.95));
      const Vec3 p = g.index_to_world(ijk);
      Vec3 grad;
      const double val = sample_trilinear_gradient(v, p, grad);
      CHECK(val == doctest::Approx(sample_trilinear(v, p)).epsilon(1e-14));
      for (int a = 0; a < 3; ++a) {
        Vec3 dp = Vec3::Zero();
        dp[a] = h;
        const double fd = (sample_trilinear(v, p + dp) - sample_trilinear(v, p - dp)) / (2 * h);
        CHECK(grad[a] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }

  TEST_CASE("nearest-label sampling and ties") {
    const Geometry g({2, 2, 1}, Vec3::Ones());
    const ImageVolume l(g, VolumeKind::label, VoxelType::u8, {1, 2, 3, 4});
    CHECK(sample_nearest(l, Vec3(1, 0, 0)) == 2);
    CHECK(sample_nearest(l, Vec3(0.4, 0, 0)) == 1);
    CHECK(sample_nearest(l, Vec3(0.6, 0, 0)) == 2);
    CHECK(sample_nearest(l, Vec3(0.5, 0, 0)) == 1);
    CHECK(sample_nearest(l, Vec3(0.5, 0.5, 0)) == 1);
    CHECK(sample_nearest(l, Vec3(0.5, 1.0, 0)) == 3);
    CHECK(sample_nearest(l, Vec3(50, 50, 50)) == 4);
    CHECK_THROWS_AS(sample_nearest(l.with_kind(VolumeKind::intensity), Vec3::Zero()), Error);
  }

  TEST_CASE("downsample2x shape, geometry, and constants") {
    const Geometry g({8, 8, 8}, Vec3(1.0, 2.0, 0.5), Vec3(3, -1, 2));
    const ImageVolume c = ImageVolume::filled(g, VolumeKind::intensity, VoxelType::f32, 2.5);
    const ImageVolume d = downsample2x(c);
    CHECK(d.geometry().dims() == Dims3{4, 4, 4});
    CHECK((d.geometry().spacing() - Vec3(2.0, 4.0, 1.0)).norm() == 0.0);
    CHECK((d.geometry().voxel_center(0, 0, 0) - g.voxel_center(0, 0, 0)).norm() < 1e-12);
    CHECK((d.geometry().voxel_center(1, 2, 3) - g.voxel_center(2, 4, 6)).norm() < 1e-12);
    for (double x : d.values()) CHECK(std::abs(x - 2.5) <= 1e-6);

    CHECK(downsample2x(ImageVolume::filled(Geometry({5, 5, 5}, Vec3::Ones()), VolumeKind::intensity,
                                           VoxelType::f32, 1.0))
              .geometry()
              .dims() == Dims3{3, 3, 3});
    CHECK_THROWS_AS(downsample2x(ImageVolume::filled(Geometry({1, 4, 4}, Vec3::Ones()), VolumeKind::intensity,
                                                     VoxelType::f32, 1.0)),
                    Error);
  }

  TEST_CASE("downsample2x equals a direct 3-D truncated Gaussian") {
    const Geometry g({9, 7, 6}, Vec3::Ones());
    const ImageVolume v = testing::smooth_random_volume(g, 4);
    const ImageVolume d = downsample2x(v);
    const auto& n = g.dims();
    for (std::int64_t K = 0; K < d.geometry().dims()[2]; ++K)
      for (std::int64_t J = 0; J < d.geometry().dims()[1]; ++J)
        for (std::int64_t I = 0; I < d.geometry().dims()[0]; ++I) {
          double num = 0.0, den = 0.0;
          for (std::int64_t k = 0; k < n[2]; ++k)
            for (std::int64_t j = 0; j < n[1]; ++j)
              for (std::int64_t i = 0; i < n[0]; ++i) {
                const std::int64_t di = i - 2 * I, dj = j - 2 * J, dk = k - 2 * K;
                if (std::abs(di) > 3 || std::abs(dj) > 3 || std::abs(dk) > 3) continue;
                const double w = std::exp(-0.5 * double(di * di + dj * dj + dk * dk));
                num += w * v.at(i, j, k);
                den += w;
              }
          CHECK(d.at(I, J, K) == doctest::Approx(num / den).epsilon(1e-6));
        }
  }

  TEST_CASE("binary masks and histograms agree") {
    const Geometry g({3, 3, 3}, Vec3::Ones());
    CHECK(binary_mask(ImageVolume::filled(g, VolumeKind::label, VoxelType::u8, 0), 1).count() == 0);
    std::vector<double> v(27, 0.0);
    for (int n : {0, 4, 5, 13, 26}) v[static_cast<std::size_t>(n)] = 7;
    v[3] = 2;
    const ImageVolume l(g, VolumeKind::label, VoxelType::i16, v);
    const auto hist = label_histogram(l);
    CHECK(binary_mask(l, 7).count() == 5);
    CHECK(hist.at(7) == 5);
    CHECK(binary_mask(l, 2).count() == hist.at(2));
    CHECK(foreground_mask(l).count() == 6);
  }

  TEST_CASE("surface voxels") {
    const Geometry g({5, 5, 5}, Vec3::Ones());
    BinaryMask single{g, std::vector<std::uint8_t>(125, 0)};
    single.bits[static_cast<std::size_t>(g.linear_index(2, 3, 1))] = 1;
    const auto s1 = surface_voxels(single);
    REQUIRE(s1.size() == 1);
    CHECK((s1[0] - g.voxel_center(2, 3, 1)).norm() == 0.0);

    BinaryMask block{g, std::vector<std::uint8_t>(125, 0)};
    for (int k = 1; k < 4; ++k)
      for (int j = 1; j < 4; ++j)
        for (int i = 1; i < 4; ++i) block.bits[static_cast<std::size_t>(g.linear_index(i, j, k))] = 1;
    CHECK(surface_voxels(block).size() == 26);

    BinaryMask slab{g, std::vector<std::uint8_t>(125, 0)};
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i) slab.bits[static_cast<std::size_t>(g.linear_index(i, j, 2))] = 1;
    CHECK(surface_voxels(slab).size() == 25);

    BinaryMask full{g, std::vector<std::uint8_t>(125, 1)};
    CHECK(surface_voxels(full).size() == 125 - 27);
    CHECK(surface_voxels(BinaryMask{g, std::vector<std::uint8_t>(125, 0)}).empty());

    std::mt19937_64 rng(9);
    const BinaryMask r = testing::random_mask(g, 0.6, rng);
    for (const Vec3& p : surface_voxels(r)) {
      const Vec3 ijk = g.world_to_index(p);
      CHECK(r.test(std::llround(ijk.x()), std::llround(ijk.y()), std::llround(ijk.z())));
    }
  }
}
