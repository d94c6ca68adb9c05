#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "hexmorph/volume.hpp"

namespace testing {

// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline hexmorph::Vec3 random_point(std::mt19937_64& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline hexmorph::Mat3 random_rotation(std::mt19937_64& rng) {
  Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  q.normalize();
  return q.toRotationMatrix();
}

// Sum of a few random low-frequency sinusoids: smooth but not symmetric.
inline hexmorph::ImageVolume smooth_random_volume(const hexmorph::Geometry& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  struct Wave {
    hexmorph::Vec3 k;
    double phase, amp;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 4; ++w)
    waves.push_back({random_point(rng, -0.35, 0.35), uniform(rng, 0, 6.28), uniform(rng, 0.3, 1.0)});
  std::vector<double> v(static_cast<std::size_t>(g.voxel_count()));
  const auto& d = g.dims();
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const hexmorph::Vec3 p = g.voxel_center(i, j, k);
        double s = 0.0;
        for (const Wave& w : waves) s += w.amp * std::sin(w.k.dot(p) + w.phase);
        v[static_cast<std::size_t>(g.linear_index(i, j, k))] = s;
      }
  return hexmorph::ImageVolume(g, hexmorph::VolumeKind::intensity, hexmorph::VoxelType::f32, std::move(v));
}

inline hexmorph::BinaryMask random_mask(const hexmorph::Geometry& g, double density, std::mt19937_64& rng) {
  hexmorph::BinaryMask m{g, std::vector<std::uint8_t>(static_cast<std::size_t>(g.voxel_count()))};
  for (auto& b : m.bits) b = uniform(rng, 0, 1) < density ? 1 : 0;
  return m;
}

}  // namespace testing
