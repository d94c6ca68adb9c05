#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "hexmorph/errors.hpp"
#include "hexmorph/mesh.hpp"
#include "hexmorph/quality.hpp"
#include "test_support.hpp"

using namespace hexmorph;

namespace {

BinaryMask full_mask(const Geometry& g) { return {g, std::vector<std::uint8_t>(std::size_t(g.voxel_count()), 1)}; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

HexMesh sample_mesh() {
  const Geometry g({6, 4, 4}, Vec3(1.0, 0.5, 2.0), Vec3(3, -2, 1));
  HexMesh m = overlay_grid_mesh(full_mask(g), 2);
  LabelArray a{"material", std::vector<std::int32_t>(m.elements.size()), "centroid"};
  for (std::size_t e = 0; e < a.values.size(); ++e) a.values[e] = std::int32_t(e % 3) - 1;
  m.set_labels(a);
  m.set_labels({"region", std::vector<std::int32_t>(m.elements.size(), 7), ""});
  return m;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("overlay grid of a full block") {
    const Geometry g({4, 4, 4}, Vec3::Ones());
    const HexMesh m = overlay_grid_mesh(full_mask(g), 2);
    CHECK(m.elements.size() == 8);
    CHECK(m.nodes.size() == 27);
    Box3 box = Box3::empty_box();
    for (const Vec3& p : m.nodes) box.expand(p);
    CHECK((box.lo - Vec3::Constant(-0.5)).norm() == 0.0);
    CHECK((box.hi - Vec3::Constant(3.5)).norm() == 0.0);
    const QualityReport q = quality_report(m);
    CHECK(q.scaled_jacobian.min == doctest::Approx(1.0));
    CHECK(q.aspect_ratio.max == doctest::Approx(1.0));
    CHECK_NOTHROW(m.validate());
  }

  TEST_CASE("blocks need at least half their voxels") {
    const Geometry g({2, 2, 2}, Vec3::Ones());
    BinaryMask half{g, {1, 1, 1, 1, 0, 0, 0, 0}};
    CHECK(overlay_grid_mesh(half, 2).elements.size() == 1);
    BinaryMask three{g, {1, 1, 1, 0, 0, 0, 0, 0}};
    CHECK_THROWS_AS(overlay_grid_mesh(three, 2), Error);
    // Partial blocks at the border count against the full block volume.
    const Geometry g3({3, 2, 1}, Vec3::Ones());
    const HexMesh m = overlay_grid_mesh(full_mask(g3), 2);
    CHECK(m.elements.size() == 1);
    CHECK_THROWS_AS(overlay_grid_mesh(BinaryMask{g, std::vector<std::uint8_t>(8, 0)}, 1), Error);
  }

  TEST_CASE("overlay elements are positively oriented on any grid") {
    std::mt19937_64 rng(3);
    for (int flip = 0; flip < 2; ++flip) {
      Mat3 dir = testing::random_rotation(rng);
      if (flip) dir.col(0) *= -1.0;
      const Geometry g({5, 5, 5}, Vec3(0.7, 1.2, 0.9), Vec3(4, 5, 6), dir);
      const BinaryMask m = testing::random_mask(g, 0.7, rng);
      const HexMesh mesh = overlay_grid_mesh(m, 1);
      CHECK(std::int64_t(mesh.elements.size()) == m.count());
      CHECK(quality_report(mesh).scaled_jacobian.min == doctest::Approx(1.0));
      // Shared corners: no two nodes coincide.
      for (std::size_t a = 0; a < mesh.nodes.size(); ++a)
        for (std::size_t b = a + 1; b < mesh.nodes.size(); ++b) CHECK((mesh.nodes[a] - mesh.nodes[b]).norm() > 1e-6);
    }
  }

  TEST_CASE("validation catches broken meshes") {
    HexMesh m = sample_mesh();
    HexMesh bad = m;
    bad.elements[0][3] = 10000;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.elements[1][3] = bad.elements[1][4];
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = m;
    bad.label_arrays[0].values.pop_back();
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("morphing") {
    const HexMesh m = sample_mesh();
    const HexMesh same = morph_mesh(m, AffineTransform::identity());
    CHECK(same.nodes == m.nodes);
    CHECK(same.elements == m.elements);

    AffineTransform shift;
    shift.translation = Vec3(1.25, -3, 0.5);
    const HexMesh moved = morph_mesh(m, shift);
    for (std::size_t n = 0; n < m.nodes.size(); ++n) CHECK((moved.nodes[n] - m.nodes[n] - shift.translation).norm() < 1e-12);
    CHECK(moved.label_arrays.size() == 2);
    CHECK(moved.label_arrays[0].values == m.label_arrays[0].values);

    std::mt19937_64 rng(6);
    AffineTransform rigid;
    rigid.matrix = testing::random_rotation(rng);
    rigid.translation = testing::random_point(rng, -50, 50);
    const HexMesh r = morph_mesh(m, rigid);
    const QualityReport q0 = quality_report(m), q1 = quality_report(r);
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
      CHECK(std::abs(q0.per_element_scaled_jacobian[e] - q1.per_element_scaled_jacobian[e]) < 1e-9);
      CHECK(std::abs(q0.per_element_aspect_ratio[e] - q1.per_element_aspect_ratio[e]) < 1e-9);
      CHECK(std::abs(q0.per_element_skew[e] - q1.per_element_skew[e]) < 1e-9);
    }
    for (std::size_t a = 0; a < m.nodes.size(); a += 3)
      for (std::size_t b = a + 1; b < m.nodes.size(); b += 5) {
        const double d0 = (m.nodes[a] - m.nodes[b]).norm();
        CHECK(std::abs((r.nodes[a] - r.nodes[b]).norm() - d0) <= 1e-9 * d0);
      }
  }

  TEST_CASE("strict morphing lists every node outside the domain") {
    const HexMesh m = sample_mesh();
    // Field grid covering only part of the mesh.
    const Geometry g({4, 4, 4}, Vec3::Ones(), Vec3(3, -2, 1));
    const DenseDisplacementField f(ImageVolume::filled(g, VolumeKind::vector_field, VoxelType::f32, 0.0));
    std::vector<std::int64_t> expect;
    for (std::size_t n = 0; n < m.nodes.size(); ++n) {
      const Vec3 ijk = g.world_to_index(m.nodes[n]);
      if ((ijk.array() < -0.5).any() || (ijk.array() > 3.5).any()) expect.push_back(std::int64_t(n));
    }
    REQUIRE(!expect.empty());
    try {
      morph_mesh(m, f, DomainPolicy::strict);
      FAIL("expected out_of_domain");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::out_of_domain);
      CHECK(e.indices() == expect);
    }
    CHECK_NOTHROW(morph_mesh(m, f, DomainPolicy::permissive));
  }

  TEST_CASE("VTK round trip") {
    const auto dir = testing::scratch_dir("vtk_rt");
    HexMesh m = sample_mesh();
    std::mt19937_64 rng(1);
    for (Vec3& p : m.nodes) p += testing::random_point(rng, -0.1, 0.1);
    save_vtk(m, dir / "m.vtk");
    const HexMesh back = load_vtk(dir / "m.vtk");
    CHECK(back.nodes == m.nodes);
    CHECK(back.elements == m.elements);
    REQUIRE(back.label_arrays.size() == 2);
    CHECK(back.label_arrays[0].name == "material");
    CHECK(back.label_arrays[0].mode == "centroid");
    CHECK(back.label_arrays[0].values == m.label_arrays[0].values);
    CHECK(back.label_arrays[1].mode.empty());
    save_vtk(back, dir / "again.vtk");
    CHECK(slurp(dir / "m.vtk") == slurp(dir / "again.vtk"));

    save_vtk(morph_mesh(back, AffineTransform::identity()), dir / "identity.vtk");
    CHECK(slurp(dir / "identity.vtk") == slurp(dir / "m.vtk"));
  }

  TEST_CASE("VTK reader tolerates foreign attributes and rejects what it cannot model") {
    const auto dir = testing::scratch_dir("vtk_in");
    const std::string head =
        "# vtk DataFile Version 2.0\nfrom elsewhere\nASCII\nDATASET UNSTRUCTURED_GRID\n"
        "POINTS 8 float\n0 0 0 1 0 0 1 1 0 0 1 0\n0 0 1 1 0 1 1 1 1 0 1 1\n";
    write(dir / "ok.vtk", head +
                              "CELLS 1 9\n8 0 1 2 3 4 5 6 7\nCELL_TYPES 1\n12\n"
                              "POINT_DATA 8\nSCALARS temp float 1\nLOOKUP_TABLE default\n1 2 3 4 5 6 7 8\n"
                              "VECTORS v float\n0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0\n"
                              "CELL_DATA 1\nSCALARS tissue int\nLOOKUP_TABLE default\n4\n");
    const HexMesh ok = load_vtk(dir / "ok.vtk");
    CHECK(ok.nodes.size() == 8);
    REQUIRE(ok.find_labels("tissue") != nullptr);
    CHECK(ok.find_labels("tissue")->values == std::vector<std::int32_t>{4});

    write(dir / "tet.vtk", head + "CELLS 2 14\n8 0 1 2 3 4 5 6 7\n4 0 1 2 4\nCELL_TYPES 2\n12\n10\n");
    try {
      load_vtk(dir / "tet.vtk");
      FAIL("expected unsupported");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unsupported);
      CHECK(e.indices() == std::vector<std::int64_t>{1});
    }

    write(dir / "count.vtk", head + "CELLS 1 9\n8 0 1 2 3 4 5 6 7\nCELL_TYPES 2\n12\n12\n");
    CHECK_THROWS_AS(load_vtk(dir / "count.vtk"), Error);
    write(dir / "short.vtk", "# vtk DataFile Version 2.0\nx\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 8 float\n0 0 0\n");
    CHECK_THROWS_AS(load_vtk(dir / "short.vtk"), Error);
    write(dir / "bin.vtk", "# vtk DataFile Version 2.0\nx\nBINARY\nDATASET UNSTRUCTURED_GRID\n");
    try {
      load_vtk(dir / "bin.vtk");
      FAIL("expected unsupported");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unsupported);
    }
  }
}
