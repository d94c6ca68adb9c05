#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hexmorph/geometry.hpp"
#include "hexmorph/transforms.hpp"
#include "hexmorph/volume.hpp"

namespace hexmorph {

// Node indices in VTK hexahedron order: bottom face 0-3 counter-clockwise
// seen from above, then top face 4-7 aligned with it.
using HexElement = std::array<std::int64_t, 8>;

struct LabelArray {
  std::string name;
  std::vector<std::int32_t> values;  // one per element
  std::string mode;                  // how it was produced, e.g. "centroid"; may be empty
};

struct HexMesh {
  std::vector<Vec3> nodes;
  std::vector<HexElement> elements;
  std::vector<LabelArray> label_arrays;

  const LabelArray* find_labels(const std::string& name) const;

  // Adds or overwrites a label array, keeping the position of an existing one.
  void set_labels(LabelArray array);

  // Throws format error on bad indices, repeated nodes or label-count mismatch.
  void validate() const;

  std::array<Vec3, 8> corners(std::size_t e) const;
};

Vec3 element_centroid(const HexMesh& mesh, std::size_t e);

// One hex per block^3 voxel cluster with at least half its voxels set.
// Nodes sit on voxel corners and are shared through integer lattice keys.
HexMesh overlay_grid_mesh(const BinaryMask& mask, int block);

// New node coordinates apply_transform(t, node); everything else is copied.
// Strict mode collects every out-of-domain node into one error.
HexMesh morph_mesh(const HexMesh& mesh, const Transform& t, DomainPolicy policy = DomainPolicy::permissive);

// Legacy ASCII VTK unstructured grid restricted to hexahedra (cell type 12)
// with integer CELL_DATA scalars as label arrays. Label-array modes are
// stored in the title line.
HexMesh load_vtk(const std::filesystem::path& path);
void save_vtk(const HexMesh& mesh, const std::filesystem::path& path);

}  // namespace hexmorph
