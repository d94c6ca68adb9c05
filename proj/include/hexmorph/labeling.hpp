#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "hexmorph/mesh.hpp"
#include "hexmorph/octree.hpp"
#include "hexmorph/volume.hpp"

namespace hexmorph {

// centroid: label of the voxel center nearest the element centroid.
// vote: majority over the 8 corners and the centroid, ties to the smaller label.
enum class LabelMode { centroid, vote };

const char* to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view text);

// Octree over the centers of voxels lying inside `region`.
PointOctree label_octree(const ImageVolume& labels, const Box3& region);

struct LabelingStats {
  std::size_t indexed_voxels = 0;
  std::size_t queries = 0;
  std::size_t nodes_visited = 0;
  std::size_t points_tested = 0;
};

// Writes (or overwrites) label array `array_name`. Only voxels inside the
// mesh bounding box grown by one voxel diagonal are searched.
HexMesh label_mesh(const HexMesh& mesh, const ImageVolume& labels, LabelMode mode,
                   const std::string& array_name, LabelingStats* stats = nullptr);

}  // namespace hexmorph
