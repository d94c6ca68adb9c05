#include "hexmorph/labeling.hpp"

#include <map>

#include "hexmorph/errors.hpp"

namespace hexmorph {

const char* to_string(LabelMode mode) {
  return mode == LabelMode::centroid ? "centroid" : "vote";
}

LabelMode parse_label_mode(std::string_view text) {
  if (text == "centroid") return LabelMode::centroid;
  if (text == "vote") return LabelMode::vote;
  throw Error(ErrorKind::config, "unknown labeling mode '" + std::string(text) + "'");
}

PointOctree label_octree(const ImageVolume& labels, const Box3& region) {
  const Geometry& g = labels.geometry();
  const Dims3& d = g.dims();
  std::vector<Vec3> points;
  std::vector<std::int32_t> values;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const Vec3 p = g.voxel_center(i, j, k);
        if (!region.contains(p)) continue;
        points.push_back(p);
        values.push_back(static_cast<std::int32_t>(labels.at(i, j, k)));
      }
  if (points.empty()) throw Error(ErrorKind::out_of_domain, "label volume does not overlap the mesh");
  return PointOctree(std::move(points), std::move(values));
}

HexMesh label_mesh(const HexMesh& mesh, const ImageVolume& labels, LabelMode mode,
                   const std::string& array_name, LabelingStats* stats) {
  if (labels.kind() != VolumeKind::label) throw Error(ErrorKind::format, "labeling needs a label volume");
  if (array_name.empty()) throw Error(ErrorKind::config, "label array name is empty");
  mesh.validate();
  if (mesh.elements.empty()) throw Error(ErrorKind::degenerate_input, "mesh has no elements");

  Box3 region = Box3::empty_box();
  for (const Vec3& p : mesh.nodes) region.expand(p);
  const double grow = labels.geometry().spacing().norm();
  region.lo.array() -= grow;
  region.hi.array() += grow;
  const PointOctree tree = label_octree(labels, region);

  LabelingStats local;
  local.indexed_voxels = tree.points().size();
  auto lookup = [&](const Vec3& p) {
    PointOctree::QueryStats qs;
    const auto hit = tree.nearest(p, &qs);
    ++local.queries;
    local.nodes_visited += qs.nodes_visited;
    local.points_tested += qs.points_tested;
    return tree.labels()[hit.index];
  };

  LabelArray out{array_name, {}, to_string(mode)};
  out.values.reserve(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    if (mode == LabelMode::centroid) {
      out.values.push_back(lookup(element_centroid(mesh, e)));
      continue;
    }
    std::map<std::int32_t, int> votes;
    for (const Vec3& c : mesh.corners(e)) ++votes[lookup(c)];
    ++votes[lookup(element_centroid(mesh, e))];
    // std::map iterates ascending, so strict > keeps the smaller label on ties.
    std::int32_t best = votes.begin()->first;
    int best_count = 0;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    out.values.push_back(best);
  }

  HexMesh result = mesh;
  result.set_labels(std::move(out));
  if (stats) *stats = local;
  return result;
}

}  // namespace hexmorph
