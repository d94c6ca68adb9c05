#include "hexmorph/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "hexmorph/errors.hpp"

namespace hexmorph {

const LabelArray* HexMesh::find_labels(const std::string& name) const {
  for (const LabelArray& a : label_arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void HexMesh::set_labels(LabelArray array) {
  for (LabelArray& a : label_arrays)
    if (a.name == array.name) {
      a = std::move(array);
      return;
    }
  label_arrays.push_back(std::move(array));
}

void HexMesh::validate() const {
  const auto n = static_cast<std::int64_t>(nodes.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    HexElement sorted = elements[e];
    for (std::int64_t id : sorted)
      if (id < 0 || id >= n)
        throw Error(ErrorKind::format, "element " + std::to_string(e) + " references missing node " + std::to_string(id),
                    {static_cast<std::int64_t>(e)});
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorKind::format, "element " + std::to_string(e) + " repeats a node", {static_cast<std::int64_t>(e)});
  }
  for (const LabelArray& a : label_arrays)
    if (a.values.size() != elements.size())
      throw Error(ErrorKind::format, "label array \"" + a.name + "\" has " + std::to_string(a.values.size()) +
                                         " entries for " + std::to_string(elements.size()) + " elements");
}

std::array<Vec3, 8> HexMesh::corners(std::size_t e) const {
  std::array<Vec3, 8> c;
  for (int k = 0; k < 8; ++k) c[static_cast<std::size_t>(k)] = nodes[static_cast<std::size_t>(elements[e][static_cast<std::size_t>(k)])];
  return c;
}

Vec3 element_centroid(const HexMesh& mesh, std::size_t e) {
  Vec3 sum = Vec3::Zero();
  for (std::int64_t id : mesh.elements[e]) sum += mesh.nodes[static_cast<std::size_t>(id)];
  return sum / 8.0;
}

HexMesh overlay_grid_mesh(const BinaryMask& mask, int block) {
  if (block < 1) throw Error(ErrorKind::config, "overlay grid block size must be >= 1");
  const Geometry& g = mask.geometry;
  const Dims3& d = g.dims();
  const std::int64_t b = block;
  const Dims3 blocks{(d[0] + b - 1) / b, (d[1] + b - 1) / b, (d[2] + b - 1) / b};
  const std::int64_t threshold_twice = b * b * b;  // set * 2 >= block^3

  // Lattice offsets in VTK order; mirrored through z for left-handed grids
  // so every element keeps a positive Jacobian in world space.
  std::array<std::array<int, 3>, 8> offsets{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                             {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};
  if (g.direction().determinant() < 0.0)
    for (auto& o : offsets) o[2] = 1 - o[2];

  HexMesh mesh;
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::int64_t> node_ids;
  for (std::int64_t bk = 0; bk < blocks[2]; ++bk)
    for (std::int64_t bj = 0; bj < blocks[1]; ++bj)
      for (std::int64_t bi = 0; bi < blocks[0]; ++bi) {
        std::int64_t set = 0;
        for (std::int64_t k = bk * b; k < std::min(d[2], (bk + 1) * b); ++k)
          for (std::int64_t j = bj * b; j < std::min(d[1], (bj + 1) * b); ++j)
            for (std::int64_t i = bi * b; i < std::min(d[0], (bi + 1) * b); ++i) set += mask.test(i, j, k) ? 1 : 0;
        if (2 * set < threshold_twice) continue;

        HexElement elem{};
        for (std::size_t c = 0; c < 8; ++c) {
          const auto key = std::make_tuple(bi + offsets[c][0], bj + offsets[c][1], bk + offsets[c][2]);
          auto [it, inserted] = node_ids.try_emplace(key, static_cast<std::int64_t>(mesh.nodes.size()));
          if (inserted) {
            const Vec3 corner(double(std::get<0>(key) * b) - 0.5, double(std::get<1>(key) * b) - 0.5,
                              double(std::get<2>(key) * b) - 0.5);
            mesh.nodes.push_back(g.index_to_world(corner));
          }
          elem[c] = it->second;
        }
        mesh.elements.push_back(elem);
      }
  if (mesh.elements.empty())
    throw Error(ErrorKind::degenerate_input, "overlay grid produced no elements (mask empty at this block size)");
  return mesh;
}

HexMesh morph_mesh(const HexMesh& mesh, const Transform& t, DomainPolicy policy) {
  HexMesh out = mesh;
  std::vector<std::int64_t> outside;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    try {
      out.nodes[n] = apply_transform(t, mesh.nodes[n], policy);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::out_of_domain) throw;
      outside.push_back(static_cast<std::int64_t>(n));
    }
  }
  if (!outside.empty()) {
    std::string list;
    for (std::size_t i = 0; i < outside.size() && i < 20; ++i) list += (i ? ", " : "") + std::to_string(outside[i]);
    if (outside.size() > 20) list += ", ...";
    throw Error(ErrorKind::out_of_domain,
                std::to_string(outside.size()) + " mesh node(s) outside the transform domain: " + list, outside);
  }
  return out;
}

}  // namespace hexmorph
