#include "hexmorph/octree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "hexmorph/errors.hpp"

namespace hexmorph {

PointOctree::PointOctree(std::vector<Vec3> points, std::vector<std::int32_t> labels)
    : PointOctree(std::move(points), std::move(labels), Options{}) {}

PointOctree::PointOctree(std::vector<Vec3> points, std::vector<std::int32_t> labels, Options options)
    : points_(std::move(points)), labels_(std::move(labels)), options_(options) {
  if (points_.empty()) throw Error(ErrorKind::degenerate_input, "octree needs at least one point");
  if (labels_.size() != points_.size()) throw Error(ErrorKind::data, "octree labels and points differ in length");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorKind::unsupported, "too many points for the octree");
  if (options_.max_points_per_leaf < 1) options_.max_points_per_leaf = 1;

  Box3 box = Box3::empty_box();
  for (const Vec3& p : points_) {
    if (!p.allFinite()) throw Error(ErrorKind::data, "non-finite point in octree input");
    box.expand(p);
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.push_back({box, 0, -1, 0, static_cast<std::uint32_t>(points_.size())});
  split(0);
}

void PointOctree::split(std::size_t node) {
  const Node n = nodes_[node];
  const std::size_t count = n.end - n.begin;
  if (count <= options_.max_points_per_leaf || n.depth >= options_.max_depth) return;

  const Vec3 mid = 0.5 * (n.box.lo + n.box.hi);
  auto octant = [&](std::uint32_t idx) {
    const Vec3& p = points_[idx];
    return (p.x() > mid.x() ? 1 : 0) | (p.y() > mid.y() ? 2 : 0) | (p.z() > mid.z() ? 4 : 0);
  };
  // Stable bucketing keeps the layout a function of input order.
  std::array<std::vector<std::uint32_t>, 8> buckets;
  for (std::uint32_t i = n.begin; i < n.end; ++i) buckets[static_cast<std::size_t>(octant(order_[i]))].push_back(order_[i]);

  const auto first = static_cast<std::int32_t>(nodes_.size());
  nodes_[node].first_child = first;
  std::uint32_t cursor = n.begin;
  for (int c = 0; c < 8; ++c) {
    Node child;
    child.depth = n.depth + 1;
    for (int a = 0; a < 3; ++a) {
      const bool upper = (c >> a) & 1;
      child.box.lo[a] = upper ? mid[a] : n.box.lo[a];
      child.box.hi[a] = upper ? n.box.hi[a] : mid[a];
    }
    child.begin = cursor;
    for (std::uint32_t idx : buckets[static_cast<std::size_t>(c)]) order_[cursor++] = idx;
    child.end = cursor;
    nodes_.push_back(child);
  }
  for (int c = 0; c < 8; ++c) split(static_cast<std::size_t>(first + c));
}

PointOctree::NearestResult PointOctree::nearest(const Vec3& q, QueryStats* stats) const {
  struct Entry {
    double d2;
    std::uint32_t node;
    bool operator>(const Entry& o) const { return d2 > o.d2 || (d2 == o.d2 && node > o.node); }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  queue.push({nodes_[0].box.squared_distance_to(q), 0});

  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = points_.size();
  QueryStats local;
  while (!queue.empty()) {
    const Entry top = queue.top();
    queue.pop();
    // A box at exactly best_d2 may still hold a lower-index tie.
    if (top.d2 > best_d2) break;
    const Node& n = nodes_[top.node];
    ++local.nodes_visited;
    if (n.is_leaf()) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        ++local.points_tested;
        const double d2 = squared_distance(points_[idx], q);
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
    } else {
      for (int c = 0; c < 8; ++c) {
        const auto child = static_cast<std::uint32_t>(n.first_child + c);
        const Node& cn = nodes_[child];
        if (cn.begin == cn.end) continue;
        const double d2 = cn.box.squared_distance_to(q);
        if (d2 <= best_d2) queue.push({d2, child});
      }
    }
  }
  if (stats) *stats = local;
  return {best, std::sqrt(best_d2)};
}

}  // namespace hexmorph
