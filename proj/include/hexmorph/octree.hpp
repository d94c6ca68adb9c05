#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hexmorph/geometry.hpp"

namespace hexmorph {

// Point locator with midpoint subdivision. A point on a split plane goes to
// the lower child, so every leaf box is closed and holds its points.
class PointOctree {
 public:
  struct Options {
    std::size_t max_points_per_leaf = 32;
    int max_depth = 12;
  };

  struct Node {
    Box3 box;
    int depth = 0;
    std::int32_t first_child = -1;  // 8 consecutive children, or -1 for a leaf
    std::uint32_t begin = 0;        // leaf range into order()
    std::uint32_t end = 0;
    bool is_leaf() const { return first_child < 0; }
  };

  struct NearestResult {
    std::size_t index = 0;
    double distance = 0.0;
  };

  struct QueryStats {
    std::size_t nodes_visited = 0;
    std::size_t points_tested = 0;
  };

  PointOctree(std::vector<Vec3> points, std::vector<std::int32_t> labels);
  PointOctree(std::vector<Vec3> points, std::vector<std::int32_t> labels, Options options);

  // Exact nearest point; equal distances resolve to the lowest index.
  NearestResult nearest(const Vec3& q, QueryStats* stats = nullptr) const;

  std::span<const Vec3> points() const { return points_; }
  std::span<const std::int32_t> labels() const { return labels_; }
  std::span<const Node> nodes() const { return nodes_; }
  // Point indices grouped by leaf.
  std::span<const std::uint32_t> order() const { return order_; }
  const Options& options() const { return options_; }

 private:
  void split(std::size_t node);

  std::vector<Vec3> points_;
  std::vector<std::int32_t> labels_;
  Options options_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

}  // namespace hexmorph
