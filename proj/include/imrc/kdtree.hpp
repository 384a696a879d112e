// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "imrc/core.hpp"

namespace imrc {

// Static kd-tree over a fixed point set, built once, queried for exact
// nearest neighbours. Splits on the widest axis of each node's bounding box
// at the median point, so the tree stays balanced for any input order.
class KdTree {
public:
  struct Hit {
    std::size_t index = 0;  // index into the original point array
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(points_.size());
    if (!points_.empty()) root_ = build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  // Exact nearest neighbour. Throws SearchError on an empty tree.
  Hit nearest(const Vec3& q) const {
    if (empty()) throw SearchError("KdTree::nearest: tree is empty");
    Hit best;
    search(root_, q, best);
    return best;
  }

private:
  struct Node {
    std::size_t point = 0;  // index into order_ (leaf payload and split point)
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int8_t axis = 0;
    double split = 0.0;
  };

  static double component(const Vec3& v, int axis) {
    return axis == 0 ? v.x : (axis == 1 ? v.y : v.z);
  }

  std::int32_t build(std::size_t begin, std::size_t end) {
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const Vec3& p = points_[order_[i]];
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y > component(ext, axis)) axis = 1;
    if (ext.z > component(ext, axis)) axis = 2;

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return component(points_[a], axis) < component(points_[b], axis);
                     });

    Node node;
    node.point = order_[mid];
    node.axis = static_cast<std::int8_t>(axis);
    node.split = component(points_[order_[mid]], axis);
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (mid > begin) nodes_[id].left = build(begin, mid);
    if (mid + 1 < end) nodes_[id].right = build(mid + 1, end);
    return id;
  }

  void search(std::int32_t id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[id];
    const double d2 = norm_sq(points_[node.point] - q);
    if (d2 < best.dist_sq) best = {node.point, d2};

    const double diff = component(q, node.axis) - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    if (near >= 0) search(near, q, best);
    if (far >= 0 && diff * diff < best.dist_sq) search(far, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// Reference nearest neighbour by exhaustive scan; the correctness oracle for
// KdTree::nearest. Distances agree exactly; indices agree whenever the
// nearest point is unique (equidistant ties may resolve differently).
inline KdTree::Hit brute_force_nearest(const std::vector<Vec3>& points, const Vec3& q) {
  if (points.empty()) throw SearchError("brute_force_nearest: empty point set");
  KdTree::Hit best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = norm_sq(points[i] - q);
    if (d2 < best.dist_sq) best = {i, d2};
  }
  return best;
}

}  // namespace imrc
