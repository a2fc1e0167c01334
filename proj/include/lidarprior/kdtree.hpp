/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDARPRIOR_KDTREE_HPP
#define LIDARPRIOR_KDTREE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "lidarprior/core.hpp"

namespace lidarprior {

/**
 * Static 3-d tree over a borrowed point array. The referenced points must
 * outlive the tree. Queries are read-only and safe to run concurrently.
 */
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 12)
      : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    order_.resize(points.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    if (!order_.empty()) {
      nodes_.reserve(2 * order_.size() / leaf_size_ + 2);
      build(0, order_.size());
    }
  }

  std::size_t size() const { return points_.size(); }

  /// Indices of all points with squared distance <= radius^2, unordered.
  void radius_search(const Point3& q, double radius, std::vector<std::uint32_t>& out) const {
    out.clear();
    if (nodes_.empty()) return;
    const double r2 = radius * radius;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (n.axis < 0) {
        for (std::uint32_t i = n.begin; i < n.end; ++i) {
          const std::uint32_t idx = order_[i];
          if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
        }
        continue;
      }
      const double diff = q[n.axis] - n.split;
      const std::uint32_t near = diff <= 0.0 ? n.left : n.right;
      const std::uint32_t far = diff <= 0.0 ? n.right : n.left;
      if (diff * diff <= r2) stack[top++] = far;
      stack[top++] = near;
    }
  }

  /// k nearest neighbours sorted by distance (ties by index).
  std::vector<std::pair<double, std::uint32_t>> knn(const Point3& q, std::size_t k) const {
    std::vector<std::pair<double, std::uint32_t>> heap;  // max-heap on (d2, idx)
    if (nodes_.empty() || k == 0) return heap;
    heap.reserve(k + 1);
    knn_recurse(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0;
  };

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= leaf_size_) {
      nodes_[id].begin = static_cast<std::uint32_t>(begin);
      nodes_[id].end = static_cast<std::uint32_t>(end);
      return id;
    }
    Point3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const double split = points_[order_[mid]][axis];
    const std::uint32_t l = build(begin, mid);
    const std::uint32_t r = build(mid, end);
    Node& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = l;
    n.right = r;
    return id;
  }

  void knn_recurse(std::uint32_t node, const Point3& q, std::size_t k,
                   std::vector<std::pair<double, std::uint32_t>>& heap) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        const std::pair<double, std::uint32_t> cand{(points_[idx] - q).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::uint32_t near = diff <= 0.0 ? n.left : n.right;
    const std::uint32_t far = diff <= 0.0 ? n.right : n.left;
    knn_recurse(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().first) knn_recurse(far, q, k, heap);
  }

  std::span<const Point3> points_;
  std::size_t leaf_size_ = 12;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lidarprior

#endif  // LIDARPRIOR_KDTREE_HPP
