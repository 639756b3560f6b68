#include "amc/geom/neighbors.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>

namespace amc::geom {

namespace {

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

void check_k(std::size_t k, std::size_t n) {
  if (k == 0 || k > n) {
    throw std::invalid_argument("knn: K=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
}

void unpack(std::vector<Candidate>& best, std::vector<std::size_t>& indices, std::vector<double>& sq_distances) {
  std::sort(best.begin(), best.end());
  indices.resize(best.size());
  sq_distances.resize(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) {
    sq_distances[i] = best[i].first;
    indices[i] = best[i].second;
  }
}

// Duplicates of the anchor at distance zero with a lower index sort ahead
// of it; the anchor is moved to the front (and kept when it fell outside K).
void pin_anchor(NeighborList& nl) {
  auto it = std::find(nl.neighbors.begin(), nl.neighbors.end(), nl.anchor);
  if (it == nl.neighbors.end()) {
    nl.neighbors.back() = nl.anchor;
    nl.sq_distances.back() = 0.0;
    it = nl.neighbors.end() - 1;
  }
  for (auto pos = static_cast<std::size_t>(it - nl.neighbors.begin()); pos > 0; --pos) {
    std::swap(nl.neighbors[pos], nl.neighbors[pos - 1]);
    std::swap(nl.sq_distances[pos], nl.sq_distances[pos - 1]);
  }
}

bool use_tree(SearchMethod method, std::size_t n) {
  switch (method) {
    case SearchMethod::BruteForce:
      return false;
    case SearchMethod::KdTree:
      return true;
    case SearchMethod::Auto:
      break;
  }
  return n > kKdTreeThreshold;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), order_(points.size()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points_.empty()) {
    throw std::invalid_argument("KdTree: empty point set");
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    order_[i] = i;
  }
  nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
  build(0, points_.size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) {
    return id;
  }

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) {
      axis = a;
    }
  }
  if (hi[axis] == lo[axis]) {
    return id;  // all coincident: keep as leaf
  }

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];

  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::query(const Vec3& query, std::size_t k, std::vector<std::size_t>& indices,
                   std::vector<double>& sq_distances) const {
  check_k(k, points_.size());
  std::priority_queue<Candidate> heap;  // max-heap: top is the current worst

  auto offer = [&](std::size_t idx) {
    const Candidate c{squared_distance(points_[idx], query), idx};
    if (heap.size() < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  // Explicit stack of (node, lower bound on squared distance to its region).
  std::vector<std::pair<std::size_t, double>> stack;
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    // Equal bounds are still visited: a tied candidate with a lower index
    // may live there.
    if (heap.size() == k && bound > heap.top().first) {
      continue;
    }
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        offer(order_[i]);
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const double plane = diff * diff;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, plane));
    stack.emplace_back(near, bound);
  }

  std::vector<Candidate> best;
  best.reserve(heap.size());
  while (!heap.empty()) {
    best.push_back(heap.top());
    heap.pop();
  }
  unpack(best, indices, sq_distances);
}

void knn_brute_force(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                     std::vector<std::size_t>& indices, std::vector<double>& sq_distances) {
  check_k(k, points.size());
  std::vector<Candidate> all(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all[i] = {squared_distance(points[i], query), i};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  all.resize(k);
  unpack(all, indices, sq_distances);
}

NeighborList knn(std::span<const Vec3> points, std::size_t anchor, std::size_t k, SearchMethod method) {
  if (anchor >= points.size()) {
    throw std::invalid_argument("knn: anchor " + std::to_string(anchor) + " out of range for " +
                                std::to_string(points.size()) + " points");
  }
  check_k(k, points.size());
  NeighborList out;
  out.anchor = anchor;
  if (use_tree(method, points.size())) {
    KdTree tree(points);
    tree.query(points[anchor], k, out.neighbors, out.sq_distances);
  } else {
    knn_brute_force(points, points[anchor], k, out.neighbors, out.sq_distances);
  }
  pin_anchor(out);
  return out;
}

NeighborList knn(const PointCloud& cloud, std::size_t anchor, std::size_t k, SearchMethod method) {
  return knn(std::span<const Vec3>(cloud.positions()), anchor, k, method);
}

std::vector<NeighborList> knn_all(std::span<const Vec3> points, std::size_t k, SearchMethod method) {
  check_k(k, points.size());
  std::vector<NeighborList> out(points.size());
  if (use_tree(method, points.size())) {
    const KdTree tree(points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      NeighborList nl;
      nl.anchor = i;
      tree.query(points[i], k, nl.neighbors, nl.sq_distances);
      out[i] = std::move(nl);
    }
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) {
      NeighborList nl;
      nl.anchor = i;
      knn_brute_force(points, points[i], k, nl.neighbors, nl.sq_distances);
      out[i] = std::move(nl);
    }
  }
  for (auto& nl : out) {
    pin_anchor(nl);
  }
  return out;
}

std::vector<std::vector<std::size_t>> knn_queries(std::span<const Vec3> points, std::span<const Vec3> queries,
                                                  std::size_t k, SearchMethod method) {
  check_k(k, points.size());
  std::vector<std::vector<std::size_t>> out(queries.size());
  std::vector<double> d2;
  if (use_tree(method, points.size())) {
    const KdTree tree(points);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      tree.query(queries[i], k, out[i], d2);
    }
  } else {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      knn_brute_force(points, queries[i], k, out[i], d2);
    }
  }
  return out;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t m, std::size_t start) {
  const std::size_t n = points.size();
  if (m == 0 || m > n) {
    throw std::invalid_argument("fps: m=" + std::to_string(m) + " must lie in [1, " + std::to_string(n) + "]");
  }
  if (start >= n) {
    throw std::invalid_argument("fps: start index " + std::to_string(start) + " out of range");
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t step = 0; step < m; ++step) {
    chosen.push_back(current);
    min_d2[current] = -1.0;  // chosen points never win again
    std::size_t best = 0;
    double best_d2 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] < 0.0) {
        continue;
      }
      const double d2 = squared_distance(points[i], points[current]);
      if (d2 < min_d2[i]) {
        min_d2[i] = d2;
      }
      if (min_d2[i] > best_d2) {  // strict: ties keep the lower index
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return chosen;
}

std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t m, std::size_t start) {
  return farthest_point_sampling(cloud.positions(), m, start);
}

}  // namespace amc::geom
