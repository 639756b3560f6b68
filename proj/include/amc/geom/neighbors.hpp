#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amc/geom/point_cloud.hpp"

namespace amc::geom {

/// K nearest neighbors of an anchor, ascending by (squared distance, index).
/// The anchor is always first.
struct NeighborList {
  std::size_t anchor = 0;
  std::vector<std::size_t> neighbors;
  std::vector<double> sq_distances;
};

/// Clouds larger than this are searched through a kd-tree.
inline constexpr std::size_t kKdTreeThreshold = 4096;

enum class SearchMethod { Auto, BruteForce, KdTree };

/// Exact k-nearest-neighbor search over a fixed position set. Ties are
/// broken by ascending point index, so brute force and kd-tree agree
/// bit-for-bit.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 8);

  std::size_t size() const { return points_.size(); }

  /// K nearest points to `query`, ascending by (distance, index).
  void query(const Vec3& query, std::size_t k, std::vector<std::size_t>& indices,
             std::vector<double>& sq_distances) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// K nearest points of `points` to an arbitrary query position using a full
/// scan. Requires 1 <= k <= points.size().
void knn_brute_force(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                     std::vector<std::size_t>& indices, std::vector<double>& sq_distances);

/// Neighbor list of `anchor` within `points`; dispatches to a kd-tree above
/// kKdTreeThreshold unless a method is forced.
NeighborList knn(std::span<const Vec3> points, std::size_t anchor, std::size_t k,
                 SearchMethod method = SearchMethod::Auto);
NeighborList knn(const PointCloud& cloud, std::size_t anchor, std::size_t k,
                 SearchMethod method = SearchMethod::Auto);

/// Neighbor lists for every point, sharing one index when the kd-tree path
/// is taken.
std::vector<NeighborList> knn_all(std::span<const Vec3> points, std::size_t k,
                                  SearchMethod method = SearchMethod::Auto);

/// For each query, the K nearest entries of `points` (indices only).
std::vector<std::vector<std::size_t>> knn_queries(std::span<const Vec3> points,
                                                  std::span<const Vec3> queries, std::size_t k,
                                                  SearchMethod method = SearchMethod::Auto);

/// Greedy farthest point sampling. Each step picks the point with the
/// largest minimum squared distance to the chosen set, ties to the lower
/// index.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t m,
                                                 std::size_t start = 0);
std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t m, std::size_t start = 0);

}  // namespace amc::geom
